from __future__ import annotations


class VerificationError(Exception):
    """Base class for every failure raised by the verification library."""


class NonConvergence(VerificationError, ArithmeticError):
    def __init__(self, sweeps: int, off_norm: float, target: float):
        super().__init__(
            f"Jacobi iteration did not converge after {sweeps} sweeps "
            f"(off-diagonal mass {off_norm:.3e}, target {target:.3e})"
        )
        self.sweeps = sweeps
        self.off_norm = off_norm
        self.target = target


class DomainViolation(VerificationError, ValueError):
    def __init__(self, function: str, value: float, domain: tuple[float, float]):
        super().__init__(
            f"{function} is not defined at {value!r}: outside its domain ({domain[0]}, {domain[1]})"
        )
        self.function = function
        self.value = value
        self.domain = domain


class DimensionMismatch(VerificationError, ValueError):
    pass


class BadExponent(VerificationError, ValueError):
    pass


class BadWeight(VerificationError, ValueError):
    pass


class NotPositive(VerificationError, ValueError):
    pass


class NotPositiveDefinite(NotPositive):
    pass


class NotUnitary(VerificationError, ValueError):
    pass


class NotHermitian(VerificationError, ValueError):
    pass


class NotCommuting(VerificationError, ValueError):
    pass


class QuadratureFailure(VerificationError, ArithmeticError):
    pass


class SingularX(VerificationError, ValueError):
    pass


class EmptyList(VerificationError, ValueError):
    pass


class MatrixFormatError(VerificationError, ValueError):
    pass


class ConfigError(VerificationError, ValueError):
    pass


class IllConditionedWarning(UserWarning):
    """Raised through warnings.warn when an operand's condition number exceeds the cap."""
