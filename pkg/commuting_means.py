from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from errors import (
    BadWeight,
    DimensionMismatch,
    IllConditionedWarning,
    NotCommuting,
    NotPositive,
    NotPositiveDefinite,
    QuadratureFailure,
)
from linalg_core import (
    HermitianMatrix,
    as_complex_matrix,
    commutator_norm,
    eig_hermitian,
    psd_power,
    require_unitary,
)
from matrix_io import matrix_from_json, matrix_to_json
from models import ChainReport, LoewnerTolerance, QuadratureSpec, Verdict

# Relative gap below which the logarithmic mean falls back to the midpoint.
LOG_MEAN_NEAR_EQUAL = 1e-14
# Condition number above which the non-commuting weighted mean warns.
CONDITION_CAP = 1e8


@dataclass(frozen=True, eq=False)
class CommutingPositivePair:
    """A = U diag(a) U*, B = U diag(b) U*: commuting by construction."""

    u: np.ndarray
    a: np.ndarray
    b: np.ndarray

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def materialize(self, values) -> HermitianMatrix:
        return HermitianMatrix.from_array((self.u * np.asarray(values, dtype=float)) @ self.u.conj().T)

    def matrix_a(self) -> HermitianMatrix:
        return self.materialize(self.a)

    def matrix_b(self) -> HermitianMatrix:
        return self.materialize(self.b)

    def in_basis(self, m: Any) -> np.ndarray:
        """Diagonal of U* M U: the per-eigenvalue reading of a matrix in the shared basis."""
        arr = np.asarray(getattr(m, "array", m))
        return np.real(np.diag(self.u.conj().T @ arr @ self.u))

    def swapped(self) -> "CommutingPositivePair":
        return CommutingPositivePair(self.u, self.b, self.a)

    def commutator_norm(self) -> float:
        return commutator_norm(self.matrix_a(), self.matrix_b())

    def to_json(self) -> dict[str, Any]:
        return {
            "u": matrix_to_json(self.u),
            "a": [float(x) for x in self.a],
            "b": [float(x) for x in self.b],
        }

    @staticmethod
    def from_json(data: dict[str, Any]) -> "CommutingPositivePair":
        return make_pair(matrix_from_json(data["u"]), data["a"], data["b"])


def make_pair(u, a, b) -> CommutingPositivePair:
    u = require_unitary(u)
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    n = u.shape[0]
    if a.shape != (n,) or b.shape != (n,):
        raise DimensionMismatch(f"eigenvalue vectors must have length {n}: got {a.shape}, {b.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise NotPositive("eigenvalues must be finite")
    if np.any(a <= 0) or np.any(b <= 0):
        raise NotPositive("every eigenvalue of a commuting positive pair must be > 0")
    for arr in (u, a, b):
        arr.setflags(write=False)
    return CommutingPositivePair(u, a, b)


def pair_from_matrices(a: Any, b: Any, rtol: float = 1e-10) -> CommutingPositivePair:
    """Recover the shared eigenbasis of two commuting positive definite matrices.

    The basis comes from one decomposition of A + τB with an irrational τ, which
    separates the joint eigenvalues unless they collide.
    """
    a = HermitianMatrix.from_array(a)
    b = HermitianMatrix.from_array(b)
    if a.n != b.n:
        raise DimensionMismatch(f"cannot pair {a.n}x{a.n} with {b.n}x{b.n}")
    scale = max(1.0, a.frobenius(), b.frobenius())
    if commutator_norm(a, b) > rtol * scale * scale:
        raise NotCommuting(f"‖AB − BA‖_F = {commutator_norm(a, b):.3e}")
    d = eig_hermitian(a.array + (math.pi / 3.0) * b.array)
    u = np.array(d.u)
    lam_a = np.real(np.diag(u.conj().T @ a.array @ u))
    lam_b = np.real(np.diag(u.conj().T @ b.array @ u))
    residual = max(
        np.linalg.norm((u * lam_a) @ u.conj().T - a.array),
        np.linalg.norm((u * lam_b) @ u.conj().T - b.array),
    )
    if residual > 1e3 * rtol * scale:
        raise NotCommuting(f"no shared eigenbasis found (residual {residual:.3e})")
    return make_pair(u, lam_a, lam_b)


def _check_weight(lam: float) -> float:
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise BadWeight(f"weight must lie in [0, 1], got {lam}")
    return lam


def geometric_values(p: CommutingPositivePair, lam: float) -> np.ndarray:
    """aᵢ^λ bᵢ^{1−λ}, the spectrum of A^λB^{1−λ} in shared-index order."""
    lam = _check_weight(lam)
    return p.a ** lam * p.b ** (1.0 - lam)


def weighted_geometric(p: CommutingPositivePair, lam: float) -> HermitianMatrix:
    """A^λ B^{1−λ} = U diag(aᵢ^λ bᵢ^{1−λ}) U*."""
    return p.materialize(geometric_values(p, lam))


def log_mean(a: float, b: float) -> float:
    """L(a, b) = (b − a)/(ln b − ln a), with L(a, a) = a."""
    a, b = float(a), float(b)
    if a <= 0 or b <= 0:
        raise NotPositive(f"logarithmic mean needs positive arguments, got {a}, {b}")
    lo, hi = min(a, b), max(a, b)
    if hi - lo <= LOG_MEAN_NEAR_EQUAL * hi:
        return 0.5 * (a + b)
    # hi - lo is exact for nearby arguments, and log1p keeps the small
    # denominator accurate where ln(hi) - ln(lo) would cancel.
    d = hi - lo
    return d / math.log1p(d / lo)


def log_mean_array(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a <= 0) or np.any(b <= 0):
        raise NotPositive("logarithmic mean needs positive arguments")
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    d = hi - lo
    near = d <= LOG_MEAN_NEAR_EQUAL * hi
    out = 0.5 * (a + b)
    far = ~near
    out[far] = d[far] / np.log1p(d[far] / lo[far])
    return out


def mean_chain(a: float, b: float, tol: LoewnerTolerance | None = None) -> ChainReport:
    """min ≤ G ≤ L ≤ A ≤ max for positive numbers."""
    tol = tol or LoewnerTolerance()
    return ChainReport.from_links(
        ["min", "geometric", "logarithmic", "arithmetic", "max"],
        [min(a, b), math.sqrt(a * b), log_mean(a, b), 0.5 * (a + b), max(a, b)],
        tol,
        inputs={"a": a, "b": b},
    )


def integrate_curve(
    g: Callable[[float], Any],
    q: QuadratureSpec | None = None,
    interval: tuple[float, float] = (0.0, 1.0),
) -> HermitianMatrix:
    """∫ g(t) dt over `interval` for a Hermitian-valued g, composite Gauss–Legendre.

    `g` must be side-effect free; node evaluations are independent.
    """
    q = q or QuadratureSpec()
    points, weights = q.nodes(*interval)
    total = None
    for t, w in zip(points, weights):
        value = _value(g, t).astype(complex)
        total = w * value if total is None else total + w * value
    if not np.all(np.isfinite(total)):
        raise QuadratureFailure(f"integrand is not finite on {interval}")
    return HermitianMatrix.from_array(total)


def integrate_nodes(
    g: Callable[[np.ndarray], Sequence[Any]],
    q: QuadratureSpec | None = None,
    interval: tuple[float, float] = (0.0, 1.0),
) -> HermitianMatrix:
    """`integrate_curve` for a g that takes every node at once and returns one matrix per node."""
    q = q or QuadratureSpec()
    points, weights = q.nodes(*interval)
    values = [np.asarray(getattr(m, "array", m), dtype=complex) for m in g(points)]
    if len(values) != len(points):
        raise QuadratureFailure(f"integrand returned {len(values)} values for {len(points)} nodes")
    total = np.tensordot(weights, np.stack(values), axes=1)
    if not np.all(np.isfinite(total)):
        raise QuadratureFailure(f"integrand is not finite on {interval}")
    return HermitianMatrix.from_array(total)


def _value(g: Callable[[float], Any], t: float) -> np.ndarray:
    out = g(float(t))
    return np.asarray(getattr(out, "array", out))


def quadrature_error(
    g: Callable[[float], Any],
    q: QuadratureSpec | None = None,
    interval: tuple[float, float] = (0.0, 1.0),
) -> float:
    """‖result(q) − result(q with panels doubled)‖_F."""
    q = q or QuadratureSpec()
    coarse = integrate_curve(g, q, interval).array
    fine = integrate_curve(g, q.doubled(), interval).array
    return float(np.linalg.norm(coarse - fine))


def integrate_scalar(
    g: Callable[[np.ndarray], np.ndarray],
    q: QuadratureSpec | None = None,
    interval: tuple[float, float] = (0.0, 1.0),
) -> np.ndarray:
    """Vectorized scalar route: g maps the node vector to values of shape (nodes, ...)."""
    q = q or QuadratureSpec()
    points, weights = q.nodes(*interval)
    values = np.asarray(g(points), dtype=float)
    if not np.all(np.isfinite(values)):
        raise QuadratureFailure(f"integrand is not finite on {interval}")
    return np.tensordot(weights, values, axes=(0, 0))


def weighted_geometric_integral_closed_form(p: CommutingPositivePair) -> HermitianMatrix:
    """∫₀¹ A^t B^{1−t} dt = U diag(L(aᵢ, bᵢ)) U*."""
    return p.materialize(log_mean_array(p.a, p.b))


def agm_weighted_mean(a: Any, b: Any, nu: float) -> HermitianMatrix:
    """A^{1/2}(A^{−1/2} B A^{−1/2})^ν A^{1/2}; A and B need not commute."""
    nu = _check_weight(nu)
    a = HermitianMatrix.from_array(a)
    b = HermitianMatrix.from_array(b)
    if a.n != b.n:
        raise DimensionMismatch(f"cannot combine {a.n}x{a.n} with {b.n}x{b.n}")
    da = eig_hermitian(a)
    db = eig_hermitian(b)
    for name, d in (("A", da), ("B", db)):
        if d.lam[0] <= 0:
            raise NotPositiveDefinite(f"{name} is not positive definite (λ_min = {d.lam[0]:.3e})")
        if d.lam[-1] / d.lam[0] > CONDITION_CAP:
            warnings.warn(
                f"{name} has condition number {d.lam[-1] / d.lam[0]:.2e} above {CONDITION_CAP:.0e}",
                IllConditionedWarning,
                stacklevel=2,
            )
    if nu == 0.0:
        return a
    if nu == 1.0:
        return b
    root = np.sqrt(da.lam)
    a_half = da.apply(root).array
    a_inv_half = da.apply(1.0 / root).array
    inner = HermitianMatrix.from_array(a_inv_half @ b.array @ a_inv_half)
    return HermitianMatrix.from_array(a_half @ psd_power(inner, nu).array @ a_half)


def weighted_arithmetic(a: Any, b: Any, nu: float) -> HermitianMatrix:
    """(1 − ν)A + νB."""
    nu = _check_weight(nu)
    return HermitianMatrix.from_array(
        (1.0 - nu) * as_complex_matrix(a) + nu * as_complex_matrix(b)
    )


def quadrature_oracle_check(p: CommutingPositivePair, q: QuadratureSpec | None = None,
                            rtol: float = 1e-11) -> Verdict:
    """Quadrature of ∫₀¹ AᵗB¹⁻ᵗ dt against U diag(L(aᵢ, bᵢ)) U*."""
    integral = integrate_curve(lambda t: weighted_geometric(p, t), q)
    closed = weighted_geometric_integral_closed_form(p)
    error = float(np.linalg.norm(integral.array - closed.array))
    scale = max(1.0, closed.frobenius())
    return Verdict.decide(
        -error,
        scale,
        LoewnerTolerance(rel=rtol, abs_floor=0.0),
        witness=lambda: {"pair": p.to_json()},
        details={"frobenius_error": error},
    )
