from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from errors import DomainViolation

POSITIVE_AXIS = (0.0, math.inf)
REAL_LINE = (-math.inf, math.inf)

# Built-in families and their admissible parameters.
POWER_RANGE = (-2.0, 3.0)
MAX_POLYNOMIAL_DEGREE = 6


@dataclass(frozen=True)
class ScalarFunctionSpec:
    """A named real function with its domain and the convexity facts we rely on.

    `eval` must be side-effect free and vectorized over numpy arrays; trials
    running concurrently share these specs.
    """

    name: str
    eval: Callable[[np.ndarray], np.ndarray]
    domain: tuple[float, float] = POSITIVE_AXIS
    geometrically_convex: bool = False
    operator_convex: bool = False
    monotone: bool = False
    include_lower: bool = False
    # Ordinary convexity on the part of the domain inside (0, ∞).
    convex: bool = False
    # Direct evaluation on a matrix, for polynomial and rational f.
    matrix_eval: Callable[[np.ndarray], np.ndarray] | None = None

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo, hi = self.domain
        above = x >= lo if self.include_lower else x > lo
        return above & (x < hi)

    def check_domain(self, x) -> None:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        inside = self.contains(x)
        if not np.all(inside):
            raise DomainViolation(self.name, float(x[~inside][0]), self.domain)

    def __call__(self, x):
        self.check_domain(x)
        out = self.eval(np.asarray(x, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    def renamed(self, name: str) -> "ScalarFunctionSpec":
        return replace(self, name=name)


def exp_function() -> ScalarFunctionSpec:
    return ScalarFunctionSpec("exp", np.exp, REAL_LINE, geometrically_convex=True, monotone=True, convex=True)


def cosh_function() -> ScalarFunctionSpec:
    # Nonnegative Taylor coefficients, so geometrically convex on (0, ∞).
    return ScalarFunctionSpec("cosh", np.cosh, REAL_LINE, geometrically_convex=True, convex=True)


def identity_function() -> ScalarFunctionSpec:
    return ScalarFunctionSpec("identity", lambda x: np.asarray(x, dtype=float), REAL_LINE, monotone=True, convex=True)


def log_function() -> ScalarFunctionSpec:
    return ScalarFunctionSpec("log", np.log, POSITIVE_AXIS, monotone=True)


def sqrt_function() -> ScalarFunctionSpec:
    return ScalarFunctionSpec("sqrt", np.sqrt, POSITIVE_AXIS, monotone=True, include_lower=True)


def square_function() -> ScalarFunctionSpec:
    """x² on the whole line: the operator convex function of the non-commuting chain."""
    return ScalarFunctionSpec(
        "square",
        np.square,
        REAL_LINE,
        geometrically_convex=True,
        operator_convex=True,
        convex=True,
        matrix_eval=lambda m: m @ m,
    )


def inverse_function() -> ScalarFunctionSpec:
    return ScalarFunctionSpec(
        "inverse",
        np.reciprocal,
        POSITIVE_AXIS,
        geometrically_convex=True,
        operator_convex=True,
        monotone=True,
        convex=True,
        matrix_eval=np.linalg.inv,
    )


def power(p: float) -> ScalarFunctionSpec:
    """x^p on (0, ∞); geometrically affine for every p."""
    p = float(p)
    if not POWER_RANGE[0] <= p <= POWER_RANGE[1]:
        raise ValueError(f"power exponent {p} outside {POWER_RANGE}")
    return ScalarFunctionSpec(
        f"power:{p:g}",
        lambda x: np.power(np.asarray(x, dtype=float), p),
        POSITIVE_AXIS,
        geometrically_convex=True,
        operator_convex=(1.0 <= p <= 2.0) or (-1.0 <= p <= 0.0),
        monotone=p != 0.0,
        include_lower=p > 0.0,
        convex=p >= 1.0 or p <= 0.0,
        matrix_eval=(lambda m: np.linalg.matrix_power(m, int(p))) if p.is_integer() else None,
    )


def polynomial(coeffs) -> ScalarFunctionSpec:
    """c₀ + c₁x + … with nonnegative coefficients (ascending order), degree ≤ 6."""
    coeffs = [float(c) for c in coeffs]
    if not coeffs or len(coeffs) - 1 > MAX_POLYNOMIAL_DEGREE:
        raise ValueError(f"polynomial degree must be between 0 and {MAX_POLYNOMIAL_DEGREE}")
    if any(c < 0 for c in coeffs) or not any(c > 0 for c in coeffs):
        raise ValueError("polynomial coefficients must be nonnegative and not all zero")
    c = np.array(coeffs)
    degree = int(np.max(np.nonzero(c)))
    return ScalarFunctionSpec(
        "poly:" + ",".join(f"{x:g}" for x in coeffs),
        lambda x: np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), c),
        POSITIVE_AXIS,
        geometrically_convex=True,
        operator_convex=degree <= 2,
        monotone=degree >= 1,
        convex=True,
    )


_NAMED = {
    "exp": exp_function,
    "cosh": cosh_function,
    "identity": identity_function,
    "log": log_function,
    "sqrt": sqrt_function,
    "square": square_function,
    "inverse": inverse_function,
}


def resolve_function(name: str) -> ScalarFunctionSpec:
    """Parse `exp`, `cosh`, `square`, `inverse`, `power:<p>` or `poly:<c0>,<c1>,...`."""
    key = name.strip()
    if key in _NAMED:
        return _NAMED[key]()
    family, _, args = key.partition(":")
    try:
        if family == "power" and args:
            return power(float(args))
        if family == "poly" and args:
            return polynomial([float(c) for c in args.split(",")])
    except ValueError as ex:
        raise ValueError(f"bad function '{name}': {ex}") from ex
    raise ValueError(f"unknown function '{name}'")


def built_in_functions() -> list[ScalarFunctionSpec]:
    """The geometrically convex set the campaigns sweep over."""
    return [
        exp_function(),
        cosh_function(),
        polynomial([2.0, 1.0]),
        polynomial([0.0, 1.0, 0.0, 1.0]),
        polynomial([1.0, 0.5, 0.25, 0.0, 0.0, 0.0, 0.1]),
        power(-2.0),
        power(-0.5),
        power(2.0),
        power(3.0),
    ]


# ── Pointwise algebra on specs ───────────────────────────────────────────────


def _meet(f: ScalarFunctionSpec, g: ScalarFunctionSpec) -> tuple[float, float]:
    return (max(f.domain[0], g.domain[0]), min(f.domain[1], g.domain[1]))


def log_of(f: ScalarFunctionSpec) -> ScalarFunctionSpec:
    return ScalarFunctionSpec(f"log∘{f.name}", lambda x: np.log(f.eval(x)), f.domain)


def product_of(f: ScalarFunctionSpec, g: ScalarFunctionSpec) -> ScalarFunctionSpec:
    return ScalarFunctionSpec(
        f"({f.name})·({g.name})",
        lambda x: f.eval(x) * g.eval(x),
        _meet(f, g),
        geometrically_convex=f.geometrically_convex and g.geometrically_convex,
    )


def sum_of(f: ScalarFunctionSpec, g: ScalarFunctionSpec) -> ScalarFunctionSpec:
    return ScalarFunctionSpec(
        f"({f.name})+({g.name})",
        lambda x: f.eval(x) + g.eval(x),
        _meet(f, g),
        geometrically_convex=f.geometrically_convex and g.geometrically_convex,
    )


def scaled_by(f: ScalarFunctionSpec, m: float) -> ScalarFunctionSpec:
    if m <= 0:
        raise ValueError("scalar multiple must be positive")
    return ScalarFunctionSpec(
        f"{m:g}·({f.name})", lambda x: m * f.eval(x), f.domain,
        geometrically_convex=f.geometrically_convex,
    )


def times_identity(f: ScalarFunctionSpec) -> ScalarFunctionSpec:
    """t ↦ t·f(t), restricted to the positive axis."""
    return ScalarFunctionSpec(
        f"t·({f.name})",
        lambda x: np.asarray(x, dtype=float) * f.eval(x),
        (max(0.0, f.domain[0]), f.domain[1]),
        geometrically_convex=f.geometrically_convex,
    )
