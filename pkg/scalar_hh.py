"""Scalar geometric convexity and the Hermite–Hadamard chains built on it.

Every integral over [a, b] against dt/t is evaluated in the parameterization
t = a^λ b^{1−λ}, where it becomes a plain average over λ ∈ [0, 1]. The same
Gauss–Legendre nodes serve the operator module.
"""
from __future__ import annotations

import math

import numpy as np

from commuting_means import integrate_scalar, log_mean
from errors import DomainViolation
from models import ChainReport, LoewnerTolerance, QuadratureSpec, Verdict
from scalar_functions import ScalarFunctionSpec

# Relative slack for sampled geometric/midpoint convexity: Holds above -1e-10,
# Violated below -1e-9.
SAMPLED_SLACK = LoewnerTolerance(rel=0.0, abs_floor=1e-10)
MIDPOINT_GRID = 33


def _positive_values(f: ScalarFunctionSpec, x) -> np.ndarray:
    f.check_domain(x)
    values = np.asarray(f.eval(np.asarray(x, dtype=float)), dtype=float)
    bad = ~(values > 0) | ~np.isfinite(values)
    if np.any(bad):
        where = np.atleast_1d(np.asarray(x, dtype=float))[np.atleast_1d(bad)][0]
        raise DomainViolation(f.name, float(where), f.domain)
    return values


def _interval(f: ScalarFunctionSpec, a: float, b: float) -> tuple[float, float]:
    a, b = float(a), float(b)
    if not 0.0 < a < b:
        raise ValueError(f"need 0 < a < b, got a={a}, b={b}")
    _positive_values(f, [a, b])
    return a, b


def _geometric_path(a: float, b: float, lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    return a ** lam * b ** (1.0 - lam)


def _inputs(f: ScalarFunctionSpec, a: float, b: float, **extra) -> dict:
    return {"function": f.name, "a": a, "b": b, **extra}


def check_geo_convex(f: ScalarFunctionSpec, a: float, b: float, grid: int = 33) -> Verdict:
    """Sampled f(a^λ b^{1−λ}) ≤ f(a)^λ f(b)^{1−λ} on `grid` equally spaced λ.

    A Holds verdict is evidence on the stated grid, not a proof.
    """
    if grid < 3:
        raise ValueError("need at least 3 λ samples")
    a, b = float(a), float(b)
    if a <= 0 or b <= 0:
        raise DomainViolation(f.name, min(a, b), (0.0, math.inf))
    fa, fb = _positive_values(f, [a, b])
    lam = np.linspace(0.0, 1.0, grid)
    lhs = _positive_values(f, _geometric_path(a, b, lam))
    rhs = fa ** lam * fb ** (1.0 - lam)
    slack = (rhs - lhs) / np.abs(rhs)
    worst = int(np.argmin(slack))
    return Verdict.decide(
        float(slack[worst]),
        1.0,
        SAMPLED_SLACK,
        witness=lambda: _inputs(f, a, b, grid=grid),
        lhs=float(lhs[worst]),
        rhs=float(rhs[worst]),
        details={"grid": grid, "worst_lambda": float(lam[worst])},
    )


def hh_chain_basic(
    f: ScalarFunctionSpec,
    a: float,
    b: float,
    q: QuadratureSpec | None = None,
    tol: LoewnerTolerance | None = None,
) -> ChainReport:
    """Five links from f(√(ab)) up to (f(a)+f(b))/2 for geometrically convex f."""
    q = q or QuadratureSpec()
    tol = tol or LoewnerTolerance()
    a, b = _interval(f, a, b)
    fa, fb = _positive_values(f, [a, b])
    midpoint = _positive_values(f, [math.sqrt(a * b)])[0]

    def symmetric(lam):
        return np.sqrt(
            _positive_values(f, _geometric_path(a, b, lam))
            * _positive_values(f, _geometric_path(a, b, 1.0 - lam))
        )

    sym_integral = float(integrate_scalar(symmetric, q))
    log_integral = float(integrate_scalar(lambda lam: _positive_values(f, _geometric_path(a, b, lam)), q))
    return ChainReport.from_links(
        ["f(sqrt(ab))", "symmetric_integral", "log_integral", "log_mean_f", "endpoint_mean"],
        [midpoint, sym_integral, log_integral, log_mean(fa, fb), 0.5 * (fa + fb)],
        tol,
        inputs=_inputs(f, a, b, panels=q.panels, nodes=q.nodes_per_panel),
    )


def hh_refinement(
    f: ScalarFunctionSpec,
    a: float,
    b: float,
    lam: float,
    q: QuadratureSpec | None = None,
    tol: LoewnerTolerance | None = None,
) -> ChainReport:
    """f(√(ab)) ≤ √(f(a^λb^{1−λ}) f(a^{1−λ}b^λ)) ≤ √(f(a)f(b)), pointwise and λ-integrated.

    The report's links are the pointwise chain; the integrated middle and its
    own verdict sit in the verdict details, and the overall verdict needs both.
    """
    q = q or QuadratureSpec()
    tol = tol or LoewnerTolerance()
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"λ must lie in [0, 1], got {lam}")
    a, b = _interval(f, a, b)
    fa, fb = _positive_values(f, [a, b])
    left = _positive_values(f, [math.sqrt(a * b)])[0]
    right = math.sqrt(fa * fb)

    def middle(weights):
        return np.sqrt(
            _positive_values(f, _geometric_path(a, b, weights))
            * _positive_values(f, _geometric_path(a, b, 1.0 - np.asarray(weights)))
        )

    pointwise = float(middle(np.array([lam]))[0])
    integrated = float(integrate_scalar(middle, q))
    inputs = _inputs(f, a, b, lam=lam)
    report = ChainReport.from_links(["f(sqrt(ab))", "pointwise_middle", "sqrt(f(a)f(b))"],
                                    [left, pointwise, right], tol, inputs=inputs)
    nested = ChainReport.from_links(["f(sqrt(ab))", "integrated_middle", "sqrt(f(a)f(b))"],
                                    [left, integrated, right], tol, inputs=inputs)
    report.verdict = Verdict.combine(
        [report.verdict, nested.verdict],
        witness=lambda: dict(inputs),
        details={"integrated_middle": integrated, "integrated_verdict": nested.verdict.status},
    )
    return report


def hh_quarter_chain(
    f: ScalarFunctionSpec,
    a: float,
    b: float,
    q: QuadratureSpec | None = None,
    tol: LoewnerTolerance | None = None,
) -> ChainReport:
    """Quarter-point refinement: five links between f(√(ab)) and √(f(a)f(b))."""
    q = q or QuadratureSpec()
    tol = tol or LoewnerTolerance()
    a, b = _interval(f, a, b)
    fa, fb = _positive_values(f, [a, b])
    f_mid, f_q1, f_q3 = _positive_values(
        f, [math.sqrt(a * b), a ** 0.75 * b ** 0.25, a ** 0.25 * b ** 0.75]
    )
    log_average = float(
        integrate_scalar(lambda lam: np.log(_positive_values(f, _geometric_path(a, b, lam))), q)
    )
    return ChainReport.from_links(
        ["f(sqrt(ab))", "quarter_points", "exp_log_integral", "mixed_mean", "sqrt(f(a)f(b))"],
        [
            f_mid,
            math.sqrt(f_q1 * f_q3),
            math.exp(log_average),
            math.sqrt(f_mid) * fa ** 0.25 * fb ** 0.25,
            math.sqrt(fa * fb),
        ],
        tol,
        inputs=_inputs(f, a, b, panels=q.panels, nodes=q.nodes_per_panel),
    )


def hh_classical_chain(
    f: ScalarFunctionSpec,
    a: float,
    b: float,
    q: QuadratureSpec | None = None,
    tol: LoewnerTolerance | None = None,
) -> ChainReport:
    """f((a+b)/2) ≤ (1/(b−a))∫ₐᵇ f ≤ (f(a)+f(b))/2 for an ordinarily convex f."""
    q = q or QuadratureSpec()
    tol = tol or LoewnerTolerance()
    a, b = float(a), float(b)
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    if not f.convex:
        raise ValueError(f"{f.name} is not flagged convex")
    f.check_domain([a, b])
    average = float(integrate_scalar(lambda x: f.eval(x), q, (a, b))) / (b - a)
    return ChainReport.from_links(
        ["f((a+b)/2)", "average", "endpoint_mean"],
        [float(f.eval(np.array(0.5 * (a + b)))), average, 0.5 * float(f.eval(np.array(a)) + f.eval(np.array(b)))],
        tol,
        inputs=_inputs(f, a, b),
    )


def log_exp_transform(f: ScalarFunctionSpec) -> ScalarFunctionSpec:
    """F = log∘f∘exp on log(I); convex exactly when f is geometrically convex."""
    lo = max(f.domain[0], 0.0)
    hi = f.domain[1]
    domain = (math.log(lo) if lo > 0 else -math.inf, math.log(hi) if math.isfinite(hi) else math.inf)
    return ScalarFunctionSpec(
        f"log∘{f.name}∘exp",
        lambda x: np.log(f.eval(np.exp(np.asarray(x, dtype=float)))),
        domain,
        convex=f.geometrically_convex,
    )


def exp_log_transform(big_f: ScalarFunctionSpec) -> ScalarFunctionSpec:
    """f = exp∘F∘log on exp(J); geometrically convex exactly when F is convex."""
    lo, hi = big_f.domain
    return ScalarFunctionSpec(
        f"exp∘{big_f.name}∘log",
        lambda x: np.exp(big_f.eval(np.log(np.asarray(x, dtype=float)))),
        (math.exp(lo) if lo > -math.inf else 0.0, math.exp(hi) if hi < math.inf else math.inf),
        geometrically_convex=big_f.convex,
    )


def check_midpoint_convex(big_f: ScalarFunctionSpec, lo: float, hi: float,
                          grid: int = MIDPOINT_GRID) -> Verdict:
    """F((x+y)/2) ≤ (F(x)+F(y))/2 over every pair of a `grid`-point sample of [lo, hi]."""
    if grid < 3:
        raise ValueError("need at least 3 grid points")
    x = np.linspace(float(lo), float(hi), grid)
    big_f.check_domain(x)
    values = np.asarray(big_f.eval(x), dtype=float)
    mid = np.asarray(big_f.eval(0.5 * (x[:, None] + x[None, :])), dtype=float)
    chord = 0.5 * (values[:, None] + values[None, :])
    slack = (chord - mid) / np.maximum(1.0, np.abs(chord))
    i, j = np.unravel_index(int(np.argmin(slack)), slack.shape)
    return Verdict.decide(
        float(slack[i, j]),
        1.0,
        SAMPLED_SLACK,
        witness=lambda: {"function": big_f.name, "lo": lo, "hi": hi, "grid": grid},
        lhs=float(mid[i, j]),
        rhs=float(chord[i, j]),
        details={"grid": grid, "worst_pair": [float(x[i]), float(x[j])]},
    )
