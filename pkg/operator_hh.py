"""Operator geometric convexity and the operator Hermite–Hadamard chains.

Geometric convexity is only tested on commuting pairs, so every check here
takes a `CommutingPositivePair`. Each commuting chain is computed twice: once
as matrices (functional calculus through batched Jacobi decompositions of
the materialized operators) and once per eigenvalue in the shared basis. The
two must agree; a disagreement downgrades a Holds verdict to Inconclusive.

The Dragomir chain for operator convex f and the weighted AM–GM check are the
only non-commuting computations.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from commuting_means import (
    CommutingPositivePair,
    agm_weighted_mean,
    geometric_values,
    integrate_curve,
    integrate_nodes,
    integrate_scalar,
    log_mean_array,
    weighted_arithmetic,
    weighted_geometric,
    weighted_geometric_integral_closed_form,
)
from errors import DimensionMismatch, DomainViolation
from linalg_core import (
    SCHATTEN_INF,
    HermitianMatrix,
    eig_hermitian_many,
    loewner_leq,
    loewner_leq_many,
    psd_power,
    schatten_norm,
)
from models import LoewnerTolerance, QuadratureSpec, Verdict, VerdictStatus, _jsonable
from scalar_functions import (
    ScalarFunctionSpec,
    exp_function,
    product_of,
    scaled_by,
    sum_of,
    times_identity,
)

# Matrix route vs per-eigenvalue route, relative to the largest link.
TWO_ROUTE_RTOL = 1e-10
DEFAULT_LAMBDAS: tuple[float, ...] = (0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0)
MCINTOSH_SLACK = 1e-10
# Quadrature vs closed form, relative: the exponential middle link and the x² integral.
LOG_MEAN_RTOL = 1e-12
SQUARE_INTEGRAL_RTOL = 1e-11

CLOSURE_KINDS = ("sum", "scalar_multiple", "product", "t_times_f", "norm_mcintosh")


@dataclass
class OperatorChainReport:
    link_names: list[str]
    link_matrices: list[HermitianMatrix]
    pairwise_verdicts: list[Verdict]
    overall: Verdict
    inputs: dict[str, Any] = field(default_factory=dict)

    @staticmethod
    def from_links(
        names: Sequence[str],
        matrices: Sequence[Any],
        tol: LoewnerTolerance,
        inputs: dict[str, Any] | None = None,
        details: dict[str, Any] | None = None,
    ) -> "OperatorChainReport":
        if len(names) != len(matrices) or len(matrices) < 2:
            raise ValueError("a chain needs at least two named links")
        matrices = [HermitianMatrix.from_array(m) for m in matrices]
        inputs = inputs or {}
        pairwise = loewner_leq_many(list(zip(matrices, matrices[1:])), tol)
        for k, v in enumerate(pairwise):
            v.details = {"lower": names[k], "upper": names[k + 1]}
        overall = Verdict.combine(pairwise, witness=lambda: dict(inputs), details=details)
        return OperatorChainReport(list(names), matrices, pairwise, overall, inputs)

    def scalar_links(self, u: np.ndarray) -> np.ndarray:
        """Row k is the diagonal of U* Lₖ U."""
        return np.array(
            [np.real(np.diag(u.conj().T @ m.array @ u)) for m in self.link_matrices]
        )

    def link(self, name: str) -> HermitianMatrix:
        return self.link_matrices[self.link_names.index(name)]

    def to_dict(self) -> dict[str, Any]:
        return {
            "links": [{"name": n, "matrix": m.to_json()} for n, m in zip(self.link_names, self.link_matrices)],
            "pairwise": [v.to_dict() for v in self.pairwise_verdicts],
            "verdict": self.overall.to_dict(),
            "inputs": _jsonable(self.inputs),
        }


def _values(f: ScalarFunctionSpec, x, positive: bool = True) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    f.check_domain(x)
    out = np.asarray(f.eval(x), dtype=float)
    if positive and not np.all(out > 0):
        raise DomainViolation(f.name, float(x[np.argmax(~(out > 0))]), f.domain)
    return out


def _calculus_many(f: ScalarFunctionSpec, hs: Sequence[Any], post=None) -> list[HermitianMatrix]:
    """post(f(H)) for every H, all decomposed in one batch; f must be positive on Sp(H) when post is given."""
    out = []
    for d in eig_hermitian_many(hs):
        vals = _values(f, d.lam, positive=post is not None)
        out.append(d.apply(post(vals) if post is not None else vals))
    return out


def _calculus(f: ScalarFunctionSpec, h: Any, post=None) -> HermitianMatrix:
    return _calculus_many(f, [h], post)[0]


def _pair_inputs(f: ScalarFunctionSpec | None, p: CommutingPositivePair, **extra) -> dict[str, Any]:
    out: dict[str, Any] = {"pair": p.to_json(), **extra}
    if f is not None:
        out["function"] = f.name
    return out


def _attach_scalar_route(report: OperatorChainReport, p: CommutingPositivePair,
                         scalar_links: np.ndarray) -> OperatorChainReport:
    matrix_links = report.scalar_links(p.u)
    scale = max(1.0, float(np.max(np.abs(scalar_links))))
    error = float(np.max(np.abs(matrix_links - scalar_links))) / scale
    report.overall.details["two_route_error"] = error
    report.overall.details["scalar_links"] = scalar_links.tolist()
    if error > TWO_ROUTE_RTOL and report.overall.status == VerdictStatus.HOLDS:
        report.overall.status = VerdictStatus.INCONCLUSIVE
    return report


def _attach_closed_form(report: OperatorChainReport, error: float, rtol: float) -> OperatorChainReport:
    report.overall.details["closed_form_error"] = error
    if error > rtol and report.overall.status == VerdictStatus.HOLDS:
        report.overall.status = VerdictStatus.INCONCLUSIVE
    return report


def check_operator_geo_convex(
    f: ScalarFunctionSpec,
    p: CommutingPositivePair,
    lambdas: Sequence[float] = DEFAULT_LAMBDAS,
    tol: LoewnerTolerance | None = None,
) -> Verdict:
    """f(A^λB^{1−λ}) ≤ f(A)^λ f(B)^{1−λ} in the Löwner order at every grid λ."""
    tol = tol or LoewnerTolerance()
    lambdas = list(lambdas)
    fa = _values(f, p.a)
    fb = _values(f, p.b)
    upper = [fa ** lam * fb ** (1.0 - lam) for lam in lambdas]
    lower = _calculus_many(f, [weighted_geometric(p, lam) for lam in lambdas])
    parts = loewner_leq_many([(lhs, p.materialize(rhs)) for lhs, rhs in zip(lower, upper)], tol)
    scalar_margins = [float(np.min(rhs - _values(f, geometric_values(p, lam)))) for lam, rhs in zip(lambdas, upper)]
    inputs = _pair_inputs(f, p, lambdas=lambdas)
    verdict = Verdict.combine(parts, witness=lambda: dict(inputs))
    matrix_margin = min(v.margin for v in parts)
    scalar_margin = min(scalar_margins)
    gap = abs(matrix_margin - scalar_margin) / max(1.0, max(v.scale for v in parts))
    verdict.details = {
        "lambdas": list(lambdas),
        "scalar_margin": scalar_margin,
        "two_route_error": gap,
    }
    if gap > TWO_ROUTE_RTOL and verdict.status == VerdictStatus.HOLDS:
        verdict.status = VerdictStatus.INCONCLUSIVE
    return verdict


def _sqrt_product(p: CommutingPositivePair) -> HermitianMatrix:
    """√(AB) from the matrix product, for commuting A and B."""
    return psd_power(p.matrix_a().array @ p.matrix_b().array, 0.5)


def hh_operator_log_chain(
    f: ScalarFunctionSpec,
    p: CommutingPositivePair,
    q: QuadratureSpec | None = None,
    tol: LoewnerTolerance | None = None,
) -> OperatorChainReport:
    """log f(√(AB)) ≤ ∫₀¹ log f(AᵗB¹⁻ᵗ) dt ≤ log √(f(A)f(B))."""
    q = q or QuadratureSpec()
    tol = tol or LoewnerTolerance()
    left, log_fa, log_fb = _calculus_many(f, [_sqrt_product(p), p.matrix_a(), p.matrix_b()], post=np.log)
    middle = integrate_nodes(
        lambda ts: _calculus_many(f, [weighted_geometric(p, t) for t in ts], post=np.log), q
    )
    right = HermitianMatrix.from_array(0.5 * (log_fa.array + log_fb.array))
    report = OperatorChainReport.from_links(
        ["log_f(sqrt(AB))", "log_integral", "log_sqrt(f(A)f(B))"],
        [left, middle, right],
        tol,
        inputs=_pair_inputs(f, p, panels=q.panels, nodes=q.nodes_per_panel),
    )
    scalar_middle = integrate_scalar(
        lambda t: np.log(_values(f, p.a[None, :] ** t[:, None] * p.b[None, :] ** (1.0 - t[:, None]))), q
    )
    scalar = np.array([
        np.log(_values(f, np.sqrt(p.a * p.b))),
        scalar_middle,
        0.5 * (np.log(_values(f, p.a)) + np.log(_values(f, p.b))),
    ])
    return _attach_scalar_route(report, p, scalar)


def hh_operator_unlogged_chain(
    f: ScalarFunctionSpec,
    p: CommutingPositivePair,
    q: QuadratureSpec | None = None,
    tol: LoewnerTolerance | None = None,
) -> OperatorChainReport:
    """f(√(AB)) ≤ ∫₀¹ √(f(AᵗB¹⁻ᵗ) f(A¹⁻ᵗBᵗ)) dt ≤ √(f(A)f(B))."""
    q = q or QuadratureSpec()
    tol = tol or LoewnerTolerance()

    def integrand(ts: np.ndarray) -> list[HermitianMatrix]:
        # f(AᵗB¹⁻ᵗ) and f(A¹⁻ᵗBᵗ) by matrix calculus; they commute, so the
        # square root of their product is taken in the shared basis.
        k = len(ts)
        values = _calculus_many(f, [weighted_geometric(p, t) for t in ts]
                                + [weighted_geometric(p, 1.0 - t) for t in ts])
        return [p.materialize(np.sqrt(p.in_basis(x) * p.in_basis(y)))
                for x, y in zip(values[:k], values[k:])]

    left = _calculus(f, _sqrt_product(p))
    middle = integrate_nodes(integrand, q)
    right = p.materialize(np.sqrt(_values(f, p.a) * _values(f, p.b)))
    report = OperatorChainReport.from_links(
        ["f(sqrt(AB))", "symmetric_integral", "sqrt(f(A)f(B))"],
        [left, middle, right],
        tol,
        inputs=_pair_inputs(f, p, panels=q.panels, nodes=q.nodes_per_panel),
    )

    def scalar_integrand(t: np.ndarray) -> np.ndarray:
        t = t[:, None]
        return np.sqrt(
            _values(f, p.a[None, :] ** t * p.b[None, :] ** (1.0 - t))
            * _values(f, p.a[None, :] ** (1.0 - t) * p.b[None, :] ** t)
        )

    scalar = np.array([
        _values(f, np.sqrt(p.a * p.b)),
        integrate_scalar(scalar_integrand, q),
        np.sqrt(_values(f, p.a) * _values(f, p.b)),
    ])
    return _attach_scalar_route(report, p, scalar)


def exp_special_chain(
    p: CommutingPositivePair,
    q: QuadratureSpec | None = None,
    tol: LoewnerTolerance | None = None,
) -> OperatorChainReport:
    """√(AB) ≤ ∫₀¹ AᵗB¹⁻ᵗ dt ≤ (A + B)/2."""
    q = q or QuadratureSpec()
    tol = tol or LoewnerTolerance()
    a, b = p.matrix_a(), p.matrix_b()
    middle = integrate_curve(lambda t: weighted_geometric(p, t), q)
    report = OperatorChainReport.from_links(
        ["sqrt(AB)", "geometric_integral", "arithmetic_mean"],
        [_sqrt_product(p), middle, HermitianMatrix.from_array(0.5 * (a.array + b.array))],
        tol,
        inputs=_pair_inputs(None, p, panels=q.panels, nodes=q.nodes_per_panel),
    )
    closed = weighted_geometric_integral_closed_form(p)
    scale = max(1.0, middle.frobenius())
    _attach_closed_form(report, float(np.linalg.norm(middle.array - closed.array)) / scale, LOG_MEAN_RTOL)
    scalar = np.array([np.sqrt(p.a * p.b), log_mean_array(p.a, p.b), 0.5 * (p.a + p.b)])
    return _attach_scalar_route(report, p, scalar)


def exp_operator_geo_convex_check(
    p: CommutingPositivePair,
    nu: float,
    tol: LoewnerTolerance | None = None,
) -> OperatorChainReport:
    """exp(A^{1−ν}B^ν) ≤ exp((1−ν)A + νB) = exp(A)^{1−ν} exp(B)^ν for commuting A, B."""
    tol = tol or LoewnerTolerance()
    nu = float(nu)
    f = exp_function()
    a, b = p.matrix_a(), p.matrix_b()
    report = OperatorChainReport.from_links(
        ["exp(geometric)", "exp(arithmetic)", "exp(A)^(1-nu)exp(B)^nu"],
        [
            _calculus(f, weighted_geometric(p, 1.0 - nu)),
            _calculus(f, weighted_arithmetic(a, b, nu)),
            p.materialize(np.exp(p.a) ** (1.0 - nu) * np.exp(p.b) ** nu),
        ],
        tol,
        inputs=_pair_inputs(f, p, nu=nu),
    )
    scalar = np.array([
        np.exp(geometric_values(p, 1.0 - nu)),
        np.exp((1.0 - nu) * p.a + nu * p.b),
        np.exp(p.a) ** (1.0 - nu) * np.exp(p.b) ** nu,
    ])
    return _attach_scalar_route(report, p, scalar)


def _matrix_values(f: ScalarFunctionSpec, ms: Sequence[Any]) -> list[np.ndarray]:
    if f.matrix_eval is not None:
        return [np.asarray(f.matrix_eval(np.asarray(getattr(m, "array", m)))) for m in ms]
    out = []
    for d in eig_hermitian_many(ms):
        f.check_domain(d.lam)
        out.append(d.apply(np.asarray(f.eval(d.lam), dtype=float)).array)
    return out


def operator_convex_hh_chain(
    f: ScalarFunctionSpec,
    a: Any,
    b: Any,
    q: QuadratureSpec | None = None,
    tol: LoewnerTolerance | None = None,
) -> OperatorChainReport:
    """Six-link refinement of the operator Hermite–Hadamard inequality for operator convex f.

    f((A+B)/2) ≤ 2∫_{1/4}^{3/4} f(tA+(1−t)B)dt ≤ ½[f((3A+B)/4) + f((A+3B)/4)]
      ≤ ∫₀¹ f((1−t)A+tB)dt ≤ ½[f((A+B)/2) + (f(A)+f(B))/2] ≤ (f(A)+f(B))/2

    A and B need not commute. The domain is an interval, so checking Sp(A)
    and Sp(B) covers every convex combination.
    """
    if not f.operator_convex:
        raise ValueError(f"{f.name} is not flagged operator convex")
    q = q or QuadratureSpec()
    tol = tol or LoewnerTolerance()
    a = HermitianMatrix.from_array(a)
    b = HermitianMatrix.from_array(b)
    if a.n != b.n:
        raise DimensionMismatch(f"cannot combine {a.n}x{a.n} with {b.n}x{b.n}")
    for d in eig_hermitian_many([a, b]):
        f.check_domain(d.lam)
    x, y = a.array, b.array

    def along(ts) -> list[np.ndarray]:
        return _matrix_values(f, [t * x + (1.0 - t) * y for t in ts])

    f_a, f_b, f_mid, f_hi, f_lo = _matrix_values(f, [x, y, 0.5 * (x + y), 0.75 * x + 0.25 * y, 0.25 * x + 0.75 * y])
    ends = 0.5 * (f_a + f_b)
    inner = 2.0 * integrate_nodes(along, q, (0.25, 0.75)).array
    quarters = 0.5 * (f_hi + f_lo)
    full = integrate_nodes(along, q).array
    report = OperatorChainReport.from_links(
        ["f((A+B)/2)", "inner_integral", "quarter_points", "integral", "mixed_mean", "endpoint_mean"],
        [f_mid, inner, quarters, full, 0.5 * (f_mid + ends), ends],
        tol,
        inputs={"function": f.name, "a": a.to_json(), "b": b.to_json(),
                "panels": q.panels, "nodes": q.nodes_per_panel},
    )
    if f.name in ("square", "power:2"):
        d = y - x
        closed = x @ x + 0.5 * (x @ d + d @ x) + (d @ d) / 3.0
        scale = max(1.0, float(np.linalg.norm(closed)))
        _attach_closed_form(report, float(np.linalg.norm(full - closed)) / scale, SQUARE_INTEGRAL_RTOL)
    return report


def agm_inequality_check(a: Any, b: Any, nu: float, tol: LoewnerTolerance | None = None) -> Verdict:
    """A #_ν B ≤ (1 − ν)A + νB for positive definite A, B."""
    tol = tol or LoewnerTolerance()
    a = HermitianMatrix.from_array(a)
    b = HermitianMatrix.from_array(b)
    verdict = loewner_leq(agm_weighted_mean(a, b, nu), weighted_arithmetic(a, b, nu), tol)
    if verdict.status == VerdictStatus.VIOLATED:
        verdict.witness = {"a": a.to_json(), "b": b.to_json(), "nu": float(nu)}
    verdict.details = {"nu": float(nu)}
    return verdict


def _shak_readings(f: ScalarFunctionSpec, g: ScalarFunctionSpec, p: CommutingPositivePair,
                   lambdas: Sequence[float], tol: LoewnerTolerance) -> tuple[Verdict, Verdict]:
    """Both readings of the Hölder-type step behind sum closure, per eigenvalue.

    With A' = f(A), B' = f(B), C' = g(A), D' = g(B) (all commuting):
    multiplicative: A'^λB'^{1−λ} + C'^λD'^{1−λ} ≤ (A'+C')^λ (B'+D')^{1−λ}
    literal:        A'^λB'^{1−λ} + C'^λD'^{1−λ} ≤ (A'+C')^λ + (B'+D')^{1−λ}
    """
    a1, b1 = _values(f, p.a), _values(f, p.b)
    c1, d1 = _values(g, p.a), _values(g, p.b)
    inputs = _pair_inputs(None, p, functions=[f.name, g.name], lambdas=list(lambdas))
    readings = []
    for combine in (lambda x, y, lam: x ** lam * y ** (1.0 - lam),
                    lambda x, y, lam: x ** lam + y ** (1.0 - lam)):
        parts = []
        for lam in lambdas:
            lhs = a1 ** lam * b1 ** (1.0 - lam) + c1 ** lam * d1 ** (1.0 - lam)
            rhs = combine(a1 + c1, b1 + d1, lam)
            i = int(np.argmin(rhs - lhs))
            parts.append(Verdict.decide(
                float(rhs[i] - lhs[i]), float(max(np.max(np.abs(lhs)), np.max(np.abs(rhs)))), tol,
                witness=lambda: dict(inputs), lhs=float(lhs[i]), rhs=float(rhs[i]),
            ))
        readings.append(Verdict.combine(parts, witness=lambda: dict(inputs)))
    return readings[0], readings[1]


def closure_check(
    kind: str,
    f: ScalarFunctionSpec,
    p: CommutingPositivePair,
    g: ScalarFunctionSpec | None = None,
    lambdas: Sequence[float] = DEFAULT_LAMBDAS,
    multiple: float = 2.5,
    tol: LoewnerTolerance | None = None,
) -> Verdict:
    """Closure of operator geometric convexity under the algebra operations.

    `sum` reports the multiplicative Hölder reading in its status; the literal
    additive reading is recorded in the details only.
    """
    tol = tol or LoewnerTolerance()
    if kind not in CLOSURE_KINDS:
        raise ValueError(f"unknown closure kind '{kind}'; expected one of {CLOSURE_KINDS}")
    if kind == "norm_mcintosh":
        return _mcintosh(p, lambdas, tol)
    if not f.geometrically_convex or (g is not None and not g.geometrically_convex):
        raise ValueError("closure checks need geometrically convex operands")
    if kind == "scalar_multiple":
        return check_operator_geo_convex(scaled_by(f, multiple), p, lambdas, tol)
    if kind == "t_times_f":
        return check_operator_geo_convex(times_identity(f), p, lambdas, tol)
    g = g or f
    if kind == "product":
        return check_operator_geo_convex(product_of(f, g), p, lambdas, tol)

    closed = check_operator_geo_convex(sum_of(f, g), p, lambdas, tol)
    multiplicative, literal = _shak_readings(f, g, p, lambdas, tol)
    inputs = _pair_inputs(None, p, functions=[f.name, g.name], lambdas=list(lambdas))
    verdict = Verdict.combine([closed, multiplicative], witness=lambda: dict(inputs))
    verdict.details = {
        "sum_geo_convex": closed.status,
        "multiplicative_reading": multiplicative.to_dict(),
        "literal_reading": literal.to_dict(),
    }
    return verdict


def _mcintosh(p: CommutingPositivePair, lambdas: Sequence[float], tol: LoewnerTolerance) -> Verdict:
    """‖A^λB^{1−λ}‖ ≤ ‖A‖^λ ‖B‖^{1−λ} + slack, operator norms."""
    norm_a = schatten_norm(p.matrix_a(), SCHATTEN_INF)
    norm_b = schatten_norm(p.matrix_b(), SCHATTEN_INF)
    inputs = _pair_inputs(None, p, lambdas=list(lambdas))
    parts = []
    for lam in lambdas:
        lhs = schatten_norm(weighted_geometric(p, lam), SCHATTEN_INF)
        rhs = norm_a ** lam * norm_b ** (1.0 - lam) + MCINTOSH_SLACK
        parts.append(Verdict.decide(rhs - lhs, max(lhs, rhs), tol, witness=lambda: dict(inputs), lhs=lhs, rhs=rhs))
    return Verdict.combine(parts, witness=lambda: dict(inputs), details={"lambdas": list(lambdas)})


def log_monotone_compatibility(
    unlogged: OperatorChainReport,
    logged: OperatorChainReport,
    p: CommutingPositivePair,
    tol: LoewnerTolerance | None = None,
) -> Verdict:
    """A Holding un-logged chain must come with a Holding log chain.

    Checked per eigenvalue, where log is monotone on the links: the logs of the
    un-logged links must stay ordered, and the two chains share endpoints.
    """
    tol = tol or LoewnerTolerance()
    if unlogged.overall.status != VerdictStatus.HOLDS:
        return Verdict(VerdictStatus.SKIPPED, unlogged.overall.margin,
                       details={"reason": "un-logged chain does not hold"})
    links = unlogged.scalar_links(p.u)
    if not np.all(links > 0):
        return Verdict(VerdictStatus.SKIPPED, float(np.min(links)),
                       details={"reason": "un-logged links are not positive definite"})
    logs = np.log(links)
    steps = np.diff(logs, axis=0)
    scale = float(np.max(np.abs(logs)))
    inputs = dict(unlogged.inputs)
    monotone = Verdict.decide(float(np.min(steps)), scale, tol, witness=lambda: dict(inputs))
    log_links = logged.scalar_links(p.u)
    endpoint_gap = float(max(np.max(np.abs(log_links[0] - logs[0])), np.max(np.abs(log_links[-1] - logs[-1]))))
    verdict = Verdict.combine([monotone, logged.overall], witness=lambda: dict(inputs))
    verdict.details = {"endpoint_gap": endpoint_gap / max(1.0, scale), "logged": logged.overall.status}
    if endpoint_gap > TWO_ROUTE_RTOL * max(1.0, scale) and verdict.status == VerdictStatus.HOLDS:
        verdict.status = VerdictStatus.INCONCLUSIVE
    return verdict
