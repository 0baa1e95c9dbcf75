"""Trace-functional inequalities for products of (not necessarily commuting) matrices.

Every check returns a Verdict (or a ChainReport) whose witness, when
Violated, is the `TraceCheckInstance` JSON needed to replay it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from commuting_means import (
    CommutingPositivePair,
    geometric_values,
    integrate_scalar,
    pair_from_matrices,
    weighted_geometric,
)
from errors import (
    BadExponent,
    BadWeight,
    DimensionMismatch,
    EmptyList,
    MatrixFormatError,
    NotCommuting,
    NotHermitian,
    NotPositive,
    SingularX,
)
from linalg_core import (
    PSD_SLACK,
    SCHATTEN_INF,
    HermitianMatrix,
    abs_op,
    abs_power,
    as_complex_matrix,
    commutator_norm,
    eig_hermitian,
    psd_power,
    scalar_verdict,
    schatten_norm,
    singular_values,
    trace,
)
from matrix_io import matrix_from_json, matrix_to_json
from models import ChainReport, LoewnerTolerance, QuadratureSpec, Verdict, VerdictStatus, _jsonable

# Residual allowed on the trace identities, relative to the operand scale.
IDENTITY_TOL = LoewnerTolerance(rel=1e-11, abs_floor=1e-14)
# |X| counts as singular below this fraction of ‖X‖ when negative powers are needed.
SINGULAR_GATE = 1e-12
# Direct vs block-matrix evaluation of the sum inequality, relative.
BLOCK_ROUTE_RTOL = 1e-11
# Tr √(AB) from the matrix product vs Σ √(aᵢbᵢ) in the recovered shared basis.
SHARED_BASIS_RTOL = 1e-10
DEFAULT_TS: tuple[float, ...] = (0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0)


@dataclass
class TraceCheckInstance:
    """Named operands and parameters of one check evaluation.

    Operands are matrices or lists of matrices; params are plain JSON values.
    """

    check: str
    operands: dict[str, Any] = field(default_factory=dict)
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        sizes = set()
        for name, value in self.operands.items():
            if isinstance(value, (list, tuple)):
                self.operands[name] = [as_complex_matrix(m) for m in value]
                sizes.update(m.shape[0] for m in self.operands[name])
            else:
                self.operands[name] = as_complex_matrix(value)
                sizes.add(self.operands[name].shape[0])
        if len(sizes) > 1:
            raise DimensionMismatch(f"operands of '{self.check}' have mixed dimensions {sorted(sizes)}")

    def matrix(self, name: str) -> np.ndarray | None:
        return self.operands.get(name)

    def to_json(self) -> dict[str, Any]:
        operands: dict[str, Any] = {}
        for name, value in self.operands.items():
            if isinstance(value, list):
                operands[name] = [matrix_to_json(m) for m in value]
            else:
                operands[name] = matrix_to_json(value)
        return {"check": self.check, "operands": operands, "params": _jsonable(self.params)}

    @staticmethod
    def from_json(data: dict[str, Any]) -> "TraceCheckInstance":
        try:
            check = str(data["check"])
            raw = data.get("operands", {})
            params = dict(data.get("params", {}))
        except (KeyError, TypeError, AttributeError) as ex:
            raise MatrixFormatError(f"not a check instance: {ex}") from ex
        operands: dict[str, Any] = {}
        for name, value in raw.items():
            if isinstance(value, list):
                operands[name] = [matrix_from_json(m) for m in value]
            else:
                operands[name] = matrix_from_json(value)
        return TraceCheckInstance(check, operands, params)


def pair_instance(check: str, p: CommutingPositivePair, **params) -> TraceCheckInstance:
    return TraceCheckInstance(
        check, {"u": p.u}, {"a": [float(x) for x in p.a], "b": [float(x) for x in p.b], **params}
    )


def _witness(check: str, operands: dict[str, Any], **params):
    return lambda: TraceCheckInstance(check, dict(operands), params).to_json()


def _same_size(*ms: np.ndarray) -> None:
    sizes = {m.shape[0] for m in ms}
    if len(sizes) > 1:
        raise DimensionMismatch(f"operands have mixed dimensions {sorted(sizes)}")


def _require_psd(m: Any, name: str) -> HermitianMatrix:
    try:
        h = HermitianMatrix.strict(m)
    except NotHermitian as ex:
        raise NotPositive(f"{name} is not positive semidefinite: {ex}") from ex
    lam = eig_hermitian(h).lam
    if lam[0] < -PSD_SLACK * max(1.0, float(np.max(np.abs(lam)))):
        raise NotPositive(f"{name} is not positive semidefinite (λ_min = {lam[0]:.3e})")
    return h


def _is_psd(m: np.ndarray) -> bool:
    try:
        _require_psd(m, "operand")
    except NotPositive:
        return False
    return True


def _identity(name: str, residual: float, scale: float, witness) -> Verdict:
    return Verdict.decide(
        -float(residual), scale, IDENTITY_TOL, witness=witness,
        details={"name": name, "residual": float(residual)},
    )


def _combine(parts: Sequence[Verdict], witness, details: dict[str, Any]) -> Verdict:
    live = [v for v in parts if v.status != VerdictStatus.SKIPPED]
    return Verdict.combine(live, witness=witness, details=details)


def trace_axioms_check(a: Any, t: Any, tol: LoewnerTolerance | None = None) -> Verdict:
    """Tr A* = conj Tr A; Tr AT = Tr TA; |Tr AT| ≤ ‖A‖₁‖T‖; |Tr A| ≤ ‖A‖₁; Tr AT* = Tr T*A."""
    tol = tol or LoewnerTolerance()
    a, t = as_complex_matrix(a), as_complex_matrix(t)
    _same_size(a, t)
    witness = _witness("trace_axioms", {"a": a, "t": t})
    tr_at = trace(a @ t)
    a_norm, t_norm = float(np.linalg.norm(a)), float(np.linalg.norm(t))
    nuclear = schatten_norm(a, 1)
    parts = [
        _identity("adjoint", abs(trace(a.conj().T) - trace(a).conjugate()), max(1.0, a_norm), witness),
        _identity("cyclic", abs(tr_at - trace(t @ a)), max(1.0, a_norm * t_norm), witness),
        _identity("cyclic_adjoint", abs(trace(a @ t.conj().T) - trace(t.conj().T @ a)),
                  max(1.0, a_norm * t_norm), witness),
        scalar_verdict(abs(tr_at), nuclear * schatten_norm(t, SCHATTEN_INF), tol, witness,
                       details={"name": "product_bound"}),
        scalar_verdict(abs(trace(a)), nuclear, tol, witness, details={"name": "trace_bound"}),
    ]
    return _combine(parts, witness, {v.details["name"]: v.status for v in parts})


def psd_trace_product_chain(a: Any, b: Any, tol: LoewnerTolerance | None = None) -> ChainReport:
    """√Tr(AB) ≤ Tr √(AB) ≤ √(Tr A · Tr B) for commuting PSD A, B.

    For positive definite operands the middle link is recomputed from the
    joint spectrum; a disagreement downgrades Holds to Inconclusive.
    """
    tol = tol or LoewnerTolerance()
    a, b = _require_psd(a, "A"), _require_psd(b, "B")
    _same_size(a.array, b.array)
    scale = max(1.0, a.frobenius(), b.frobenius())
    if commutator_norm(a, b) > 1e-10 * scale * scale:
        raise NotCommuting("the three-link trace chain needs commuting A and B")
    ab = a.array @ b.array
    instance = TraceCheckInstance("psd_trace_product_chain", {"a": a.array, "b": b.array})
    report = ChainReport.from_links(
        ["sqrt(Tr(AB))", "Tr(sqrt(AB))", "sqrt(Tr(A)Tr(B))"],
        [
            math.sqrt(max(trace(ab).real, 0.0)),
            trace(psd_power(ab, 0.5)).real,
            math.sqrt(max(trace(a).real * trace(b).real, 0.0)),
        ],
        tol,
        inputs=instance.to_json(),
    )
    try:
        p = pair_from_matrices(a, b)
    except (NotPositive, NotCommuting) as ex:
        report.verdict.details["shared_basis"] = f"unavailable: {ex}"
        return report
    spectral = float(np.sum(np.sqrt(p.a * p.b)))
    error = abs(spectral - report.link("Tr(sqrt(AB))")) / max(1.0, spectral)
    report.verdict.details["shared_basis_error"] = error
    if error > SHARED_BASIS_RTOL and report.verdict.status == VerdictStatus.HOLDS:
        report.verdict.status = VerdictStatus.INCONCLUSIVE
    return report


def psd_trace_bounds_check(a: Any, b: Any, tol: LoewnerTolerance | None = None) -> Verdict:
    """Tr(AB) ≤ Tr A · Tr B and Tr(A²) ≤ (Tr A)² for PSD A, B.

    The second bound is the reading of "Tr(A)² ≤ (Tr A)²" that makes it a
    statement at all.
    """
    tol = tol or LoewnerTolerance()
    a, b = _require_psd(a, "A"), _require_psd(b, "B")
    _same_size(a.array, b.array)
    witness = _witness("psd_trace_bounds", {"a": a.array, "b": b.array})
    tr_a, tr_b = trace(a).real, trace(b).real
    parts = [
        scalar_verdict(trace(a.array @ b.array).real, tr_a * tr_b, tol, witness, details={"name": "product"}),
        scalar_verdict(trace(a.array @ a.array).real, tr_a * tr_a, tol, witness, details={"name": "square"}),
    ]
    return _combine(parts, witness, {"product": parts[0].status, "square": parts[1].status,
                                     "square_reading": "Tr(A^2) <= (Tr A)^2"})


def trace_geo_convex_check(
    p: CommutingPositivePair,
    ts: Sequence[float] = DEFAULT_TS,
    tol: LoewnerTolerance | None = None,
) -> Verdict:
    """Tr(AᵗB¹⁻ᵗ) ≤ (Tr A)ᵗ (Tr B)¹⁻ᵗ on a grid of t."""
    tol = tol or LoewnerTolerance()
    tr_a, tr_b = trace(p.matrix_a()).real, trace(p.matrix_b()).real
    if tr_a <= 0 or tr_b <= 0:
        raise NotPositive("trace geometric convexity needs positive traces")
    instance = pair_instance("trace_geo_convex", p, ts=list(ts))
    witness = instance.to_json
    parts = [
        scalar_verdict(trace(weighted_geometric(p, t)).real, tr_a ** t * tr_b ** (1.0 - t), tol, witness,
                       details={"t": float(t)})
        for t in ts
    ]
    return _combine(parts, witness, {"ts": list(ts)})


def trace_log_hh_chain(
    p: CommutingPositivePair,
    q: QuadratureSpec | None = None,
    tol: LoewnerTolerance | None = None,
) -> ChainReport:
    """log Tr √(AB) ≤ ∫₀¹ log Tr(AᵗB¹⁻ᵗ) dt ≤ ½(log Tr A + log Tr B).

    The squared variant log Tr(AB) ≤ ∫₀¹ log Tr(A^{2t}B^{2(1−t)}) dt ≤ log(Tr A · Tr B)
    is evaluated alongside; it sits in the verdict details and both must hold.
    Traces are taken from the shared spectrum.
    """
    q = q or QuadratureSpec()
    tol = tol or LoewnerTolerance()
    a, b = p.a, p.b
    tr_a, tr_b = float(np.sum(a)), float(np.sum(b))

    def log_trace(power: float):
        def g(t: np.ndarray) -> np.ndarray:
            t = t[:, None]
            return np.log(np.sum(a[None, :] ** (power * t) * b[None, :] ** (power * (1.0 - t)), axis=1))
        return g

    inputs = pair_instance("trace_log_hh_chain", p, panels=q.panels, nodes=q.nodes_per_panel).to_json()
    report = ChainReport.from_links(
        ["log_Tr(sqrt(AB))", "log_trace_integral", "log_sqrt(Tr(A)Tr(B))"],
        [
            math.log(float(np.sum(geometric_values(p, 0.5)))),
            float(integrate_scalar(log_trace(1.0), q)),
            0.5 * (math.log(tr_a) + math.log(tr_b)),
        ],
        tol,
        inputs=inputs,
    )
    squared = ChainReport.from_links(
        ["log_Tr(AB)", "log_trace_integral_squared", "log(Tr(A)Tr(B))"],
        [
            math.log(float(np.sum(a * b))),
            float(integrate_scalar(log_trace(2.0), q)),
            math.log(tr_a * tr_b),
        ],
        tol,
        inputs=inputs,
    )
    report.verdict = Verdict.combine(
        [report.verdict, squared.verdict],
        witness=lambda: dict(inputs),
        details={"squared": squared.to_dict()},
    )
    return report


def bhatia_davis_check(a: Any, x: Any | None, b: Any, r: float,
                       tol: LoewnerTolerance | None = None) -> Verdict:
    """(Tr|A*XB|^r)² ≤ Tr|AA*X|^r · Tr|XBB*|^r, r ≥ 0; x=None means X = I.

    |M|^r comes from the singular values; at r = 0 a zero singular value stays
    zero (support projection), so Tr|M|⁰ is the rank.
    """
    tol = tol or LoewnerTolerance()
    r = float(r)
    if r < 0 or not math.isfinite(r):
        raise BadExponent(f"r must be ≥ 0, got {r}")
    a, b = as_complex_matrix(a), as_complex_matrix(b)
    operands = {"a": a, "b": b}
    aa, bb = a @ a.conj().T, b @ b.conj().T
    if x is None:
        _same_size(a, b)
        lhs = trace(abs_power(a.conj().T @ b, r)).real ** 2
        rhs = trace(psd_power(aa, r, zero_power=0.0)).real * trace(psd_power(bb, r, zero_power=0.0)).real
    else:
        x = as_complex_matrix(x)
        _same_size(a, b, x)
        operands["x"] = x
        lhs = trace(abs_power(a.conj().T @ x @ b, r)).real ** 2
        rhs = trace(abs_power(aa @ x, r)).real * trace(abs_power(x @ bb, r)).real
    return scalar_verdict(lhs, rhs, tol, _witness("bhatia_davis", operands, r=r),
                          details={"r": r, "x_identity": x is None, "zero_power": "projection"})


def trace_cauchy_schwarz(a: Any, b: Any, x: Any | None = None,
                         tol: LoewnerTolerance | None = None) -> Verdict:
    """|Tr(AB*X)|² ≤ Tr|AA*X*| · Tr|X*BB*|; x=None gives |Tr(AB*)|² ≤ Tr(AA*)·Tr(BB*).

    The identity path uses the traces of AA* and BB* directly, so
    proportional operands meet with margin at rounding level.
    """
    tol = tol or LoewnerTolerance()
    a, b = as_complex_matrix(a), as_complex_matrix(b)
    operands = {"a": a, "b": b}
    parts = []
    if x is None or np.array_equal(as_complex_matrix(x), np.eye(a.shape[0])):
        _same_size(a, b)
        witness = _witness("trace_cauchy_schwarz", operands)
        parts.append(scalar_verdict(
            abs(trace(a @ b.conj().T)) ** 2,
            trace(a @ a.conj().T).real * trace(b @ b.conj().T).real,
            tol, witness, details={"route": "exact"},
        ))
    if x is not None:
        x = as_complex_matrix(x)
        _same_size(a, b, x)
        operands["x"] = x
        witness = _witness("trace_cauchy_schwarz", operands)
        xs = x.conj().T
        parts.append(scalar_verdict(
            abs(trace(a @ b.conj().T @ x)) ** 2,
            schatten_norm(a @ a.conj().T @ xs, 1) * schatten_norm(xs @ b @ b.conj().T, 1),
            tol, witness, details={"route": "schatten"},
        ))
    if len(parts) == 1:
        return parts[0]
    return _combine(parts, witness, {"routes": [v.details["route"] for v in parts]})


def _gate_singular(x: np.ndarray, alpha: float) -> None:
    if 0.0 <= alpha <= 1.0:
        return
    sigma = singular_values(x)
    if sigma[-1] <= SINGULAR_GATE * sigma[0]:
        raise SingularX(f"α = {alpha} needs a nonsingular |X| (σ_min = {sigma[-1]:.3e})")


def _x_gram_powers(x: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """|X|^{2α} and |X|^{2(1−α)}, with |X|⁰ = I."""
    gram = x.conj().T @ x
    return psd_power(gram, alpha).array, psd_power(gram, 1.0 - alpha).array


def dragomir_alpha_check(a: Any, b: Any, x: Any, alpha: float,
                         tol: LoewnerTolerance | None = None) -> Verdict:
    """|Tr(AB*|X|)|² ≤ Tr(|A*|²|X|^{2α}) · Tr(|B*|²|X|^{2(1−α)}) for real α."""
    tol = tol or LoewnerTolerance()
    alpha = float(alpha)
    a, b, x = as_complex_matrix(a), as_complex_matrix(b), as_complex_matrix(x)
    _same_size(a, b, x)
    _gate_singular(x, alpha)
    left_pow, right_pow = _x_gram_powers(x, alpha)
    lhs = abs(trace(a @ b.conj().T @ abs_op(x).array)) ** 2
    rhs = trace(a @ a.conj().T @ left_pow).real * trace(b @ b.conj().T @ right_pow).real
    return scalar_verdict(lhs, rhs, tol, _witness("dragomir_alpha", {"a": a, "b": b, "x": x}, alpha=alpha),
                          details={"alpha": alpha, "zero_power": "identity"})


def trace_x_refinement_check(x: Any, alpha: float, tol: LoewnerTolerance | None = None) -> ChainReport:
    """|Tr X|² ≤ (Tr|X|)² ≤ Tr(|X|^{2α}) · Tr(|X|^{2(1−α)})."""
    tol = tol or LoewnerTolerance()
    alpha = float(alpha)
    x = as_complex_matrix(x)
    _gate_singular(x, alpha)
    left_pow, right_pow = _x_gram_powers(x, alpha)
    instance = TraceCheckInstance("trace_x_refinement", {"x": x}, {"alpha": alpha})
    return ChainReport.from_links(
        ["|Tr(X)|^2", "Tr(|X|)^2", "Tr(|X|^2a)Tr(|X|^2(1-a))"],
        [abs(trace(x)) ** 2, trace(abs_op(x)).real ** 2, trace(left_pow).real * trace(right_pow).real],
        tol,
        inputs=instance.to_json(),
    )


def normal_dragomir_check(a: Any, b: Any, x: Any, alpha: float,
                          tol: LoewnerTolerance | None = None) -> Verdict:
    """The same bound with |A|², |B|² in place of |A*|², |B*|², for normal A and B."""
    tol = tol or LoewnerTolerance()
    alpha = float(alpha)
    a, b, x = as_complex_matrix(a), as_complex_matrix(b), as_complex_matrix(x)
    _same_size(a, b, x)
    for name, m in (("A", a), ("B", b)):
        gap = commutator_norm(m, m.conj().T)
        if gap > 1e-10 * max(1.0, float(np.linalg.norm(m)) ** 2):
            raise NotCommuting(f"{name} is not normal (‖{name}{name}* − {name}*{name}‖_F = {gap:.3e})")
    _gate_singular(x, alpha)
    left_pow, right_pow = _x_gram_powers(x, alpha)
    lhs = abs(trace(a @ b.conj().T @ abs_op(x).array)) ** 2
    rhs = trace(a.conj().T @ a @ left_pow).real * trace(b.conj().T @ b @ right_pow).real
    return scalar_verdict(lhs, rhs, tol, _witness("normal_dragomir", {"a": a, "b": b, "x": x}, alpha=alpha),
                          details={"alpha": alpha})


def dragomir_unit_interval_check(a: Any, b: Any, x: Any, alpha: float,
                                 tol: LoewnerTolerance | None = None) -> Verdict:
    """|Tr(AB*X)|² ≤ Tr(|A*|²|X|^{2α}) · Tr(|B*|²|X*|^{2(1−α)}), α ∈ [0, 1]."""
    tol = tol or LoewnerTolerance()
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise BadWeight(f"α must lie in [0, 1], got {alpha}")
    a, b, x = as_complex_matrix(a), as_complex_matrix(b), as_complex_matrix(x)
    _same_size(a, b, x)
    left_pow = psd_power(x.conj().T @ x, alpha).array
    right_pow = psd_power(x @ x.conj().T, 1.0 - alpha).array
    lhs = abs(trace(a @ b.conj().T @ x)) ** 2
    rhs = trace(a @ a.conj().T @ left_pow).real * trace(b @ b.conj().T @ right_pow).real
    return scalar_verdict(lhs, rhs, tol,
                          _witness("dragomir_unit_interval", {"a": a, "b": b, "x": x}, alpha=alpha),
                          details={"alpha": alpha})


def _block_row(ms: Sequence[np.ndarray]) -> np.ndarray:
    """[M₁ M₂ … M_k] as the first block row of a (k·d)×(k·d) zero matrix."""
    d, k = ms[0].shape[0], len(ms)
    out = np.zeros((k * d, k * d), dtype=complex)
    out[:d, :] = np.hstack(ms)
    return out


def dannan_block_check(s: Sequence[Any], t: Sequence[Any],
                       tol: LoewnerTolerance | None = None) -> Verdict:
    """|Tr Σ SᵢTᵢ*|² ≤ Tr(Σ SᵢSᵢ*) · Tr(Σ TᵢTᵢ*), by direct sums and by block rows.

    Sub-checks with a positivity hypothesis run only when the instance meets it:
    (Tr Σ SᵢTᵢ)² ≤ Tr(Σ Sᵢ²)·Tr(Σ Tᵢ²) for PSD Sᵢ, Tᵢ, and
    Tr((Σ SᵢTᵢ)²) ≤ (Tr Σ SᵢTᵢ)² when every SᵢTᵢ is PSD.
    """
    tol = tol or LoewnerTolerance()
    if not s or not t:
        raise EmptyList("the sum inequality needs at least one pair")
    if len(s) != len(t):
        raise DimensionMismatch(f"{len(s)} S operands but {len(t)} T operands")
    s = [as_complex_matrix(m) for m in s]
    t = [as_complex_matrix(m) for m in t]
    _same_size(*s, *t)
    witness = _witness("dannan_block", {"s": s, "t": t})

    lhs = abs(sum(trace(si @ ti.conj().T) for si, ti in zip(s, t))) ** 2
    rhs = sum(trace(si @ si.conj().T).real for si in s) * sum(trace(ti @ ti.conj().T).real for ti in t)
    direct = scalar_verdict(lhs, rhs, tol, witness, details={"route": "direct"})

    block = trace_cauchy_schwarz(_block_row(s), _block_row(t), None, tol)
    route_error = max(abs(lhs - block.lhs), abs(rhs - block.rhs)) / max(1.0, abs(rhs))

    skipped = Verdict(VerdictStatus.SKIPPED, 0.0, details={"reason": "positivity hypothesis not met"})
    if all(_is_psd(m) for m in (*s, *t)):
        positive = scalar_verdict(
            sum(trace(si @ ti).real for si, ti in zip(s, t)) ** 2,
            sum(trace(si @ si).real for si in s) * sum(trace(ti @ ti).real for ti in t),
            tol, witness,
        )
    else:
        positive = skipped
    products = [si @ ti for si, ti in zip(s, t)]
    if all(_is_psd(m) for m in products):
        total = sum(products)
        chain = scalar_verdict(trace(total @ total).real, trace(total).real ** 2, tol, witness)
    else:
        chain = skipped

    verdict = _combine(
        [direct, positive, chain],
        witness,
        {
            "block_lhs": block.lhs,
            "block_rhs": block.rhs,
            "two_route_error": route_error,
            "positive_corollary": positive.to_dict(),
            "positive_product_chain": chain.to_dict(),
        },
    )
    if route_error > BLOCK_ROUTE_RTOL and verdict.status == VerdictStatus.HOLDS:
        verdict.status = VerdictStatus.INCONCLUSIVE
    return verdict
