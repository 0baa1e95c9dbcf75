"""Complex Hermitian linear algebra kernel.

Everything above this module sees matrices through three objects:
`HermitianMatrix` (exactly conjugate-symmetric storage), `SpectralDecomposition`
(the computational form of the functional calculus) and `Verdict` (the
three-way outcome of an order comparison).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable, Sequence

import numpy as np

from errors import (
    BadExponent,
    DimensionMismatch,
    NonConvergence,
    NotHermitian,
    NotPositive,
    NotUnitary,
    SingularX,
)
from matrix_io import matrix_to_json
from models import LoewnerTolerance, Verdict, VerdictStatus

MAX_SWEEPS = 30
# Off-diagonal Frobenius mass, relative to ‖H‖_F, at which Jacobi stops.
CONVERGENCE = 1e-13
# During the first sweeps rotations are skipped for entries below
# THRESHOLD_FACTOR * off / n² (the classical threshold strategy).
THRESHOLD_SWEEPS = 3
THRESHOLD_FACTOR = 0.2
# A column entry counts as "nonzero" for phase fixing above this fraction of
# the column's largest modulus.
PHASE_CUTOFF = 1e-10
# Singular values below this fraction of the largest are treated as exact zeros
# when a zero-power convention has to be applied.
RANK_CUTOFF = 1e-7
# Largest negative eigenvalue (relative) still accepted as rounding of a PSD input.
PSD_SLACK = 1e-10

SCHATTEN_INF = math.inf


def as_complex_matrix(m: Any) -> np.ndarray:
    arr = np.array(getattr(m, "array", m), dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise DimensionMismatch(f"expected a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has NaN or Inf entries")
    return arr


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    array: np.ndarray

    @staticmethod
    def from_array(m: Any) -> "HermitianMatrix":
        """Store (M + M*)/2 with a real diagonal, so conjugate symmetry is exact."""
        if isinstance(m, HermitianMatrix):
            return m
        arr = as_complex_matrix(m)
        h = 0.5 * (arr + arr.conj().T)
        idx = np.diag_indices(h.shape[0])
        h[idx] = h[idx].real
        h.setflags(write=False)
        return HermitianMatrix(h)

    @staticmethod
    def strict(m: Any, rtol: float = 1e-10) -> "HermitianMatrix":
        """Like from_array, but refuse inputs that are visibly not Hermitian."""
        arr = as_complex_matrix(m)
        skew = np.linalg.norm(arr - arr.conj().T)
        if skew > rtol * max(1.0, np.linalg.norm(arr)):
            raise NotHermitian(f"matrix is not Hermitian (‖M − M*‖_F = {skew:.3e})")
        return HermitianMatrix.from_array(arr)

    @staticmethod
    def identity(n: int) -> "HermitianMatrix":
        return HermitianMatrix.from_array(np.eye(n))

    @property
    def n(self) -> int:
        return self.array.shape[0]

    def __add__(self, other: "HermitianMatrix") -> "HermitianMatrix":
        return HermitianMatrix.from_array(self.array + _arr(other))

    def __sub__(self, other: "HermitianMatrix") -> "HermitianMatrix":
        return HermitianMatrix.from_array(self.array - _arr(other))

    def scaled(self, c: float) -> "HermitianMatrix":
        return HermitianMatrix.from_array(float(c) * self.array)

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.array))

    def to_json(self) -> dict[str, Any]:
        return matrix_to_json(self.array)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    u: np.ndarray
    lam: np.ndarray

    @property
    def n(self) -> int:
        return self.lam.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.lam) @ self.u.conj().T

    def apply(self, values: np.ndarray) -> HermitianMatrix:
        return HermitianMatrix.from_array((self.u * values) @ self.u.conj().T)


def _arr(m: Any) -> np.ndarray:
    return np.asarray(getattr(m, "array", m))


@lru_cache(maxsize=None)
def _round_robin(n: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """Tournament ordering: n - 1 rounds of disjoint (p, q) pairs covering every pair once."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        if pairs:
            rounds.append((np.array([p for p, _ in pairs]), np.array([q for _, q in pairs])))
        players = [players[0], players[-1], *players[1:-1]]
    return tuple(rounds)


def _off_norms(a: np.ndarray) -> np.ndarray:
    """Off-diagonal Frobenius norm of every matrix in a (k, n, n) stack."""
    off = a.copy()
    idx = np.arange(a.shape[1])
    off[:, idx, idx] = 0.0
    return np.linalg.norm(off, axis=(1, 2))


def _rotate(a: np.ndarray, v: np.ndarray, p: np.ndarray, q: np.ndarray,
            floor: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One round of disjoint rotations applied to a whole stack.

    Entries at or below the matrix's own floor get the identity rotation.
    """
    beta = a[:, p, q]
    mag = np.abs(beta)
    active = mag > floor[:, None]
    if not active.any():
        return a, v
    safe = np.where(active, mag, 1.0)
    alpha = a[:, p, p].real
    gamma = a[:, q, q].real
    zeta = (gamma - alpha) / (2.0 * safe)
    t = np.where(zeta >= 0.0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
    t = np.where(active, t, 0.0)
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c
    # Complex rotation: strip the phase of a_pq, then a real Givens rotation.
    unphase = np.where(active, np.conj(beta) / safe, 1.0)
    j = np.broadcast_to(np.eye(a.shape[1], dtype=complex), a.shape).copy()
    j[:, p, p] = c
    j[:, p, q] = s
    j[:, q, p] = -s * unphase
    j[:, q, q] = c * unphase
    jh = np.conj(np.swapaxes(j, 1, 2))
    a = jh @ a @ j
    a = 0.5 * (a + np.conj(np.swapaxes(a, 1, 2)))
    return a, v @ j


def _jacobi(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic complex Jacobi over a (k, n, n) stack of equal-size Hermitian matrices.

    Every matrix keeps its own threshold and stops rotating once its own
    off-diagonal mass is below target, so a matrix decomposes the same way
    alone or in a batch.
    """
    a = stack.copy()
    n = a.shape[1]
    v = np.broadcast_to(np.eye(n, dtype=complex), a.shape).copy()
    target = CONVERGENCE * np.linalg.norm(a, axis=(1, 2))
    rounds = _round_robin(n)

    sweep = 0
    off = _off_norms(a)
    pending = off > target
    while pending.any():
        if sweep >= MAX_SWEEPS:
            worst = int(np.argmax(np.where(pending, off - target, -np.inf)))
            raise NonConvergence(sweep, float(off[worst]), float(target[worst]))
        if sweep < THRESHOLD_SWEEPS:
            floor = THRESHOLD_FACTOR * off / (n * n)
        else:
            floor = 1e-3 * target / n
        floor = np.where(pending, floor, np.inf)
        for p, q in rounds:
            a, v = _rotate(a, v, p, q, floor)
        sweep += 1
        off = _off_norms(a)
        pending = off > target

    lam = np.diagonal(a, axis1=1, axis2=2).real.copy()
    order = np.argsort(lam, axis=1, kind="stable")
    lam = np.take_along_axis(lam, order, axis=1)
    u = np.take_along_axis(v, order[:, None, :], axis=2)

    mags = np.abs(u)
    significant = mags > PHASE_CUTOFF * mags.max(axis=1, keepdims=True)
    first = np.argmax(significant, axis=1)
    pivots = np.take_along_axis(u, first[:, None, :], axis=1)[:, 0, :]
    u = u * (np.conj(pivots) / np.abs(pivots))[:, None, :]
    return u, lam


def eig_hermitian_many(hs: Sequence[Any]) -> list[SpectralDecomposition]:
    """Decompose several Hermitian matrices, one Jacobi run per matrix size.

    Results come back in input order and match `eig_hermitian` on each matrix.
    """
    mats = [HermitianMatrix.from_array(h).array for h in hs]
    by_size: dict[int, list[int]] = {}
    for i, m in enumerate(mats):
        by_size.setdefault(m.shape[0], []).append(i)
    out: list[SpectralDecomposition | None] = [None] * len(mats)
    for idx in by_size.values():
        u, lam = _jacobi(np.stack([mats[i] for i in idx]))
        for k, i in enumerate(idx):
            uk, lk = u[k].copy(), lam[k].copy()
            uk.setflags(write=False)
            lk.setflags(write=False)
            out[i] = SpectralDecomposition(u=uk, lam=lk)
    return out


def eig_hermitian(h: Any) -> SpectralDecomposition:
    """Cyclic complex Jacobi (parallel round-robin ordering, threshold strategy).

    Eigenvalues come back ascending; each eigenvector has its first
    non-negligible component made real positive.
    """
    return eig_hermitian_many([h])[0]


def apply_scalar_function(f: Any, d: SpectralDecomposition) -> HermitianMatrix:
    """Functional calculus: U diag(f(λᵢ)) U*."""
    f.check_domain(d.lam)
    return d.apply(np.asarray(f.eval(d.lam), dtype=float))


def function_of(f: Any, h: Any) -> HermitianMatrix:
    return apply_scalar_function(f, eig_hermitian(h))


def operator_norm(m: Any) -> float:
    return float(np.linalg.norm(_arr(m), 2))


def loewner_leq(a: Any, b: Any, tol: LoewnerTolerance | None = None) -> Verdict:
    """A ≤ B in the Löwner order, decided on λ_min(B − A)."""
    return loewner_leq_many([(a, b)], tol)[0]


def loewner_leq_many(pairs: Sequence[tuple[Any, Any]], tol: LoewnerTolerance | None = None) -> list[Verdict]:
    """`loewner_leq` on every (A, B) pair, with all the differences decomposed in one batch."""
    tol = tol or LoewnerTolerance()
    checked = []
    for a, b in pairs:
        a, b = HermitianMatrix.from_array(a), HermitianMatrix.from_array(b)
        if a.n != b.n:
            raise DimensionMismatch(f"cannot compare {a.n}x{a.n} with {b.n}x{b.n}")
        checked.append((a, b))
    spectra = eig_hermitian_many([b - a for a, b in checked])
    return [_order_verdict(a, b, float(d.lam[0]), tol) for (a, b), d in zip(checked, spectra)]


def _order_verdict(a: HermitianMatrix, b: HermitianMatrix, margin: float, tol: LoewnerTolerance) -> Verdict:
    scale = max(operator_norm(a), operator_norm(b))
    return Verdict.decide(
        margin,
        scale,
        tol,
        witness=lambda: {"a": a.to_json(), "b": b.to_json()},
    )


def psd_power(h: Any, s: float, zero_power: float = 1.0) -> HermitianMatrix:
    """H^s for positive semidefinite H, absorbing rounding-level negative eigenvalues.

    For s = 0 eigenvalues below RANK_CUTOFF·λ_max count as zeros and map to
    `zero_power` (1 gives H⁰ = I, 0 the support projection).
    """
    d = eig_hermitian(h)
    scale = max(1.0, float(np.max(np.abs(d.lam))))
    if d.lam[0] < -PSD_SLACK * scale:
        raise NotPositive(f"matrix is not positive semidefinite (λ_min = {d.lam[0]:.3e})")
    lam = np.clip(d.lam, 0.0, None)
    if s == 0:
        lam = np.where(lam > RANK_CUTOFF * float(lam.max()), lam, 0.0)
    return d.apply(_zero_safe_power(lam, s, zero_power=zero_power))


def _zero_safe_power(x: np.ndarray, s: float, zero_power: float) -> np.ndarray:
    out = np.zeros_like(x, dtype=float)
    positive = x > 0
    out[positive] = x[positive] ** s
    if s == 0:
        out[~positive] = zero_power
    return out


def _gram_decomposition(m: Any) -> tuple[np.ndarray, np.ndarray]:
    arr = as_complex_matrix(m)
    d = eig_hermitian(arr.conj().T @ arr)
    sigma = np.sqrt(np.clip(d.lam, 0.0, None))
    return d.u, sigma


def singular_values(m: Any) -> np.ndarray:
    """Singular values, descending."""
    _, sigma = _gram_decomposition(m)
    return sigma[::-1].copy()


def abs_op(m: Any) -> HermitianMatrix:
    """|M| = (M*M)^{1/2}."""
    u, sigma = _gram_decomposition(m)
    return HermitianMatrix.from_array((u * sigma) @ u.conj().T)


def abs_power(m: Any, s: float, zero_power: float = 0.0,
              rank_cutoff: float = RANK_CUTOFF) -> HermitianMatrix:
    """|M|^s from the singular values.

    Singular values below rank_cutoff·σ_max are exact zeros: 0^s is 0 for
    s > 0, `zero_power` for s = 0 (0 gives the support projection, 1 the
    identity convention). Negative s needs a nonsingular M.
    """
    u, sigma = _gram_decomposition(m)
    top = float(sigma.max()) if sigma.size else 0.0
    sigma = np.where(sigma > rank_cutoff * top, sigma, 0.0)
    if s < 0 and np.any(sigma == 0.0):
        raise SingularX("negative power of a singular |M|")
    return HermitianMatrix.from_array((u * _zero_safe_power(sigma, s, zero_power)) @ u.conj().T)


def trace(m: Any) -> complex:
    return complex(np.trace(_arr(m)))


def schatten_norm(m: Any, p: float) -> float:
    """(Σ σᵢᵖ)^{1/p}; p = SCHATTEN_INF gives the operator norm."""
    if p != SCHATTEN_INF and p < 1:
        raise BadExponent(f"Schatten exponent must be ≥ 1 or ∞, got {p}")
    sigma = singular_values(m)
    if p == SCHATTEN_INF:
        return float(sigma[0])
    if p == 1:
        return float(sigma.sum())
    return float(np.sum(sigma ** p) ** (1.0 / p))


def commutator_norm(a: Any, b: Any) -> float:
    x, y = _arr(a), _arr(b)
    return float(np.linalg.norm(x @ y - y @ x))


def is_unitary(u: Any, rtol: float = 1e-12) -> bool:
    arr = np.asarray(u, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        return False
    n = arr.shape[0]
    return float(np.linalg.norm(arr @ arr.conj().T - np.eye(n))) <= rtol * n


def require_unitary(u: Any) -> np.ndarray:
    arr = as_complex_matrix(u)
    if not is_unitary(arr):
        raise NotUnitary(f"‖UU* − I‖_F exceeds {1e-12 * arr.shape[0]:.1e}")
    return arr


def scalar_verdict(
    lhs: float,
    rhs: float,
    tol: LoewnerTolerance,
    witness: Callable[[], dict[str, Any]],
    details: dict[str, Any] | None = None,
) -> Verdict:
    """lhs ≤ rhs for real numbers, with the same three-way bands as loewner_leq."""
    lhs, rhs = float(lhs), float(rhs)
    return Verdict.decide(
        rhs - lhs,
        max(abs(lhs), abs(rhs)),
        tol,
        witness=witness,
        lhs=lhs,
        rhs=rhs,
        details=details,
    )


def functional_calculus_check(h: Any, tol: LoewnerTolerance | None = None) -> Verdict:
    """Algebraic properties of f ↦ f(H) on one decomposition.

    Linearity, multiplicativity, Φ(1) = I, Φ(id) = H, and ‖Φ(f)‖ = max|f(λᵢ)|,
    with f = exp and g = t ↦ t² + 1 (both defined on the whole line).
    """
    from scalar_functions import REAL_LINE, ScalarFunctionSpec, exp_function, identity_function

    tol = tol or LoewnerTolerance()
    h = HermitianMatrix.from_array(h)
    d = eig_hermitian(h)
    f = exp_function()
    g = ScalarFunctionSpec("t^2+1", lambda x: np.square(x) + 1.0, REAL_LINE)
    fa = apply_scalar_function(f, d).array
    ga = apply_scalar_function(g, d).array
    residuals = {
        "linearity": np.linalg.norm(d.apply(2.0 * f.eval(d.lam) - 3.0 * g.eval(d.lam)).array - (2.0 * fa - 3.0 * ga)),
        "multiplicativity": np.linalg.norm(d.apply(f.eval(d.lam) * g.eval(d.lam)).array - fa @ ga),
        "unit": np.linalg.norm(d.apply(np.ones(d.n)).array - np.eye(d.n)),
        "identity": np.linalg.norm(apply_scalar_function(identity_function(), d).array - h.array),
        "norm": abs(operator_norm(fa) - float(np.max(np.abs(f.eval(d.lam))))),
    }
    scale = max(1.0, float(np.linalg.norm(fa)), float(np.linalg.norm(fa @ ga)))
    worst = max(residuals.values())
    return Verdict.decide(
        -float(worst),
        scale,
        tol,
        witness=lambda: {"h": h.to_json()},
        details={k: float(v) for k, v in residuals.items()},
    )


def order_from_scalar_check(f: Any, g: Any, h: Any, grid: int = 65,
                            tol: LoewnerTolerance | None = None) -> Verdict:
    """f ≥ g on Sp(H) implies g(H) ≤ f(H).

    The scalar hypothesis is sampled on a grid over [λ_min, λ_max]; when it
    fails there the check is reported Skipped.
    """
    tol = tol or LoewnerTolerance()
    d = eig_hermitian(h)
    ts = np.unique(np.concatenate([np.linspace(d.lam[0], d.lam[-1], grid), d.lam]))
    gap = float(np.min(f.eval(ts) - g.eval(ts)))
    if gap < 0:
        return Verdict(VerdictStatus.SKIPPED, gap, details={"grid": grid, "scalar_gap": gap})
    verdict = loewner_leq(apply_scalar_function(g, d), apply_scalar_function(f, d), tol)
    verdict.details = {"grid": grid, "scalar_gap": gap}
    return verdict


def decomposition_check(h: Any, rtol: float = 1e-12) -> Verdict:
    """‖U diag(λ) U* − H‖_F and ‖U*U − I‖_F both within rtol·max(1, ‖H‖_F)."""
    h = HermitianMatrix.from_array(h)
    d = eig_hermitian(h)
    residual = float(np.linalg.norm(d.reconstruct() - h.array))
    orthogonality = float(np.linalg.norm(d.u.conj().T @ d.u - np.eye(d.n)))
    scale = max(1.0, h.frobenius())
    return Verdict.decide(
        -max(residual, orthogonality * scale),
        scale,
        LoewnerTolerance(rel=rtol, abs_floor=0.0),
        witness=lambda: {"h": h.to_json()},
        details={"residual": residual, "orthogonality": orthogonality, "ascending": bool(np.all(np.diff(d.lam) >= 0))},
    )
