from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Sequence

import numpy as np


SCHEMA_VERSION = 1
VERSION = "1.0.0"

# ── Verdict bands ────────────────────────────────────────────────────────────
# A comparison holds when its margin is no worse than -band. Anything below
# -VIOLATION_FACTOR * band is a genuine counterexample; the gap between the
# two is rounding we cannot attribute either way and is reported Inconclusive.
VIOLATION_FACTOR = 10.0

DEFAULT_DIMS: tuple[int, ...] = (2, 4, 8)
DEFAULT_SPECTRA_RANGE: tuple[float, float] = (0.1, 10.0)
DEFAULT_FUNCTION_SET: tuple[str, ...] = ("exp", "square", "poly:0,1,0,1", "cosh")


def default_workers() -> int:
    return os.cpu_count() or 1


class VerdictStatus(str, Enum):
    HOLDS = "Holds"
    VIOLATED = "Violated"
    INCONCLUSIVE = "Inconclusive"
    # Only used for sub-checks whose hypothesis the instance does not meet.
    SKIPPED = "Skipped"


@dataclass(frozen=True)
class LoewnerTolerance:
    rel: float = 1e-9
    abs_floor: float = 1e-12

    def __post_init__(self) -> None:
        if self.rel < 0 or self.abs_floor < 0:
            raise ValueError("tolerances must be nonnegative")

    def band(self, scale: float) -> float:
        return self.rel * max(scale, 1.0) + self.abs_floor

    def classify(self, margin: float, scale: float) -> VerdictStatus:
        band = self.band(scale)
        if not math.isfinite(margin):
            return VerdictStatus.INCONCLUSIVE
        if margin >= -band:
            return VerdictStatus.HOLDS
        if margin < -VIOLATION_FACTOR * band:
            return VerdictStatus.VIOLATED
        return VerdictStatus.INCONCLUSIVE


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss–Legendre rule: `panels` equal panels, `nodes_per_panel` nodes each."""

    panels: int = 8
    nodes_per_panel: int = 8

    def __post_init__(self) -> None:
        if self.panels < 1 or self.nodes_per_panel < 1:
            raise ValueError("panels and nodes_per_panel must be positive")
        if self.panels * self.nodes_per_panel < 4:
            raise ValueError("a quadrature rule needs at least 4 nodes in total")

    @property
    def total_nodes(self) -> int:
        return self.panels * self.nodes_per_panel

    def doubled(self) -> "QuadratureSpec":
        return QuadratureSpec(self.panels * 2, self.nodes_per_panel)

    def nodes(self, lo: float = 0.0, hi: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
        x, w = np.polynomial.legendre.leggauss(self.nodes_per_panel)
        edges = np.linspace(lo, hi, self.panels + 1)
        half = 0.5 * (edges[1:] - edges[:-1])
        mid = 0.5 * (edges[1:] + edges[:-1])
        points = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        return points, weights


@dataclass
class Verdict:
    status: VerdictStatus
    margin: float
    scale: float = 1.0
    lhs: float | None = None
    rhs: float | None = None
    witness: dict[str, Any] | None = None
    details: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.status == VerdictStatus.VIOLATED and self.witness is None:
            raise ValueError("a Violated verdict must carry a witness")

    @property
    def holds(self) -> bool:
        return self.status == VerdictStatus.HOLDS

    @property
    def normalized_margin(self) -> float:
        return self.margin / max(self.scale, 1e-300)

    @staticmethod
    def decide(
        margin: float,
        scale: float,
        tol: LoewnerTolerance,
        witness: Callable[[], dict[str, Any]],
        lhs: float | None = None,
        rhs: float | None = None,
        details: dict[str, Any] | None = None,
    ) -> "Verdict":
        """Classify a margin; the witness is only serialized when the verdict is Violated."""
        status = tol.classify(margin, scale)
        return Verdict(
            status=status,
            margin=float(margin),
            scale=float(scale),
            lhs=None if lhs is None else float(lhs),
            rhs=None if rhs is None else float(rhs),
            witness=witness() if status == VerdictStatus.VIOLATED else None,
            details=details or {},
        )

    @staticmethod
    def combine(parts: Sequence["Verdict"], witness: Callable[[], dict[str, Any]],
                details: dict[str, Any] | None = None) -> "Verdict":
        """Aggregate sub-verdicts: the overall margin is the smallest normalized one."""
        if not parts:
            raise ValueError("nothing to combine")
        worst = min(parts, key=lambda v: v.normalized_margin)
        statuses = {v.status for v in parts}
        if VerdictStatus.VIOLATED in statuses:
            status = VerdictStatus.VIOLATED
        elif VerdictStatus.INCONCLUSIVE in statuses:
            status = VerdictStatus.INCONCLUSIVE
        else:
            status = VerdictStatus.HOLDS
        return Verdict(
            status=status,
            margin=worst.margin,
            scale=worst.scale,
            lhs=worst.lhs,
            rhs=worst.rhs,
            witness=witness() if status == VerdictStatus.VIOLATED else None,
            details=details or {},
        )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "status": self.status.value,
            "margin": self.margin,
            "scale": self.scale,
            "normalized_margin": self.normalized_margin,
        }
        if self.lhs is not None:
            out["lhs"] = self.lhs
        if self.rhs is not None:
            out["rhs"] = self.rhs
        if self.details:
            out["details"] = _jsonable(self.details)
        if self.witness is not None:
            out["witness"] = self.witness
        return out


@dataclass
class ChainReport:
    link_names: list[str]
    link_values: list[float]
    margins: list[float]
    verdict: Verdict
    inputs: dict[str, Any] = field(default_factory=dict)

    @staticmethod
    def from_links(
        names: Sequence[str],
        values: Sequence[float],
        tol: LoewnerTolerance,
        inputs: dict[str, Any] | None = None,
        details: dict[str, Any] | None = None,
    ) -> "ChainReport":
        if len(names) != len(values) or len(values) < 2:
            raise ValueError("a chain needs at least two named links")
        values = [float(v) for v in values]
        margins = [values[k + 1] - values[k] for k in range(len(values) - 1)]
        scale = max(abs(v) for v in values)
        inputs = inputs or {}
        verdict = Verdict.decide(
            min(margins),
            scale,
            tol,
            witness=lambda: dict(inputs),
            lhs=values[0],
            rhs=values[-1],
            details=details,
        )
        return ChainReport(list(names), values, margins, verdict, inputs)

    def link(self, name: str) -> float:
        return self.link_values[self.link_names.index(name)]

    def to_dict(self) -> dict[str, Any]:
        return {
            "links": [{"name": n, "value": v} for n, v in zip(self.link_names, self.link_values)],
            "margins": self.margins,
            "verdict": self.verdict.to_dict(),
            "inputs": _jsonable(self.inputs),
        }

    def csv_row(self) -> list[Any]:
        return [*self.link_values, self.verdict.status.value]


@dataclass
class CampaignConfig:
    seed: int = 0
    dims: list[int] = field(default_factory=lambda: list(DEFAULT_DIMS))
    trials_per_check: int = 1000
    spectra_range: tuple[float, float] = DEFAULT_SPECTRA_RANGE
    function_set: list[str] = field(default_factory=lambda: list(DEFAULT_FUNCTION_SET))
    checks: list[str] = field(default_factory=list)  # empty means every registered check
    tolerance: LoewnerTolerance = field(default_factory=LoewnerTolerance)
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    workers: int = field(default_factory=default_workers)
    output_path: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "dims": list(self.dims),
            "trialsPerCheck": self.trials_per_check,
            "spectraRange": list(self.spectra_range),
            "functionSet": list(self.function_set),
            "checks": list(self.checks),
            "toleranceRel": self.tolerance.rel,
            "toleranceAbs": self.tolerance.abs_floor,
            "quadraturePanels": self.quadrature.panels,
            "quadratureNodes": self.quadrature.nodes_per_panel,
        }


def _jsonable(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Verdict):
        return value.to_dict()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return value
