from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from functools import partial
from pathlib import Path
from typing import Any

import numpy as np

from checks import REGISTRY, SCALAR_DIM, default_checks, get_check
from errors import ConfigError, NonConvergence, VerificationError
from matrix_io import write_json
from models import (
    SCHEMA_VERSION,
    VERSION,
    CampaignConfig,
    ChainReport,
    LoewnerTolerance,
    QuadratureSpec,
    Verdict,
    VerdictStatus,
)
from random_instances import trial_rng
from report_writer import write_chain_csv, write_report, write_trials_csv
from scalar_functions import resolve_function
from trace_ineq import TraceCheckInstance
from xlsx_report import write_workbook

DEFAULT_OUTPUT = "campaign_output"
LOGFILE_NAME = "campaignlogfile.txt"
REPORT_NAME = "campaign_report.json"

# Failures a single trial may raise without aborting the campaign.
TRIAL_FAILURES = (VerificationError, ArithmeticError, ValueError)


@dataclass
class TrialResult:
    check: str
    dim: int
    seed_index: int
    verdict: Verdict
    # Replay instance, kept only for Violated trials.
    instance: dict[str, Any] | None = None
    error: str | None = None
    non_convergence: bool = False
    chain: ChainReport | None = None

    @property
    def key(self) -> tuple[str, int, int]:
        return self.check, self.dim, self.seed_index

    def csv_row(self) -> list[Any]:
        return [
            self.check,
            self.dim,
            self.seed_index,
            self.verdict.margin,
            self.verdict.normalized_margin,
            self.verdict.status.value,
        ]


@dataclass
class CheckSummary:
    check: str
    trials: int = 0
    holds: int = 0
    inconclusive: int = 0
    violated: int = 0
    # Trials whose hypothesis the instance did not meet; counted under holds.
    skipped: int = 0
    failures: int = 0
    min_margin: float | None = None
    median_margin: float | None = None
    min_normalized_margin: float | None = None
    witness_refs: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "trials": self.trials,
            "holds": self.holds,
            "inconclusive": self.inconclusive,
            "violated": self.violated,
            "skipped": self.skipped,
            "failures": self.failures,
            "min_margin": self.min_margin,
            "median_margin": self.median_margin,
            "min_normalized_margin": self.min_normalized_margin,
            "witness_refs": list(self.witness_refs),
        }


@dataclass
class CampaignReport:
    config: CampaignConfig
    summaries: dict[str, CheckSummary]
    trials: list[TrialResult]
    duration_seconds: float = 0.0
    started_at: str = ""

    @property
    def violated(self) -> int:
        return sum(s.violated for s in self.summaries.values())

    @property
    def non_convergent(self) -> int:
        return sum(1 for t in self.trials if t.non_convergence)

    @property
    def exit_code(self) -> int:
        if self.violated:
            return 1
        if self.non_convergent:
            return 3
        return 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "version": VERSION,
            "config": self.config.to_dict(),
            "checks": {name: s.to_dict() for name, s in self.summaries.items()},
            "duration_seconds": self.duration_seconds,
            "started_at": self.started_at,
        }


# ── configuration ────────────────────────────────────────────────────────────


def config_from_dict(data: dict[str, Any]) -> CampaignConfig:
    try:
        tolerance = LoewnerTolerance(
            rel=float(data.get("toleranceRel", 1e-9)),
            abs_floor=float(data.get("toleranceAbs", 1e-12)),
        )
        quadrature = QuadratureSpec(
            panels=int(data.get("quadraturePanels", QuadratureSpec.panels)),
            nodes_per_panel=int(data.get("quadratureNodes", QuadratureSpec.nodes_per_panel)),
        )
        defaults = CampaignConfig()
        lo, hi = data.get("spectraRange", defaults.spectra_range)
        config = CampaignConfig(
            seed=int(data.get("seed", defaults.seed)),
            dims=[int(n) for n in data.get("dims", defaults.dims)],
            trials_per_check=int(data.get("trialsPerCheck", defaults.trials_per_check)),
            spectra_range=(float(lo), float(hi)),
            function_set=[str(f) for f in data.get("functionSet", defaults.function_set)],
            checks=[str(c) for c in data.get("checks", [])],
            tolerance=tolerance,
            quadrature=quadrature,
            workers=int(data.get("workers", defaults.workers)),
            output_path=str(data.get("outputPath", "")),
        )
    except (TypeError, ValueError) as ex:
        raise ConfigError(f"invalid campaign configuration: {ex}") from ex
    validate_config(config)
    return config


def load_config(path: str | Path) -> CampaignConfig:
    cfg_path = Path(path)
    try:
        data = json.loads(cfg_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as ex:
        raise ConfigError(f"cannot read config file '{cfg_path}': {ex}") from ex
    if not isinstance(data, dict):
        raise ConfigError(f"config file '{cfg_path}' must hold a JSON object")
    return config_from_dict(data)


def validate_config(config: CampaignConfig) -> None:
    lo, hi = config.spectra_range
    if not 0 < lo <= hi or not np.isfinite(hi):
        raise ConfigError(f"spectra range must satisfy 0 < min <= max < inf, got [{lo}, {hi}]")
    if config.trials_per_check < 1:
        raise ConfigError("trialsPerCheck must be at least 1")
    if not config.dims or any(n < 1 for n in config.dims):
        raise ConfigError(f"dims must be a non-empty list of positive sizes, got {config.dims}")
    if config.workers < 1:
        raise ConfigError("workers must be at least 1")
    if not config.function_set:
        raise ConfigError("functionSet must name at least one function")
    for name in config.function_set:
        try:
            f = resolve_function(name)
        except ValueError as ex:
            raise ConfigError(str(ex)) from ex
        if not f.geometrically_convex:
            raise ConfigError(f"function '{name}' is not geometrically convex")
    unknown = [c for c in config.checks if c not in REGISTRY]
    if unknown:
        raise ConfigError(f"unknown check id(s): {', '.join(unknown)}")


def selected_checks(config: CampaignConfig) -> list[str]:
    return list(config.checks) if config.checks else default_checks()


# ── trials ───────────────────────────────────────────────────────────────────


def run_trial(config: CampaignConfig, task: tuple[str, int, int]) -> TrialResult:
    """Build, serialize, reload and evaluate one trial.

    The evaluated instance is the one read back from its JSON form, so a
    witness file replays bit for bit.
    """
    check, dim, seed_index = task
    definition = get_check(check)
    rng = trial_rng(config.seed, check, seed_index)
    try:
        instance = TraceCheckInstance.from_json(definition.build(rng, dim, config).to_json())
        verdict, chain = definition.outcome(instance, config)
    except TRIAL_FAILURES as ex:
        cause = f"{type(ex).__name__}: {ex}"
        verdict = Verdict(VerdictStatus.INCONCLUSIVE, 0.0, details={"error": cause})
        return TrialResult(check, dim, seed_index, verdict, error=cause,
                           non_convergence=isinstance(ex, NonConvergence))
    replay = instance.to_json() if verdict.status == VerdictStatus.VIOLATED else None
    return TrialResult(check, dim, seed_index, verdict, instance=replay, chain=chain)


def witness_dossier(result: TrialResult, config: CampaignConfig) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "instance": result.instance,
        "verdict": result.verdict.to_dict(),
        "dim": result.dim,
        "seed_index": result.seed_index,
        "tolerance": {"rel": config.tolerance.rel, "abs": config.tolerance.abs_floor},
        "quadrature": {"panels": config.quadrature.panels, "nodes": config.quadrature.nodes_per_panel},
    }


def config_for_replay(dossier: dict[str, Any], base: CampaignConfig | None = None) -> CampaignConfig:
    """The tolerance and quadrature a witness was judged with."""
    base = base or CampaignConfig()
    tol = dossier.get("tolerance", {})
    quad = dossier.get("quadrature", {})
    return replace(
        base,
        tolerance=LoewnerTolerance(
            rel=float(tol.get("rel", base.tolerance.rel)),
            abs_floor=float(tol.get("abs", base.tolerance.abs_floor)),
        ),
        quadrature=QuadratureSpec(
            panels=int(quad.get("panels", base.quadrature.panels)),
            nodes_per_panel=int(quad.get("nodes", base.quadrature.nodes_per_panel)),
        ),
    )


def summarize(check: str, results: list[TrialResult]) -> CheckSummary:
    summary = CheckSummary(check, trials=len(results))
    margins, normalized = [], []
    for r in results:
        status = r.verdict.status
        if status == VerdictStatus.VIOLATED:
            summary.violated += 1
        elif status == VerdictStatus.INCONCLUSIVE:
            summary.inconclusive += 1
        else:
            summary.holds += 1
            if status == VerdictStatus.SKIPPED:
                summary.skipped += 1
        if r.error is not None:
            summary.failures += 1
        elif status != VerdictStatus.SKIPPED:
            margins.append(r.verdict.margin)
            normalized.append(r.verdict.normalized_margin)
    if margins:
        summary.min_margin = float(np.min(margins))
        summary.median_margin = float(np.median(margins))
        summary.min_normalized_margin = float(np.min(normalized))
    return summary


class CampaignRunner:
    def __init__(
        self,
        config: CampaignConfig,
        report_path: str | Path | None = None,
        csv_path: str | Path | None = None,
        xlsx_path: str | Path | None = None,
        chains_path: str | Path | None = None,
        quiet: bool = False,
    ):
        self.config = config
        self.output_path = Path(config.output_path or DEFAULT_OUTPUT)
        self.report_path = Path(report_path) if report_path else self.output_path / REPORT_NAME
        self.csv_path = Path(csv_path) if csv_path else None
        self.xlsx_path = Path(xlsx_path) if xlsx_path else None
        self.chains_path = Path(chains_path) if chains_path else None
        self.quiet = quiet
        self.errorsEncountered = False
        self.logstring: list[str] = []
        self.results: dict[tuple[str, int, int], TrialResult] = {}

    def tasks(self) -> list[tuple[str, int, int]]:
        """trials_per_check trials per check; trial k runs at dims[k mod len(dims)].

        Scalar checks take no dimension and run every trial at SCALAR_DIM.
        """
        tasks = []
        for check in selected_checks(self.config):
            dims = self.config.dims if get_check(check).dimensional else [SCALAR_DIM]
            tasks.extend((check, dims[k % len(dims)], k) for k in range(self.config.trials_per_check))
        return tasks

    def execute(self) -> None:
        tasks = self.tasks()
        work = partial(run_trial, self.config)
        if self.config.workers > 1:
            chunk = max(1, len(tasks) // (self.config.workers * 8))
            with ProcessPoolExecutor(max_workers=self.config.workers) as pool:
                outcomes = list(pool.map(work, tasks, chunksize=chunk))
        else:
            outcomes = [work(task) for task in tasks]
        for result in outcomes:
            self.results[result.key] = result

    def run(self) -> CampaignReport:
        validate_config(self.config)
        self.logstring = [f"Log file for campaign: seed={self.config.seed}, dims={self.config.dims}, "
                          f"trials per check={self.config.trials_per_check}"]
        self.output_path.mkdir(parents=True, exist_ok=True)

        started_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
        clock = time.perf_counter()
        self.execute()
        duration = time.perf_counter() - clock

        trials = [self.results[key] for key in sorted(self.results)]
        summaries: dict[str, CheckSummary] = {}
        for check in selected_checks(self.config):
            mine = [r for r in trials if r.check == check]
            summary = summarize(check, mine)
            self._log_check(summary, mine)
            summaries[check] = summary

        report = CampaignReport(self.config, summaries, trials, round(duration, 3), started_at)
        write_report(self.report_path, report.to_dict())
        if self.csv_path is not None:
            write_trials_csv(self.csv_path, [r.csv_row() for r in trials])
        if self.xlsx_path is not None:
            write_workbook(self.xlsx_path, report)
        if self.chains_path is not None:
            self._write_chains(trials)

        self.logstring.extend(
            [
                "\r--------------------------------------------------------------------------------",
                "End of log file",
                "--------------------------------------------------------------------------------",
            ]
        )
        logfile_path = self._write_logfile()
        if not self.quiet:
            self._print_banner(report, logfile_path)
        return report

    def _log_check(self, summary: CheckSummary, results: list[TrialResult]) -> None:
        self.logstring.append("")
        self.logstring.append(
            f"Check {summary.check}: {summary.trials} trials, {summary.holds} holds "
            f"({summary.skipped} skipped), {summary.inconclusive} inconclusive, {summary.violated} violated"
        )
        for r in results:
            where = f"{r.check} n={r.dim} trial={r.seed_index}"
            if r.error is not None:
                self.logstring.append(f"WARNING: {where} could not be evaluated: {r.error}")
            elif r.verdict.status == VerdictStatus.INCONCLUSIVE:
                self.logstring.append(f"WARNING: {where} inconclusive, margin {r.verdict.margin:.3e}")
            elif r.verdict.status == VerdictStatus.VIOLATED:
                self.errorsEncountered = True
                ref = self._write_witness(r)
                summary.witness_refs.append(ref)
                self.logstring.append(f"ERROR: {where} violated, margin {r.verdict.margin:.3e}")
                self.logstring.append(f"Witness: {ref}")

    def _write_chains(self, trials: list[TrialResult]) -> None:
        """One CSV per chain check, one row per trial that built its chain."""
        for check in selected_checks(self.config):
            built = [r for r in trials if r.check == check and r.chain is not None]
            if built:
                write_chain_csv(self.chains_path / f"{check}.csv", [r.chain for r in built],
                                seed_indices=[r.seed_index for r in built])

    def _write_witness(self, result: TrialResult) -> str:
        ref = f"witnesses/{result.check}-n{result.dim}-t{result.seed_index}.json"
        write_json(self.output_path / ref, witness_dossier(result, self.config))
        return ref

    def _write_logfile(self) -> Path:
        logfile = self.output_path / LOGFILE_NAME
        with logfile.open("w", encoding="utf-8", newline="") as f:
            for line in self.logstring:
                f.write(line + "\r\n")
            f.write("\n\r\n")
        return logfile

    def _print_banner(self, report: CampaignReport, logfile_path: Path) -> None:
        total = len(report.trials)
        if self.errorsEncountered:
            print(f"VIOLATIONS FOUND: {report.violated} of {total} trials violated an inequality!")
            print(f"Witness files are in: {self.output_path / 'witnesses'}")
            print(f"Please refer to the log file: {logfile_path}")
        elif report.non_convergent:
            print(f"NUMERICAL FAILURES: {report.non_convergent} trials did not converge. No violations were found.")
            print(f"Log file: {logfile_path}")
        else:
            print(f"SUCCESS: {total} trials across {len(report.summaries)} checks. No violations were found.")
            print(f"Report: {self.report_path}")
            print(f"Log file: {logfile_path}")


def run_campaign(config: CampaignConfig, **kwargs) -> CampaignReport:
    return CampaignRunner(config, **kwargs).run()


def run_from_config_file(config_file: str | Path, **kwargs) -> int:
    return run_campaign(load_config(config_file), **kwargs).exit_code
