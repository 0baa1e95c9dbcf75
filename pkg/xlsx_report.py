from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING

from openpyxl import Workbook
from openpyxl.styles import Font

from report_writer import TRIAL_COLUMNS

if TYPE_CHECKING:
    from campaign import CampaignReport

SUMMARY_COLUMNS = [
    "check",
    "trials",
    "holds",
    "inconclusive",
    "violated",
    "skipped",
    "failures",
    "min_margin",
    "median_margin",
    "min_normalized_margin",
    "witnesses",
]


def write_workbook(path: str | Path, report: "CampaignReport") -> Path:
    """Campaign results as a workbook: a `summary` sheet and a `trials` sheet."""
    workbook = Workbook()
    summary = workbook.active
    summary.title = "summary"
    summary.append(SUMMARY_COLUMNS)
    for name, s in report.summaries.items():
        summary.append(
            [
                name,
                s.trials,
                s.holds,
                s.inconclusive,
                s.violated,
                s.skipped,
                s.failures,
                s.min_margin,
                s.median_margin,
                s.min_normalized_margin,
                "\n".join(s.witness_refs),
            ]
        )

    trials = workbook.create_sheet("trials")
    trials.append(TRIAL_COLUMNS)
    for result in report.trials:
        trials.append(result.csv_row())

    for ws in (summary, trials):
        for cell in ws[1]:
            cell.font = Font(bold=True)
        ws.freeze_panes = "A2"

    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    workbook.save(out)
    return out
