from __future__ import annotations

import csv
from pathlib import Path
from typing import Any, Sequence

from matrix_io import write_json
from models import ChainReport

TRIAL_COLUMNS = ["check", "dim", "seed_index", "min_margin", "normalized_margin", "verdict"]


def write_report(path: str | Path, payload: dict[str, Any]) -> Path:
    """Campaign report JSON. Keys are sorted so two runs differ only in timing fields."""
    return write_json(path, payload)


def write_trials_csv(path: str | Path, rows: Sequence[Sequence[Any]]) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(TRIAL_COLUMNS)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return out


def write_chain_csv(
    path: str | Path,
    chains: Sequence[ChainReport],
    seed_indices: Sequence[int] | None = None,
) -> Path:
    """One row per chain, one column per link, then the verdict.

    Every chain must share the first chain's link names. With `seed_indices`
    each row starts with the trial it came from.
    """
    if not chains:
        raise ValueError("no chains to write")
    if seed_indices is not None and len(seed_indices) != len(chains):
        raise ValueError(f"{len(seed_indices)} seed indices for {len(chains)} chains")
    names = chains[0].link_names
    for chain in chains[1:]:
        if chain.link_names != names:
            raise ValueError(f"chain links {chain.link_names} do not match {names}")
    lead = ["seed_index"] if seed_indices is not None else []
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow([*lead, *names, "verdict"])
        for k, chain in enumerate(chains):
            key = [seed_indices[k]] if seed_indices is not None else []
            w.writerow([*key, *(_cell(v) for v in chain.csv_row())])
    return out


def _cell(value: Any) -> Any:
    # repr keeps every digit, so a margin read back from the CSV is the reported one
    if isinstance(value, float):
        return repr(value)
    return value
