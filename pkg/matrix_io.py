from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from errors import MatrixFormatError


# Matrix file format shared by every module: {"n": int, "re": [[...]], "im": [[...]]},
# row-major. Floats are written with Python's shortest round-trip repr, so a
# matrix read back from a witness file is bit-identical to the one written.


def matrix_to_json(m: Any) -> dict[str, Any]:
    arr = np.asarray(getattr(m, "array", m), dtype=complex)
    n = arr.shape[0]
    return {
        "n": int(n),
        "re": [[float(x) for x in row] for row in arr.real],
        "im": [[float(x) for x in row] for row in arr.imag],
    }


def matrix_from_json(data: dict[str, Any]) -> np.ndarray:
    try:
        n = int(data["n"])
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data.get("im", np.zeros((n, n))), dtype=float)
    except (KeyError, TypeError, ValueError) as ex:
        raise MatrixFormatError(f"not a matrix payload: {ex}") from ex
    if n < 1 or re.shape != (n, n) or im.shape != (n, n):
        raise MatrixFormatError(f"matrix payload is not {n}x{n}: re {re.shape}, im {im.shape}")
    m = re + 1j * im
    if not np.all(np.isfinite(m)):
        raise MatrixFormatError("matrix payload contains NaN or Inf entries")
    return m


def read_matrix_file(path: str | Path) -> np.ndarray:
    return matrix_from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def write_json(path: str | Path, payload: Any) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8", newline="\n") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    return out
