"""Reading and writing orbits, symbol sequences, matrices and reports.

Formats:

* orbit CSV: header ``x`` or ``x,y``, one point per row, shortest
  round-tripping float text;
* symbol file: header ``alphabet=N`` then one integer symbol per line;
* matrices: row-major JSON arrays;
* reports: JSON with sorted keys and no timestamps, so identical inputs give
  byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ObsEquivError
from .processes import SymbolSequence


class FormatError(ObsEquivError, ValueError):
    """A data file does not follow the expected format."""


def orbit_to_csv(points: np.ndarray) -> str:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    header = ",".join(("x", "y")[: pts.shape[1]])
    lines = [header]
    lines.extend(",".join(repr(float(v)) for v in row) for row in pts)
    return "\n".join(lines) + "\n"


def read_orbit_csv(path: str | Path) -> np.ndarray:
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() not in ("x", "x,y"):
        raise FormatError(f"{path}: orbit CSV must start with header 'x' or 'x,y'")
    cols = text[0].count(",") + 1
    try:
        return np.array([[float(v) for v in line.split(",")] for line in text[1:] if line.strip()]).reshape(-1, cols)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def symbols_to_text(seq: SymbolSequence) -> str:
    body = "\n".join(map(str, seq.data.tolist()))
    return f"alphabet={seq.n_symbols}\n" + (body + "\n" if body else "")


def read_symbols(path: str | Path) -> SymbolSequence:
    """Parse a symbol file; raises :class:`FormatError` on a bad header or symbol."""
    try:
        with open(path) as fh:
            header = fh.readline().strip()
            if not header.startswith("alphabet="):
                raise FormatError(f"{path}: first line must be 'alphabet=N', got {header!r}")
            n = int(header.split("=", 1)[1])
            data = np.loadtxt(fh, dtype=np.int64, ndmin=1)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    try:
        return SymbolSequence(n, data, origin=str(path))
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_symbols(seq: SymbolSequence, path: str | Path) -> None:
    Path(path).write_text(symbols_to_text(seq))


def matrix_to_json(m) -> list:
    return np.asarray(m, dtype=float).tolist()


def read_matrix(path: str | Path) -> np.ndarray:
    try:
        m = np.array(json.loads(Path(path).read_text()), dtype=float)
    except (ValueError, TypeError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise FormatError(f"{path}: transition matrix must be a square row-major array")
    return m


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def dumps_report(report: dict) -> str:
    """Deterministic JSON text: sorted keys, non-finite floats become null."""
    return json.dumps(_plain(report), indent=2, sort_keys=True) + "\n"
