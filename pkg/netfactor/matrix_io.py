"""
Plain coordinate matrix files.

    % optional comment lines
    rows cols nnz
    row col value        (0-indexed, nnz lines)

Values are written with 17 significant digits so a save/load round trip is exact.
"""

from __future__ import annotations

import csv
import logging
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from netfactor.errors import InputError, MatrixParseError
from netfactor.matcore import as_matrix
from netfactor.netstruct import HorizontalNetwork

logger = logging.getLogger(__name__)


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def save_matrix(m: object, path: Path | str) -> Path:
    arr = as_matrix(m)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows, cols = np.nonzero(arr)
    lines = [f"{arr.shape[0]} {arr.shape[1]} {rows.size}"]
    lines.extend(f"{int(i)} {int(j)} {_fmt(arr[i, j])}" for i, j in zip(rows, cols))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.debug("Saved %sx%s matrix (%s entries) to %s", arr.shape[0], arr.shape[1], rows.size, path)
    return path


def load_matrix(path: Path | str) -> np.ndarray:
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"Cannot read matrix file: {path}") from e

    header: tuple[int, int, int] | None = None
    out: np.ndarray | None = None
    seen = 0
    for lineno, line in enumerate(raw.splitlines(), start=1):
        text = line.strip()
        if not text or text.startswith("%"):
            continue
        parts = text.split()
        if header is None:
            header = _parse_header(path, lineno, parts)
            out = np.zeros(header[:2], dtype=np.float64)
            continue
        assert out is not None
        i, j, value = _parse_entry(path, lineno, parts, header)
        out[i, j] = value
        seen += 1

    if header is None or out is None:
        raise MatrixParseError(path, 1, "missing header 'rows cols nnz'")
    if seen != header[2]:
        raise MatrixParseError(path, lineno, f"header declares {header[2]} entries, found {seen}")
    return out


def _parse_header(path: Path, lineno: int, parts: Sequence[str]) -> tuple[int, int, int]:
    if len(parts) != 3:
        raise MatrixParseError(path, lineno, f"header must be 'rows cols nnz', got {' '.join(parts)!r}")
    try:
        rows, cols, nnz = (int(p) for p in parts)
    except ValueError as e:
        raise MatrixParseError(path, lineno, f"header values must be integers: {' '.join(parts)!r}") from e
    if rows < 0 or cols < 0 or nnz < 0:
        raise MatrixParseError(path, lineno, "header values must be nonnegative")
    return rows, cols, nnz


def _parse_entry(path: Path, lineno: int, parts: Sequence[str], header: tuple[int, int, int]) -> tuple[int, int, float]:
    if len(parts) != 3:
        raise MatrixParseError(path, lineno, f"entry must be 'row col value', got {' '.join(parts)!r}")
    try:
        i, j = int(parts[0]), int(parts[1])
        value = float(parts[2])
    except ValueError as e:
        raise MatrixParseError(path, lineno, f"malformed entry {' '.join(parts)!r}") from e
    rows, cols, _ = header
    if not (0 <= i < rows and 0 <= j < cols):
        raise MatrixParseError(path, lineno, f"index ({i}, {j}) out of range for {rows}x{cols}")
    if not math.isfinite(value):
        raise MatrixParseError(path, lineno, f"non-finite value {parts[2]!r}")
    return i, j, value


def load_network(path: Path | str) -> HorizontalNetwork:
    """
    Load a horizontal network. Entries listed on one side only are mirrored;
    entries listed on both sides must agree.
    """

    path = Path(path)
    m = load_matrix(path)
    if m.shape[0] != m.shape[1]:
        raise InputError(f"Network file is not square ({m.shape[0]}x{m.shape[1]}): {path}")
    upper_only = (m != 0.0) & (m.T == 0.0)
    m = np.where(upper_only.T, m.T, m)
    if not np.array_equal(m, m.T):
        raise InputError(f"Network file lists conflicting weights for the same edge: {path}")
    return HorizontalNetwork(m)


def save_labels(labels: Iterable[int], path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{int(x)}\n" for x in labels), encoding="utf-8")
    return path


def load_labels(path: Path | str) -> np.ndarray:
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"Cannot read label file: {path}") from e
    labels: list[int] = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        text = line.strip()
        if not text:
            continue
        try:
            labels.append(int(text))
        except ValueError as e:
            raise MatrixParseError(path, lineno, f"label must be an integer, got {text!r}") from e
    return np.asarray(labels, dtype=np.int64)


def save_trace(trace: Sequence[float], path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "cost"])
        for i, value in enumerate(trace, start=1):
            writer.writerow([i, _fmt(value)])
    return path


def load_trace(path: Path | str) -> list[float]:
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        return [float(row["cost"]) for row in csv.DictReader(fh)]
