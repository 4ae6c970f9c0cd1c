"""Headerless CSV exchange format for matrices and vectors.

One row per line, comma-separated decimal values, no header; vectors are
single-column files. Dimensions are inferred from the file. Values are
written with shortest round-trip precision so files reload bit-exactly
and are identical under any system locale.
"""

from __future__ import annotations

import os

import numpy as np


def save_matrix(path: str | os.PathLike, mat: np.ndarray) -> None:
    """Write a 2-D array as headerless CSV."""
    arr = np.atleast_2d(np.asarray(mat, dtype=float))
    lines = [",".join(repr(float(v)) for v in row) for row in arr]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def save_vector(path: str | os.PathLike, vec: np.ndarray) -> None:
    """Write a 1-D array as a single-column CSV."""
    arr = np.asarray(vec, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {arr.shape}")
    save_matrix(path, arr[:, None])


def load_matrix(path: str | os.PathLike) -> np.ndarray:
    """Read a headerless CSV into a 2-D float array."""
    rows: list[list[float]] = []
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(f) for f in line.split(",")])
            except ValueError as exc:
                raise ValueError(f"{path}:{ln}: unparsable value ({exc})") from None
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError(f"{path}: inconsistent row lengths")
    return np.asarray(rows, dtype=float)


def load_vector(path: str | os.PathLike) -> np.ndarray:
    """Read a single-column CSV into a 1-D float array."""
    mat = load_matrix(path)
    if mat.shape[1] != 1:
        raise ValueError(f"{path}: expected a single-column vector CSV, got {mat.shape[1]} columns")
    return mat[:, 0]
