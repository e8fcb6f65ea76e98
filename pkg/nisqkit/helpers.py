"""Shared helpers: random streams, number formatting, CSV output."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SeedLike = int | np.random.Generator | None


def derive_rng(seed: SeedLike, *indices: int) -> np.random.Generator:
    """PCG64 stream for task `indices` under a top-level seed.

    The same (seed, indices) always yields the same stream; different index
    tuples yield statistically independent streams. Passing a Generator with no
    indices returns it unchanged so callers can thread one stream through.
    """
    if isinstance(seed, np.random.Generator):
        if not indices:
            return seed
        seed = int(seed.integers(0, 2**63 - 1))
    sequence = np.random.SeedSequence(seed, spawn_key=tuple(int(i) for i in indices))
    return np.random.Generator(np.random.PCG64(sequence))


def derive_seed(seed: SeedLike, *indices: int) -> int:
    """Integer sub-seed for task `indices` (for APIs that store a seed)."""
    return int(derive_rng(seed, *indices).integers(0, 2**63 - 1))


def format_real(value) -> str:
    """17 significant digits, '.' separator, independent of locale."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def write_csv(rows: Iterable[Sequence], headers: Sequence[str], path: str | Path) -> int:
    """Write a header row then `rows`; returns the number of data rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    written = 0
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(headers)
        for row in rows:
            writer.writerow([format_real(cell) for cell in row])
            written += 1
    return written


def read_csv(path: str | Path) -> tuple[list[str], list[list[float]]]:
    """Inverse of write_csv for numeric tables."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        headers = next(reader)
        return headers, [[float(cell) for cell in row] for row in reader]
