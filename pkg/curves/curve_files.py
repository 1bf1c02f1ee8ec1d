from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from curves.exceptions import CurveFileError
from curves.geometry import DiscreteCurve, build_cache


def _header(dim: int) -> list[str]:
    return [f"c{k}" for k in range(dim)]


def format_float(value: float) -> str:
    return format(float(value), ".17g")


def write_curve(curve: DiscreteCurve, path: str | Path) -> Path:
    """Write one vertex per row under a ``c0,...,c{n-1}`` header."""

    target = Path(path)
    with target.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(_header(curve.dim))
        for vertex in curve.vertices:
            writer.writerow([format_float(value) for value in vertex])
    return target


def read_curve(path: str | Path, *, validate: bool = True) -> DiscreteCurve:
    source = Path(path)
    if not source.exists():
        raise CurveFileError(f"curve file not found: {source}")

    with source.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if not header:
            raise CurveFileError(f"{source.name}: missing header row")
        header = [column.strip() for column in header]
        if header != _header(len(header)):
            raise CurveFileError(
                f"{source.name}: header must be c0,...,c{{n-1}}, got {','.join(header)}"
            )
        rows = []
        for row_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CurveFileError(
                    f"{source.name} row {row_number}: expected {len(header)} values, got {len(row)}"
                )
            try:
                rows.append([float(value) for value in row])
            except ValueError as exc:
                raise CurveFileError(
                    f"{source.name} row {row_number}: coordinates must be numbers"
                ) from exc

    if not rows:
        raise CurveFileError(f"{source.name}: no vertices")
    curve = DiscreteCurve(np.array(rows, dtype=float))
    if validate:
        build_cache(curve)
    return curve
