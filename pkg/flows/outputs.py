"""Trajectory directory layout: series, snapshots, report and plot."""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from matplotlib.figure import Figure
from rest_framework.renderers import JSONRenderer

from curves.curve_files import format_float, read_curve, write_curve
from curves.energy import EnergyBreakdown
from curves.exceptions import CurveFileError
from curves.geometry import DiscreteCurve
from flows.reports import RunReport, SeriesRow
from flows.serializers import RunReportSerializer, SnapshotSerializer


SERIES_FILE = "series.csv"
REPORT_FILE = "report.json"
SVG_FILE = "curves.svg"
SNAPSHOT_NAME = re.compile(r"^snap_(\d{8})\.csv$")


class TrajectoryFileError(CurveFileError):
    pass


@dataclass(frozen=True)
class SnapshotRecord:
    step: int
    t: float
    curve: DiscreteCurve
    energy: EnergyBreakdown
    v_l2: float
    bc_residual: tuple[float, float]
    length: float


def snapshot_stem(step: int) -> str:
    return f"snap_{step:08d}"


def write_json(path: str | Path, data) -> Path:
    target = Path(path)
    target.write_bytes(JSONRenderer().render(data, renderer_context={"indent": 2}) + b"\n")
    return target


def read_json(path: str | Path):
    source = Path(path)
    try:
        return json.loads(source.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise TrajectoryFileError(f"missing {source.name} in {source.parent}") from exc
    except json.JSONDecodeError as exc:
        raise TrajectoryFileError(f"{source.name}: invalid JSON ({exc})") from exc


def write_series(rows: Iterable[SeriesRow], path: str | Path) -> Path:
    target = Path(path)
    columns = SeriesRow.columns()
    with target.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(
                [str(row.step)] + [format_float(getattr(row, name)) for name in columns[1:]]
            )
    return target


def read_series(path: str | Path) -> list[SeriesRow]:
    source = Path(path)
    if not source.exists():
        raise TrajectoryFileError(f"missing {source.name} in {source.parent}")
    columns = SeriesRow.columns()
    rows = []
    with source.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != columns:
            raise TrajectoryFileError(
                f"{source.name}: expected columns {','.join(columns)}"
            )
        for line, record in enumerate(reader, start=2):
            try:
                values = {name: float(record[name]) for name in columns[1:]}
                rows.append(SeriesRow(step=int(record["step"]), **values))
            except (TypeError, ValueError) as exc:
                raise TrajectoryFileError(f"{source.name} row {line}: {exc}") from exc
    return rows


def write_snapshot(directory: Path, record: SnapshotRecord) -> Path:
    stem = snapshot_stem(record.step)
    write_curve(record.curve, directory / f"{stem}.csv")
    payload = SnapshotSerializer(
        {
            "t": record.t,
            "energy": record.energy,
            "v_l2": record.v_l2,
            "bc_residual": list(record.bc_residual),
            "length": record.length,
        }
    ).data
    write_json(directory / f"{stem}.json", payload)
    return directory / f"{stem}.csv"


def list_snapshots(directory: str | Path) -> list[tuple[int, Path]]:
    directory = Path(directory)
    found = []
    for path in directory.glob("snap_*.csv"):
        match = SNAPSHOT_NAME.match(path.name)
        if match:
            found.append((int(match.group(1)), path))
    return sorted(found)


def read_snapshot(path: str | Path) -> SnapshotRecord:
    path = Path(path)
    match = SNAPSHOT_NAME.match(path.name)
    if match is None:
        raise TrajectoryFileError(f"{path.name} is not a snapshot file")
    serializer = SnapshotSerializer(data=read_json(path.with_suffix(".json")))
    if not serializer.is_valid():
        raise TrajectoryFileError(f"{path.with_suffix('.json').name}: {serializer.errors}")
    meta = serializer.validated_data
    return SnapshotRecord(
        step=int(match.group(1)),
        t=meta["t"],
        curve=read_curve(path),
        energy=EnergyBreakdown(**meta["energy"]),
        v_l2=meta["v_l2"],
        bc_residual=tuple(meta["bc_residual"]),
        length=meta["length"],
    )


def write_report(report: RunReport, path: str | Path) -> Path:
    return write_json(path, RunReportSerializer(report).data)


def read_report(path: str | Path) -> dict:
    source = Path(path)
    serializer = RunReportSerializer(data=read_json(source))
    if not serializer.is_valid():
        raise TrajectoryFileError(f"{source.name}: {serializer.errors}")
    return serializer.validated_data


def pick_evenly(items: Sequence, count: int) -> list:
    if len(items) <= count:
        return list(items)
    last = len(items) - 1
    picks = sorted({round(k * last / (count - 1)) for k in range(count)}) if count > 1 else [last]
    return [items[k] for k in picks]


def render_svg(snapshots: Sequence[SnapshotRecord], path: str | Path) -> Path:
    """Overlay of snapshot polylines; curves in R^n, n > 2, are drawn by their first two coordinates."""

    figure = Figure(figsize=(6.0, 4.0))
    axes = figure.subplots()
    for record in snapshots:
        xy = record.curve.vertices[:, :2]
        axes.plot(xy[:, 0], xy[:, 1], linewidth=1.0, label=f"t = {record.t:.3g}")
    if snapshots:
        start = snapshots[0].curve
        axes.plot(
            [start.f_minus[0], start.f_plus[0]],
            [start.f_minus[1], start.f_plus[1]],
            "ko",
            markersize=3,
        )
    axes.set_aspect("equal", adjustable="datalim")
    axes.set_xlabel("c0")
    axes.set_ylabel("c1")
    axes.legend(loc="best", fontsize="small")
    target = Path(path)
    figure.savefig(target, format="svg", metadata={"Date": None})
    return target
