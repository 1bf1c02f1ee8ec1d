from __future__ import annotations

import logging
from pathlib import Path

from curves.energy import natural_bc_residual
from flows import outputs
from flows.flow import FlowState, run
from flows.reports import RunReport, SeriesRow, Termination
from flows.run_config import Config, build_initial


logger = logging.getLogger(__name__)

EXIT_CODES = {
    Termination.STATIONARY: 0,
    Termination.T_END: 0,
    Termination.MAX_STEPS: 2,
    Termination.ERROR: 3,
}
EXIT_AUDIT_FAILED = 1
EXIT_IO = 4


def exit_code_for(termination: Termination | None) -> int:
    return EXIT_CODES.get(termination, EXIT_CODES[Termination.ERROR])


class SnapshotWriter:
    """Observer for ``flow.run`` writing scheduled snapshots as they are accepted.

    With ``pairs`` set, the state right after each scheduled one is written as
    well so consecutive states are available to the identity audit.
    """

    def __init__(self, directory: Path, every: int, pairs: bool):
        self.directory = directory
        self.every = every
        self.pairs = pairs
        self.written: list[outputs.SnapshotRecord] = []
        self.last: tuple[FlowState, SeriesRow] | None = None

    def _due(self, step: int) -> bool:
        if step == 0:
            return True
        if not self.every:
            return False
        return step % self.every == 0 or (self.pairs and (step - 1) % self.every == 0)

    def record(self, state: FlowState, row: SeriesRow) -> outputs.SnapshotRecord:
        return outputs.SnapshotRecord(
            step=row.step,
            t=row.t,
            curve=state.curve,
            energy=row.energy,
            v_l2=row.v_l2,
            bc_residual=(row.bc0, row.bc1),
            length=row.length,
        )

    def __call__(self, state: FlowState, row: SeriesRow) -> None:
        self.last = (state, row)
        if self._due(row.step):
            self._write(state, row)

    def _write(self, state: FlowState, row: SeriesRow) -> None:
        record = self.record(state, row)
        outputs.write_snapshot(self.directory, record)
        self.written.append(record)

    def finish(self) -> None:
        if self.last is None:
            return
        state, row = self.last
        if not self.written or self.written[-1].step != row.step:
            self._write(state, row)


def execute_run(config: Config, output_dir: Path) -> RunReport:
    """Run the configured flow and write the trajectory directory."""

    output_dir.mkdir(parents=True, exist_ok=True)
    initial = build_initial(config)
    writer = SnapshotWriter(
        output_dir, config.output.snapshot_every, config.output.snapshot_pairs
    )
    report = run(initial, config.flow, observer=writer)
    writer.finish()

    outputs.write_series(report.series, output_dir / outputs.SERIES_FILE)
    outputs.write_report(report, output_dir / outputs.REPORT_FILE)
    if config.output.svg:
        outputs.render_svg(
            outputs.pick_evenly(writer.written, config.output.svg_snapshots),
            output_dir / outputs.SVG_FILE,
        )

    if report.final_curve is not None:
        residuals = natural_bc_residual(report.final_curve, config.params)
        logger.info(
            "Run written to %s: termination=%s, final bc residuals %.3e / %.3e",
            output_dir,
            report.termination,
            residuals[0],
            residuals[1],
        )
    return report
