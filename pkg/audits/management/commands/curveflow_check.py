from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from audits.diagnostics import (
    AuditError,
    InsufficientData,
    bounds_audit,
    curvature_norm_series,
    dissipation_audit,
    identity_audit_pairs,
)
from audits.serializers import AuditReportSerializer
from curves.energy import FlowParams
from curves.exceptions import CurveError, StencilExhausted
from curves.geometry import MIN_FLOW_EDGES
from flows import outputs
from flows.flow import VelocityMode
from flows.runner import EXIT_AUDIT_FAILED, EXIT_IO


DEFAULT_L_MAX = 2


def consecutive_pairs(records, exempt: set[int]):
    for before, after in zip(records, records[1:]):
        if after.step == before.step + 1 and after.step not in exempt:
            yield f"{before.step}->{after.step}", before.curve, after.curve, after.t - before.t


class Command(BaseCommand):
    help = (
        "Audit a trajectory directory written by curveflow_run: dissipation, bounds, "
        "evolution identities and curvature norms. Writes audit_*.json next to the data."
    )

    def add_arguments(self, parser):
        parser.add_argument("directory", help="Trajectory directory.")
        parser.add_argument(
            "--l-max",
            type=int,
            default=DEFAULT_L_MAX,
            help="Highest derivative order in the curvature-norm series.",
        )

    def handle(self, *args, **options):
        directory = Path(options["directory"])
        if not directory.is_dir():
            raise CommandError(f"{directory} is not a directory.", returncode=EXIT_IO)

        try:
            series = outputs.read_series(directory / outputs.SERIES_FILE)
            report = outputs.read_report(directory / outputs.REPORT_FILE)
            records = [outputs.read_snapshot(path) for _, path in outputs.list_snapshots(directory)]
        except (OSError, CurveError) as exc:
            raise CommandError(str(exc), returncode=EXIT_IO) from exc
        if not series:
            raise CommandError(f"{outputs.SERIES_FILE} holds no rows.", returncode=EXIT_IO)
        if not records:
            raise CommandError(f"No snapshots in {directory}.", returncode=EXIT_IO)

        params = FlowParams(lam=report["params"]["lam"], zeta=report["params"]["zeta"])
        initial_total = report["initial_energy"]["total"]
        mode = report["velocity_mode"]
        exempt = set(report["redistributions"])

        audits = []
        skipped = []
        try:
            try:
                audits.append(dissipation_audit(series, mode, exempt_steps=exempt))
            except InsufficientData as exc:
                skipped.append(f"dissipation ({exc})")
            audits.append(bounds_audit(series, params, initial_total, report["chord"]))

            edges = records[0].curve.edge_count
            l_max = max(0, min(options["l_max"], edges - MIN_FLOW_EDGES))
            audits.append(curvature_norm_series(records, l_max).as_audit())

            if mode == VelocityMode.NORMAL:
                try:
                    audits.append(identity_audit_pairs(consecutive_pairs(records, exempt)))
                except (InsufficientData, StencilExhausted) as exc:
                    skipped.append(f"identity ({exc})")
            else:
                skipped.append("identity (gradient-mode trajectory)")
        except (AuditError, CurveError) as exc:
            raise CommandError(str(exc), returncode=EXIT_IO) from exc

        for audit in audits:
            outputs.write_json(
                directory / f"audit_{audit.id}.json", AuditReportSerializer(audit).data
            )
            line = (
                f"{audit.id}: {'pass' if audit.passed else 'FAIL'}; "
                f"constant={audit.empirical_constant}; worst={audit.worst_case}"
            )
            self.stdout.write(self.style.SUCCESS(line) if audit.passed else self.style.WARNING(line))
        for note in skipped:
            self.stdout.write(self.style.WARNING(f"skipped: {note}"))

        failed = [audit.id for audit in audits if not audit.passed]
        if failed:
            raise CommandError(
                f"Audit failed: {', '.join(failed)}.", returncode=EXIT_AUDIT_FAILED
            )
        self.stdout.write(self.style.SUCCESS(f"All {len(audits)} audit(s) passed."))
