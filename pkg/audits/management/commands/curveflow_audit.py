from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from audits.corpus import perturbed_arc_corpus, trig_field_corpus
from audits.diagnostics import AuditError, interpolation_audit, sup_bound_audit
from audits.serializers import AuditReportSerializer
from curves.exceptions import CurveError
from curves.geometry import MIN_FLOW_EDGES
from flows.outputs import write_json
from flows.runner import EXIT_AUDIT_FAILED, EXIT_IO


INEQUALITIES = ("interpolation", "sup_bound")


class Command(BaseCommand):
    help = (
        "Generate a seeded corpus and audit an inequality on it: 'interpolation' "
        "(normal derivatives of curvature in scale-invariant norms) or 'sup_bound' "
        "(sup norm of scalar fields, constant 1)."
    )

    def add_arguments(self, parser):
        parser.add_argument("inequality", help=f"One of: {', '.join(INEQUALITIES)}.")
        parser.add_argument("--k", type=int, default=2, help="Highest derivative order.")
        parser.add_argument("--i", type=int, default=1, help="Audited derivative order, 0 <= i < k.")
        parser.add_argument("--p", type=float, default=2.0, help="Lebesgue exponent, p >= 2.")
        parser.add_argument("--seed", type=int, default=7, help="Corpus seed.")
        parser.add_argument("--corpus-size", type=int, default=100, help="Number of corpus members.")
        parser.add_argument("--vertices", type=int, default=64, help="Edges per corpus curve.")
        parser.add_argument("--samples", type=int, default=256, help="Samples per scalar field.")
        parser.add_argument("--degree", type=int, default=8, help="Maximal trigonometric degree.")
        parser.add_argument("--output", default="", help="Audit report path (JSON).")

    def _check_options(self, options):
        problems = []
        if options["inequality"] not in INEQUALITIES:
            problems.append(f"unknown inequality {options['inequality']!r}")
        if options["corpus_size"] < 1:
            problems.append("corpus size must be positive")
        if options["seed"] < 0:
            problems.append("seed must be >= 0")
        if options["inequality"] == "interpolation":
            if not 0 <= options["i"] < options["k"]:
                problems.append("need 0 <= i < k")
            if options["p"] < 2:
                problems.append("need p >= 2")
            if options["vertices"] < options["k"] + MIN_FLOW_EDGES:
                problems.append(f"need at least k + {MIN_FLOW_EDGES} edges per curve")
        else:
            if options["samples"] < 2:
                problems.append("need at least two samples per field")
            if options["degree"] < 0:
                problems.append("degree must be >= 0")
        if problems:
            raise CommandError("Invalid audit spec: " + "; ".join(problems) + ".", returncode=EXIT_IO)

    def handle(self, *args, **options):
        self._check_options(options)
        inequality = options["inequality"]
        try:
            if inequality == "interpolation":
                corpus = perturbed_arc_corpus(
                    options["corpus_size"], options["seed"], options["vertices"]
                )
                report = interpolation_audit(corpus, options["k"], options["i"], options["p"])
            else:
                fields = trig_field_corpus(
                    options["corpus_size"],
                    options["seed"],
                    samples=options["samples"],
                    degree=options["degree"],
                )
                report = sup_bound_audit(fields)
        except (AuditError, CurveError) as exc:
            raise CommandError(str(exc), returncode=EXIT_IO) from exc

        target = Path(options["output"]) if options["output"] else (
            Path(settings.CURVEFLOW_OUTPUT or ".") / f"audit_{report.id}.json"
        )
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            write_json(target, AuditReportSerializer(report).data)
        except OSError as exc:
            raise CommandError(str(exc), returncode=EXIT_IO) from exc

        line = (
            f"{report.id}: corpus={report.corpus_size}; "
            f"constant={report.empirical_constant}; worst={report.worst_case}; report={target}"
        )
        if not report.passed:
            raise CommandError(f"Audit failed: {line}", returncode=EXIT_AUDIT_FAILED)
        self.stdout.write(self.style.SUCCESS(f"Audit passed: {line}"))
