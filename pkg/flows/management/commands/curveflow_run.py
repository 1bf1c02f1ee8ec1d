from django.core.management.base import BaseCommand, CommandError

from curves.exceptions import CurveError
from flows.flow import FlowError
from flows.reports import Termination
from flows.run_config import ConfigError, parse_config, print_defaults, resolve_output_dir
from flows.runner import EXIT_IO, execute_run, exit_code_for


class Command(BaseCommand):
    help = (
        "Run the Willmore-Helfrich flow described by a TOML configuration and write "
        "series.csv, snapshots, report.json and curves.svg."
    )

    def add_arguments(self, parser):
        parser.add_argument("config", nargs="?", help="Path to a TOML run configuration.")
        parser.add_argument(
            "--print-defaults",
            action="store_true",
            help="Print the full defaults table and exit.",
        )

    def handle(self, *args, **options):
        if options["print_defaults"]:
            self.stdout.write(print_defaults(), ending="")
            return
        if not options["config"]:
            raise CommandError("A configuration path is required.", returncode=EXIT_IO)

        try:
            config = parse_config(options["config"])
            output_dir = resolve_output_dir(config)
            report = execute_run(config, output_dir)
        except (OSError, ConfigError, CurveError, FlowError) as exc:
            raise CommandError(str(exc), returncode=EXIT_IO) from exc

        summary = (
            f"termination={report.termination}; steps={report.steps}; "
            f"t={report.final_time:.6g}; W={report.final_row.total:.12g}; "
            f"violations={len(report.violations)}; output={output_dir}"
        )
        code = exit_code_for(report.termination)
        if code:
            detail = f" ({report.error})" if report.error else ""
            raise CommandError(f"Run ended: {summary}{detail}", returncode=code)
        if report.termination == Termination.STATIONARY:
            self.stdout.write(self.style.SUCCESS(f"Run converged: {summary}"))
        else:
            self.stdout.write(self.style.WARNING(f"Run reached t_end: {summary}"))
