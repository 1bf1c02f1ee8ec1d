import glob
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from curves.exceptions import CurveError
from flows.flow import FlowError
from flows.run_config import ConfigError, parse_config, resolve_output_dir
from flows.runner import EXIT_IO, execute_run, exit_code_for


logger = logging.getLogger(__name__)


def plan_output_dirs(configs) -> list[Path]:
    """One directory per configuration; colliding targets get a per-config subdirectory."""

    targets = [resolve_output_dir(config) for config in configs]
    counts = Counter(targets)
    return [
        target / config.source.stem if counts[target] > 1 else target
        for config, target in zip(configs, targets)
    ]


class Command(BaseCommand):
    help = "Run every configuration matching a glob concurrently, one output directory each."

    def add_arguments(self, parser):
        parser.add_argument("pattern", help="Glob of TOML run configurations.")
        parser.add_argument(
            "--workers",
            type=int,
            default=None,
            help="Worker threads (defaults to CURVEFLOW_SWEEP_WORKERS).",
        )

    def handle(self, *args, **options):
        paths = sorted(Path(path) for path in glob.glob(options["pattern"]))
        if not paths:
            raise CommandError(
                f"No configuration matches {options['pattern']!r}.", returncode=EXIT_IO
            )
        try:
            configs = [parse_config(path) for path in paths]
        except (OSError, ConfigError) as exc:
            raise CommandError(str(exc), returncode=EXIT_IO) from exc

        directories = plan_output_dirs(configs)
        workers = options["workers"] or settings.CURVEFLOW_SWEEP_WORKERS
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            codes = list(pool.map(self._run_one, configs, directories))

        for path, directory, code in zip(paths, directories, codes):
            line = f"{path.name}: exit {code} -> {directory}"
            self.stdout.write(self.style.SUCCESS(line) if code == 0 else self.style.WARNING(line))

        worst = max(codes)
        if worst:
            raise CommandError(f"{sum(1 for code in codes if code)} run(s) did not pass.", returncode=worst)
        self.stdout.write(self.style.SUCCESS(f"Sweep completed: {len(codes)} run(s)."))

    def _run_one(self, config, directory: Path) -> int:
        try:
            report = execute_run(config, directory)
        except (OSError, ConfigError, CurveError, FlowError) as exc:
            logger.warning("Sweep run %s failed: %s", config.source, exc)
            return EXIT_IO
        return exit_code_for(report.termination)
