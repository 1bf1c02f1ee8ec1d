import json
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from flows import outputs


CRITICAL = """
dim = 2
N = 16
f_minus = [0.0, 0.0]
f_plus = [1.0, 0.0]

[params]
lambda = 1.0
zeta = [1.0, 0.0]
"""

PERTURBED = """
dim = 2
N = 16
f_minus = [0.0, 0.0]
f_plus = [1.0, 0.0]

[params]
lambda = 1.0

[flow]
{flow}

[initial]
kind = "perturbed_line"
amplitude = 0.05
"""


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def config(self, name: str, text: str) -> Path:
        path = self.root / name
        path.write_text(text, encoding="utf-8")
        return path

    def perturbed(self, name: str, flow: str) -> Path:
        return self.config(name, PERTURBED.format(flow=flow))

    def run_command(self, *args, output: Path | None = None) -> str:
        stdout = StringIO()
        with override_settings(CURVEFLOW_OUTPUT=str(output) if output else ""):
            call_command(*args, stdout=stdout)
        return stdout.getvalue()


class RunCommandTests(CommandTestCase):
    def test_critical_configuration_converges(self):
        out = self.root / "critical"
        text = self.run_command("curveflow_run", str(self.config("critical.toml", CRITICAL)), output=out)

        self.assertIn("Run converged", text)
        series = outputs.read_series(out / outputs.SERIES_FILE)
        self.assertLessEqual(len(series), 2)
        report = json.loads((out / outputs.REPORT_FILE).read_text(encoding="utf-8"))
        self.assertEqual(report["termination"], "stationary")
        self.assertTrue(report["passed"])
        self.assertEqual(report["params"]["lambda"], 1.0)
        self.assertTrue((out / "snap_00000000.csv").exists())
        self.assertTrue((out / "snap_00000000.json").exists())
        self.assertTrue((out / outputs.SVG_FILE).read_text(encoding="utf-8").startswith("<?xml"))

    def test_t_end_exits_cleanly(self):
        out = self.root / "t_end"
        text = self.run_command(
            "curveflow_run", str(self.perturbed("run.toml", "t_end = 1e-3")), output=out
        )

        self.assertIn("t_end", text)
        self.assertEqual(outputs.read_series(out / outputs.SERIES_FILE)[-1].t, 1e-3)

    def test_step_limit_exits_with_two(self):
        path = self.perturbed("run.toml", "max_steps = 1")
        with self.assertRaises(CommandError) as cm:
            self.run_command("curveflow_run", str(path), output=self.root / "limit")

        self.assertEqual(cm.exception.returncode, 2)

    def test_step_failure_exits_with_three(self):
        path = self.perturbed("run.toml", "max_steps = 10\nh_min_factor = 1.5")
        with self.assertRaises(CommandError) as cm:
            self.run_command("curveflow_run", str(path), output=self.root / "collapse")

        self.assertEqual(cm.exception.returncode, 3)
        report = json.loads((self.root / "collapse" / outputs.REPORT_FILE).read_text(encoding="utf-8"))
        self.assertEqual(report["termination"], "error")
        self.assertIn("fell below", report["error"])

    def test_missing_configuration(self):
        with self.assertRaises(CommandError) as cm:
            self.run_command("curveflow_run", str(self.root / "absent.toml"))
        self.assertEqual(cm.exception.returncode, 4)

        with self.assertRaises(CommandError) as cm:
            self.run_command("curveflow_run")
        self.assertEqual(cm.exception.returncode, 4)

    def test_invalid_configuration(self):
        path = self.config("bad.toml", CRITICAL.replace("lambda = 1.0", "lambda = -1.0"))
        with self.assertRaises(CommandError) as cm:
            self.run_command("curveflow_run", str(path), output=self.root / "bad")

        self.assertEqual(cm.exception.returncode, 4)
        self.assertIn("params.lambda", str(cm.exception))

    def test_print_defaults(self):
        text = self.run_command("curveflow_run", "--print-defaults")

        self.assertIn("[flow]", text)
        self.assertIn('velocity_mode = "normal"', text)

    def test_identical_configurations_write_identical_series(self):
        path = self.perturbed("run.toml", "t_end = 2e-3")
        self.run_command("curveflow_run", str(path), output=self.root / "a")
        self.run_command("curveflow_run", str(path), output=self.root / "b")

        for name in (outputs.SERIES_FILE, outputs.REPORT_FILE):
            self.assertEqual(
                (self.root / "a" / name).read_bytes(), (self.root / "b" / name).read_bytes()
            )


class SweepCommandTests(CommandTestCase):
    def test_each_configuration_gets_a_directory(self):
        sweep = self.root / "sweep"
        sweep.mkdir()
        (sweep / "one.toml").write_text(CRITICAL, encoding="utf-8")
        (sweep / "two.toml").write_text(PERTURBED.format(flow="t_end = 1e-3"), encoding="utf-8")

        out = self.root / "sweep-out"
        text = self.run_command("curveflow_sweep", str(sweep / "*.toml"), "--workers", "2", output=out)

        self.assertIn("Sweep completed: 2 run(s)", text)
        self.assertTrue((out / "one" / outputs.REPORT_FILE).exists())
        self.assertTrue((out / "two" / outputs.REPORT_FILE).exists())

    def test_distinct_output_dirs_are_kept(self):
        sweep = self.root / "sweep"
        sweep.mkdir()
        for name in ("one", "two"):
            text = CRITICAL + f'\n[output]\ndir = "{name}-out"\nsvg = false\n'
            (sweep / f"{name}.toml").write_text(text, encoding="utf-8")

        self.run_command("curveflow_sweep", str(sweep / "*.toml"))

        for name in ("one", "two"):
            self.assertTrue((sweep / f"{name}-out" / outputs.REPORT_FILE).exists())
            self.assertFalse((sweep / f"{name}-out" / name).exists())

    def test_worst_exit_code_wins(self):
        sweep = self.root / "sweep"
        sweep.mkdir()
        (sweep / "one.toml").write_text(CRITICAL, encoding="utf-8")
        (sweep / "two.toml").write_text(PERTURBED.format(flow="max_steps = 2"), encoding="utf-8")

        with self.assertRaises(CommandError) as cm:
            self.run_command("curveflow_sweep", str(sweep / "*.toml"), output=self.root / "out")
        self.assertEqual(cm.exception.returncode, 2)

    def test_empty_glob(self):
        with self.assertRaises(CommandError) as cm:
            self.run_command("curveflow_sweep", str(self.root / "*.toml"))
        self.assertEqual(cm.exception.returncode, 4)
