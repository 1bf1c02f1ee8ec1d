import json
import tempfile
from dataclasses import replace
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from flows import outputs


RUN = """
dim = 2
N = 32
f_minus = [0.0, 0.0]
f_plus = [1.0, 0.0]

[params]
lambda = 1.0

[flow]
velocity_mode = "{mode}"
t_end = 5e-3

[initial]
kind = "perturbed_line"
amplitude = 0.05

[output]
snapshot_every = 10
svg = false
"""


class AuditCommandTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def call(self, *args, output: Path | None = None) -> str:
        stdout = StringIO()
        with override_settings(CURVEFLOW_OUTPUT=str(output) if output else ""):
            call_command(*args, stdout=stdout)
        return stdout.getvalue()

    def trajectory(self, mode: str = "normal") -> Path:
        config = self.root / f"{mode}.toml"
        config.write_text(RUN.format(mode=mode), encoding="utf-8")
        directory = self.root / f"{mode}-run"
        self.call("curveflow_run", str(config), output=directory)
        return directory

    def audit_file(self, directory: Path, audit_id: str) -> dict:
        return json.loads((directory / f"audit_{audit_id}.json").read_text(encoding="utf-8"))


class CheckCommandTests(AuditCommandTestCase):
    def test_normal_trajectory_passes(self):
        directory = self.trajectory()
        text = self.call("curveflow_check", str(directory))

        self.assertIn("audit(s) passed", text)
        for audit_id in ("dissipation", "bounds", "curvature_norms", "identity"):
            report = self.audit_file(directory, audit_id)
            self.assertTrue(report["pass"], audit_id)
        self.assertGreater(self.audit_file(directory, "identity")["corpus_size"], 1)

    def test_gradient_trajectory_skips_identities(self):
        directory = self.trajectory("gradient")
        text = self.call("curveflow_check", str(directory))

        self.assertIn("skipped: identity", text)
        self.assertFalse((directory / "audit_identity.json").exists())

    def test_injected_energy_bump_fails(self):
        directory = self.trajectory()
        path = directory / outputs.SERIES_FILE
        series = outputs.read_series(path)
        series[5] = replace(series[5], total=series[5].total + 1.0)
        outputs.write_series(series, path)

        with self.assertRaises(CommandError) as cm:
            self.call("curveflow_check", str(directory))
        self.assertEqual(cm.exception.returncode, 1)
        dissipation = self.audit_file(directory, "dissipation")
        self.assertFalse(dissipation["pass"])
        self.assertEqual(dissipation["details"][1]["step"], 5)

    def test_missing_data(self):
        with self.assertRaises(CommandError) as cm:
            self.call("curveflow_check", str(self.root / "absent"))
        self.assertEqual(cm.exception.returncode, 4)

        empty = self.root / "empty"
        empty.mkdir()
        with self.assertRaises(CommandError) as cm:
            self.call("curveflow_check", str(empty))
        self.assertEqual(cm.exception.returncode, 4)


class AuditCommandTests(AuditCommandTestCase):
    def test_sup_bound_default_corpus(self):
        target = self.root / "sup.json"
        text = self.call("curveflow_audit", "sup_bound", "--output", str(target))

        self.assertIn("Audit passed", text)
        report = json.loads(target.read_text(encoding="utf-8"))
        self.assertEqual(report["id"], "sup_bound")
        self.assertEqual(report["corpus_size"], 100)
        self.assertTrue(report["pass"])
        self.assertEqual(list(report)[-2:], ["pass", "details"])

    def test_lowest_order_interpolation_constant(self):
        out = self.root / "audits"
        self.call(
            "curveflow_audit", "interpolation", "--k", "1", "--i", "0", "--corpus-size", "5",
            output=out,
        )

        report = json.loads((out / "audit_interpolation.json").read_text(encoding="utf-8"))
        self.assertEqual(report["empirical_constant"], 1.0)
        self.assertTrue(report["pass"])

    def test_invalid_specs(self):
        for args in (
            ("sup_bound", "--corpus-size", "0"),
            ("interpolation", "--k", "2", "--i", "2"),
            ("interpolation", "--p", "1"),
            ("wobble",),
        ):
            with self.subTest(args=args):
                with self.assertRaises(CommandError) as cm:
                    self.call("curveflow_audit", *args, "--output", str(self.root / "x.json"))
                self.assertEqual(cm.exception.returncode, 4)
