import math
import tempfile
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, override_settings

from curves.curve_files import write_curve
from curves.geometry import build_cache
from curves.samples import perturbed_line
from flows.flow import Integrator, VelocityMode
from flows.run_config import (
    ConfigParseError,
    ConfigValidationError,
    build_initial,
    parse_config,
    print_defaults,
    resolve_output_dir,
    validate_config,
)


def minimal(**overrides):
    raw = {"dim": 2, "N": 8, "f_minus": [0.0, 0.0], "f_plus": [1.0, 0.0]}
    raw.update(overrides)
    return raw


class ValidateConfigTests(SimpleTestCase):
    def test_minimal_config_takes_defaults(self):
        config = validate_config(minimal())

        self.assertEqual(config.edges, 8)
        self.assertEqual(config.flow.integrator, Integrator.SEMI_IMPLICIT)
        self.assertEqual(config.flow.velocity_mode, VelocityMode.NORMAL)
        self.assertIsNone(config.flow.stationarity_tol)
        self.assertEqual(config.params.lam, 0.0)
        np.testing.assert_array_equal(config.params.zeta, [0.0, 0.0])
        self.assertEqual(config.initial.kind, "line")
        self.assertEqual(config.output.snapshot_every, 100)

    def test_sections_are_read(self):
        config = validate_config(
            minimal(
                params={"lambda": 0.25, "zeta": [0.0, 1.0]},
                flow={"integrator": "explicit", "velocity_mode": "gradient", "t_end": 0.5},
                initial={"kind": "perturbed_line", "amplitude": 0.1, "mode": 2},
            )
        )

        self.assertEqual(config.params.lam, 0.25)
        np.testing.assert_array_equal(config.params.zeta, [0.0, 1.0])
        self.assertEqual(config.flow.integrator, Integrator.EXPLICIT)
        self.assertEqual(config.flow.redistribution_interval, 0)
        self.assertEqual(config.flow.t_end, 0.5)
        self.assertEqual(config.initial.mode, 2)

    def test_coincident_endpoints(self):
        with self.assertRaises(ConfigValidationError) as cm:
            validate_config(minimal(f_plus=[0.0, 0.0]))

        self.assertIn("f_plus", cm.exception.errors)
        self.assertIn("f_- != f_+", str(cm.exception))

    def test_negative_lambda(self):
        with self.assertRaises(ConfigValidationError) as cm:
            validate_config(minimal(params={"lambda": -1.0}))

        self.assertEqual(
            cm.exception.errors["params.lambda"], ["lambda >= 0 required (length penalty weight)."]
        )

    def test_too_few_edges(self):
        with self.assertRaises(ConfigValidationError) as cm:
            validate_config(minimal(N=3))

        self.assertIn("N", cm.exception.errors)

    def test_wrong_dimension(self):
        with self.assertRaises(ConfigValidationError) as cm:
            validate_config(minimal(f_minus=[0.0, 0.0, 0.0]))

        self.assertIn("f_minus", cm.exception.errors)

    def test_unknown_keys(self):
        with self.assertRaises(ConfigValidationError) as cm:
            validate_config(minimal(flow={"integrater": "explicit"}))

        self.assertEqual(cm.exception.errors["flow.integrater"], ["unknown key"])

    def test_fixed_step_needs_dt(self):
        with self.assertRaises(ConfigValidationError) as cm:
            validate_config(minimal(flow={"dt_mode": "fixed"}))

        self.assertIn("flow.dt", cm.exception.errors)

    def test_file_kind_needs_path(self):
        with self.assertRaises(ConfigValidationError) as cm:
            validate_config(minimal(initial={"kind": "file"}))

        self.assertIn("initial.path", cm.exception.errors)


class ParseConfigTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def write(self, name, text):
        path = self.root / name
        path.write_text(text, encoding="utf-8")
        return path

    def test_parse_error_reports_the_line(self):
        path = self.write("broken.toml", 'dim = 2\nN = = 8\n')
        with self.assertRaises(ConfigParseError) as cm:
            parse_config(path)

        self.assertIsNotNone(cm.exception.line)
        self.assertIn("broken.toml", str(cm.exception))

    def test_relative_paths_follow_the_config_file(self):
        path = self.write(
            "run.toml",
            'dim = 2\nN = 8\nf_minus = [0.0, 0.0]\nf_plus = [1.0, 0.0]\n'
            '[initial]\nkind = "file"\npath = "start.csv"\n'
            '[output]\ndir = "out"\n',
        )
        config = parse_config(path)

        self.assertEqual(config.initial.path, self.root / "start.csv")
        self.assertEqual(resolve_output_dir(config), self.root / "out")
        with override_settings(CURVEFLOW_OUTPUT=str(self.root / "elsewhere")):
            self.assertEqual(resolve_output_dir(config), self.root / "elsewhere")

    def test_defaults_document_is_valid_toml(self):
        text = print_defaults()
        document = tomllib.loads(text)

        self.assertIn('integrator = "semi_implicit"', text)
        self.assertIn("# stationarity_tol: 1e-6 * (1 + |W(f_0)|)", text)
        self.assertEqual(document["flow"]["safety"], 0.1)
        self.assertEqual(document["output"]["snapshot_every"], 100)


class BuildInitialTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def test_line(self):
        curve = build_initial(validate_config(minimal()))

        np.testing.assert_allclose(build_cache(curve).edge_lengths, 1 / 8, rtol=1e-12)

    def test_arc(self):
        config = validate_config(
            minimal(N=64, f_minus=[-1.0, 0.0], initial={"kind": "arc", "bulge": 1.0})
        )
        curve = build_initial(config)

        np.testing.assert_allclose(curve.vertices[32], [0.0, 1.0], atol=1e-12)
        self.assertAlmostEqual(build_cache(curve).total_length, math.pi, delta=1e-2)

    def test_zero_amplitude_matches_the_line(self):
        line = build_initial(validate_config(minimal()))
        flat = build_initial(
            validate_config(minimal(initial={"kind": "perturbed_line", "amplitude": 0.0}))
        )

        np.testing.assert_array_equal(flat.vertices, line.vertices)

    def test_file(self):
        start = perturbed_line([0, 0], [1, 0], 8, 0.1)
        path = write_curve(start, self.root / "start.csv")
        config = validate_config(minimal(initial={"kind": "file", "path": str(path)}))

        np.testing.assert_array_equal(build_initial(config).vertices, start.vertices)

    def test_file_with_other_endpoints(self):
        path = write_curve(perturbed_line([0, 0], [2, 0], 8, 0.1), self.root / "start.csv")
        config = validate_config(minimal(initial={"kind": "file", "path": str(path)}))

        with self.assertRaises(ConfigValidationError) as cm:
            build_initial(config)
        self.assertIn("initial.path", cm.exception.errors)

    def test_boundary_check_rejects_incompatible_data(self):
        config = validate_config(
            minimal(
                N=32,
                initial={"kind": "arc", "bulge": 0.3},
                validation={"validate_bc0": True, "bc0_tol": 1e-3},
            )
        )

        with self.assertRaises(ConfigValidationError) as cm:
            build_initial(config)
        self.assertIn("validation.bc0_tol", cm.exception.errors)
