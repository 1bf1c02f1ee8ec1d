import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from curves.curve_files import read_curve, write_curve
from curves.exceptions import CurveFileError, DegenerateEdge, TooFewVertices
from curves.samples import perturbed_line


class CurveFileTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def write_text(self, name: str, text: str) -> Path:
        path = self.root / name
        path.write_text(text, encoding="utf-8")
        return path

    def test_written_curve_reads_back_bitwise(self):
        curve = perturbed_line([0, 0, 0], [1, 0.5, -0.2], 24, 0.1, extra_modes=3, seed=6)
        path = write_curve(curve, self.root / "curve.csv")

        self.assertEqual(path.read_text(encoding="utf-8").splitlines()[0], "c0,c1,c2")
        np.testing.assert_array_equal(read_curve(path).vertices, curve.vertices)

    def test_missing_file(self):
        with self.assertRaisesMessage(CurveFileError, "not found"):
            read_curve(self.root / "absent.csv")

    def test_bad_header(self):
        path = self.write_text("bad.csv", "x,y\n0,0\n1,0\n2,1\n")
        with self.assertRaisesMessage(CurveFileError, "header"):
            read_curve(path)

    def test_ragged_row(self):
        path = self.write_text("ragged.csv", "c0,c1\n0,0\n1\n2,1\n")
        with self.assertRaisesMessage(CurveFileError, "row 3"):
            read_curve(path)

    def test_non_numeric_row(self):
        path = self.write_text("words.csv", "c0,c1\n0,0\n1,a\n2,1\n")
        with self.assertRaisesMessage(CurveFileError, "must be numbers"):
            read_curve(path)

    def test_too_few_vertices(self):
        path = self.write_text("short.csv", "c0,c1\n0,0\n1,0\n")
        with self.assertRaises(TooFewVertices):
            read_curve(path)

    def test_validation_can_be_skipped(self):
        path = self.write_text("repeat.csv", "c0,c1\n0,0\n1,0\n1,0\n2,0\n")
        with self.assertRaises(DegenerateEdge):
            read_curve(path)
        self.assertEqual(read_curve(path, validate=False).edge_count, 3)
