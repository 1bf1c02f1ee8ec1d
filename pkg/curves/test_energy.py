import math

import numpy as np
from django.test import SimpleTestCase

from curves.energy import (
    FlowParams,
    energy,
    fd_gradient,
    gradient,
    natural_bc_residual,
    stationarity_residual,
)
from curves.exceptions import CurveError, DimMismatch, StencilExhausted
from curves.geometry import DiscreteCurve, build_cache
from curves.samples import perturbed_line, random_smooth_curve, semicircle, straight_segment


def rotation(angle: float) -> np.ndarray:
    return np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])


def gradient_error(curve, params, step=1e-6) -> float:
    exact = gradient(curve, params)
    approx = fd_gradient(curve, params, step=step)
    return float(np.max(np.abs(exact - approx)))


class FlowParamsTests(SimpleTestCase):
    def test_rejects_negative_lambda(self):
        with self.assertRaisesMessage(CurveError, "lambda >= 0"):
            FlowParams(lam=-1.0, zeta=[0.0, 0.0])

    def test_dimension_must_match_curve(self):
        with self.assertRaises(DimMismatch):
            energy(semicircle(8), FlowParams(lam=0.0, zeta=[0.0, 0.0, 1.0]))


class EnergyTests(SimpleTestCase):
    def test_straight_segment(self):
        parts = energy(straight_segment([0, 0], [2, 0], 4), FlowParams(lam=0.5, zeta=[0, 0]))

        self.assertEqual(parts.bending, 0.0)
        self.assertEqual(parts.coupling, 0.0)
        self.assertEqual(parts.length, 2.0)
        self.assertEqual(parts.total, 1.0)

    def test_semicircle_with_vertical_zeta(self):
        edges = 64
        parts = energy(semicircle(edges), FlowParams(lam=0.0, zeta=[0.0, 1.0]))
        turn = math.pi / edges

        # Interior vertices carry arc length pi - turn; the edge tangents sit half a turn in.
        self.assertAlmostEqual(parts.bending, (math.pi - turn) / 2, delta=1e-3)
        self.assertAlmostEqual(parts.coupling, -2.0 * math.cos(turn / 2), delta=1e-14)
        self.assertEqual(parts.total, parts.bending - parts.coupling)

    def test_semicircle_energy_converges(self):
        for edges in (64, 256):
            with self.subTest(edges=edges):
                parts = energy(semicircle(edges), FlowParams(lam=0.0, zeta=[0.0, 1.0]))
                self.assertAlmostEqual(parts.bending, math.pi / 2, delta=2 * math.pi / edges)
                self.assertAlmostEqual(parts.coupling, -2.0, delta=(math.pi / edges) ** 2)

    def test_coupling_telescopes_the_curvature_integral(self):
        curve = semicircle(64)
        cache = build_cache(curve)
        zeta = np.array([0.3, 1.0])
        integral = float(
            np.sum((cache.curvature[1:-1] @ zeta) * cache.vertex_weights[1:-1])
        )

        parts = energy(curve, FlowParams(lam=0.0, zeta=zeta))
        self.assertAlmostEqual(parts.coupling, integral, delta=1e-12)

    def test_aligned_segment_has_no_coupling(self):
        parts = energy(straight_segment([0, 0], [1, 0], 8), FlowParams(lam=2.0, zeta=[3.0, 0.0]))

        self.assertEqual(parts.coupling, 0.0)
        self.assertEqual(parts.total, 2.0 * parts.length)

    def test_translation_is_exact(self):
        curve = perturbed_line([0, 0], [1, 0], 16, 0.2, extra_modes=2, seed=1)
        dyadic = curve.with_vertices(np.round(curve.vertices * 64) / 64)
        params = FlowParams(lam=0.7, zeta=[0.5, -0.25])

        shifted = dyadic.with_vertices(dyadic.vertices + np.array([3.0, -5.0]))
        self.assertEqual(energy(shifted, params).total, energy(dyadic, params).total)

    def test_rotation_moves_zeta_along(self):
        curve = perturbed_line([0, 0], [1, 0], 32, 0.15, extra_modes=3, seed=8)
        params = FlowParams(lam=0.4, zeta=[0.2, 0.9])
        turn = rotation(1.1)

        before = energy(curve, params).total
        after = energy(curve.moved(turn), params.rotated(turn)).total
        self.assertLessEqual(abs(after - before), 1e-12 * abs(before))


class GradientTests(SimpleTestCase):
    def test_collinear_interior_vertex(self):
        curve = DiscreteCurve([[0, 0], [1, 0], [2, 0]])
        params = FlowParams(lam=1.0, zeta=[0.0, 0.0])

        np.testing.assert_array_equal(gradient(curve, params), np.zeros((3, 2)))
        np.testing.assert_allclose(fd_gradient(curve, params), 0.0, atol=1e-9)

    def test_matches_finite_differences_on_random_curves(self):
        rng = np.random.default_rng(2024)
        for _ in range(50):
            dim = int(rng.choice([2, 3]))
            edges = int(rng.choice([8, 12, 16, 24]))
            curve = random_smooth_curve(rng, dim, edges)
            params = FlowParams(lam=float(rng.uniform(0.0, 2.0)), zeta=rng.normal(size=dim))

            exact = gradient(curve, params)
            scale = max(float(np.max(np.abs(exact))), 1.0)
            self.assertLessEqual(gradient_error(curve, params) / scale, 1e-6)

    def test_finite_difference_error_is_second_order(self):
        curve = random_smooth_curve(np.random.default_rng(5), 2, 8)
        params = FlowParams(lam=1.0, zeta=[0.3, 0.1])

        coarse = gradient_error(curve, params, step=1e-3)
        fine = gradient_error(curve, params, step=1e-4)
        self.assertGreaterEqual(coarse / fine, 50.0)

    def test_aligned_segment_is_critical(self):
        curve = straight_segment([0, 0], [1, 0], 8)
        params = FlowParams(lam=0.7, zeta=[3.0, 0.0])

        grad = gradient(curve, params)
        self.assertLessEqual(float(np.max(np.abs(grad))), 1e-12 * params.lam)
        np.testing.assert_array_equal(grad[0], [0.0, 0.0])
        np.testing.assert_array_equal(grad[-1], [0.0, 0.0])

    def test_critical_segment_is_a_local_minimum(self):
        curve = straight_segment([0, 0], [1, 0], 8)
        params = FlowParams(lam=1.0, zeta=[2.0, 0.0])
        base = energy(curve, params).total
        rng = np.random.default_rng(9)

        for _ in range(20):
            delta = np.zeros_like(curve.vertices)
            delta[1:-1] = 1e-4 * rng.normal(size=(7, 2))
            moved = curve.with_vertices(curve.vertices + delta)
            self.assertGreaterEqual(energy(moved, params).total - base, -1e-12)

    def test_tangential_sliding_is_nearly_free(self):
        def sliding_rate(edges: int) -> float:
            curve = perturbed_line([0, 0], [1, 0], edges, 0.2)
            cache = build_cache(curve)
            phi = np.sin(math.pi * cache.arc_positions / cache.total_length)
            grad = gradient(curve, FlowParams(lam=1.0, zeta=[0.0, 0.0]), cache)
            return abs(float(np.sum(grad * phi[:, None] * cache.vertex_tangents)))

        self.assertGreaterEqual(sliding_rate(32) / sliding_rate(64), 2.0)


class ResidualTests(SimpleTestCase):
    def test_natural_bc_on_aligned_segment(self):
        curve = straight_segment([0, 0], [1, 0], 8)

        self.assertEqual(natural_bc_residual(curve, FlowParams(lam=1.0, zeta=[1.0, 0.0])), (0.0, 0.0))
        self.assertEqual(natural_bc_residual(curve, FlowParams.plain(2)), (0.0, 0.0))

    def test_natural_bc_on_semicircle(self):
        start, end = natural_bc_residual(semicircle(128), FlowParams.plain(2))

        self.assertAlmostEqual(start, 1.0, delta=1e-2)
        self.assertAlmostEqual(end, 1.0, delta=1e-2)

    def test_stationarity_on_straight_segment(self):
        residual, norm = stationarity_residual(
            straight_segment([0, 0], [1, 0], 16), FlowParams(lam=1.0, zeta=[1.0, 0.0])
        )

        self.assertLessEqual(norm, 1e-12)
        np.testing.assert_array_equal(residual[0], [0.0, 0.0])

    def test_stationarity_on_circle_with_balanced_lambda(self):
        params = FlowParams(lam=0.5, zeta=[0.0, 0.0])
        _, coarse = stationarity_residual(semicircle(64), params)
        _, fine = stationarity_residual(semicircle(128), params)

        self.assertLessEqual(fine, 1e-2)
        self.assertGreaterEqual(coarse / fine, 2.0)

    def test_stationarity_needs_six_edges(self):
        with self.assertRaises(StencilExhausted):
            stationarity_residual(semicircle(5), FlowParams.plain(2))
