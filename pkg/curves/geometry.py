"""Discrete arc-length calculus on open polylines in R^n.

A curve is an ``(N + 1, n)`` array of vertices. Edge quantities live on the
``N`` edges, everything else on vertices. Vertex fields are plain numpy arrays,
either ``(N + 1,)`` for scalars or ``(N + 1, n)`` for vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from curves.exceptions import (
    CoincidentEndpoints,
    CurveError,
    DegenerateEdge,
    DimMismatch,
    LengthMismatch,
    StencilExhausted,
    TooFewVertices,
)


VertexField = NDArray[np.float64]

EPS = float(np.finfo(float).eps)
MIN_EDGES = 2
# Fourth-order operators need at least this many edges.
MIN_FLOW_EDGES = 4


@dataclass(frozen=True, eq=False)
class DiscreteCurve:
    vertices: NDArray[np.float64]
    endpoints_fixed: tuple[bool, bool] = (True, True)

    def __post_init__(self):
        vertices = np.array(self.vertices, dtype=float)
        if vertices.ndim != 2 or vertices.shape[1] < 2:
            raise DimMismatch(
                f"vertices must have shape (N + 1, n) with n >= 2, got {vertices.shape}"
            )
        if vertices.shape[0] < MIN_EDGES + 1:
            raise TooFewVertices(
                f"a curve needs at least {MIN_EDGES + 1} vertices, got {vertices.shape[0]}"
            )
        if not np.all(np.isfinite(vertices)):
            raise CurveError("vertex coordinates must be finite")
        vertices.flags.writeable = False
        object.__setattr__(self, "vertices", vertices)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def edge_count(self) -> int:
        return self.vertices.shape[0] - 1

    @property
    def f_minus(self) -> NDArray[np.float64]:
        return self.vertices[0]

    @property
    def f_plus(self) -> NDArray[np.float64]:
        return self.vertices[-1]

    @property
    def chord(self) -> float:
        return float(np.linalg.norm(self.vertices[-1] - self.vertices[0]))

    def with_vertices(self, vertices) -> DiscreteCurve:
        return DiscreteCurve(vertices, endpoints_fixed=self.endpoints_fixed)

    def scaled(self, factor: float) -> DiscreteCurve:
        return self.with_vertices(factor * self.vertices)

    def moved(self, rotation, shift=None) -> DiscreteCurve:
        rotation = np.asarray(rotation, dtype=float)
        moved = self.vertices @ rotation.T
        if shift is not None:
            moved = moved + np.asarray(shift, dtype=float)
        return self.with_vertices(moved)


@dataclass(frozen=True, eq=False)
class GeometryCache:
    edge_lengths: NDArray[np.float64]
    edge_tangents: NDArray[np.float64]
    vertex_weights: NDArray[np.float64]
    vertex_tangents: NDArray[np.float64]
    curvature: NDArray[np.float64]
    arc_positions: NDArray[np.float64]
    total_length: float

    @property
    def edge_count(self) -> int:
        return self.edge_lengths.shape[0]

    @property
    def vertex_count(self) -> int:
        return self.edge_count + 1

    @property
    def dim(self) -> int:
        return self.edge_tangents.shape[1]

    @property
    def interior_weights(self) -> NDArray[np.float64]:
        weights = self.vertex_weights.copy()
        weights[0] = 0.0
        weights[-1] = 0.0
        return weights


def _lagrange_weights(nodes: NDArray[np.float64], target: float) -> NDArray[np.float64]:
    weights = np.ones_like(nodes)
    for j, node in enumerate(nodes):
        for m, other in enumerate(nodes):
            if m != j:
                weights[j] *= (target - other) / (node - other)
    return weights


def _extrapolated_end_curvature(
    kappa: NDArray[np.float64], arc: NDArray[np.float64]
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    # Quadratic in arc length through the three nearest interior vertices;
    # lower degree when the curve has fewer interior vertices.
    interior = kappa.shape[0] - 2
    count = min(3, interior)
    head = np.arange(1, count + 1)
    tail = np.arange(kappa.shape[0] - 2, kappa.shape[0] - 2 - count, -1)
    start = _lagrange_weights(arc[head], arc[0]) @ kappa[head]
    end = _lagrange_weights(arc[tail], arc[-1]) @ kappa[tail]
    return start, end


def build_cache(curve: DiscreteCurve) -> GeometryCache:
    """Edge lengths, tangents, trapezoidal weights and curvature vectors."""

    x = curve.vertices
    edges = np.diff(x, axis=0)
    lengths = np.linalg.norm(edges, axis=1)
    degenerate = np.flatnonzero(lengths == 0.0)
    if degenerate.size:
        raise DegenerateEdge(f"edge {int(degenerate[0])} has zero length")
    if np.array_equal(x[0], x[-1]):
        raise CoincidentEndpoints("the endpoints f_- and f_+ coincide")

    tangents = edges / lengths[:, None]

    weights = np.empty(x.shape[0])
    weights[0] = lengths[0] / 2
    weights[-1] = lengths[-1] / 2
    weights[1:-1] = (lengths[:-1] + lengths[1:]) / 2

    chords = x[2:] - x[:-2]
    chord_lengths = np.linalg.norm(chords, axis=1)
    folded = np.flatnonzero(chord_lengths == 0.0)
    if folded.size:
        raise DegenerateEdge(f"curve folds back onto itself at vertex {int(folded[0]) + 1}")
    vertex_tangents = np.empty_like(x)
    vertex_tangents[0] = tangents[0]
    vertex_tangents[-1] = tangents[-1]
    vertex_tangents[1:-1] = chords / chord_lengths[:, None]

    arc = np.concatenate(([0.0], np.cumsum(lengths)))
    kappa = np.empty_like(x)
    kappa[1:-1] = 2 * (tangents[1:] - tangents[:-1]) / (lengths[:-1] + lengths[1:])[:, None]
    kappa[0], kappa[-1] = _extrapolated_end_curvature(kappa, arc)

    return GeometryCache(
        edge_lengths=lengths,
        edge_tangents=tangents,
        vertex_weights=weights,
        vertex_tangents=vertex_tangents,
        curvature=kappa,
        arc_positions=arc,
        total_length=float(lengths.sum()),
    )


def normal_project(v, tau):
    """Remove the component of ``v`` along the unit vector(s) ``tau``."""

    v = np.asarray(v, dtype=float)
    tau = np.asarray(tau, dtype=float)
    return v - np.sum(v * tau, axis=-1, keepdims=True) * tau


def _checked_field(field, cache: GeometryCache) -> NDArray[np.float64]:
    field = np.asarray(field, dtype=float)
    if field.shape[0] != cache.vertex_count:
        raise LengthMismatch(
            f"field has {field.shape[0]} entries, curve has {cache.vertex_count} vertices"
        )
    return field


def _column(values: NDArray[np.float64], like: NDArray[np.float64]) -> NDArray[np.float64]:
    return values.reshape((-1,) + (1,) * (like.ndim - 1))


def partial_s(field, cache: GeometryCache) -> VertexField:
    """Arc-length derivative: central inside, second-order one-sided at the ends."""

    f = _checked_field(field, cache)
    h = cache.edge_lengths
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / _column(h[:-1] + h[1:], f)

    h0, h1 = h[0], h[1]
    out[0] = (
        -(2 * h0 + h1) / (h0 * (h0 + h1)) * f[0]
        + (h0 + h1) / (h0 * h1) * f[1]
        - h0 / (h1 * (h0 + h1)) * f[2]
    )
    a, b = h[-1], h[-2]
    out[-1] = (
        (2 * a + b) / (a * (a + b)) * f[-1]
        - (a + b) / (a * b) * f[-2]
        + a / (b * (a + b)) * f[-3]
    )
    return out


def nabla_s(field, cache: GeometryCache) -> VertexField:
    """Normal part of the arc-length derivative of a vector field."""

    return normal_project(partial_s(field, cache), cache.vertex_tangents)


def nabla_s_power(field, cache: GeometryCache, order: int) -> VertexField:
    result = _checked_field(field, cache)
    for _ in range(order):
        result = nabla_s(result, cache)
    return result


def partial_s_power(field, cache: GeometryCache, order: int) -> VertexField:
    result = _checked_field(field, cache)
    for _ in range(order):
        result = partial_s(result, cache)
    return result


def reparametrize_arclength(curve: DiscreteCurve, edges: int) -> DiscreteCurve:
    """Resample at equal arc-length spacing along the polyline.

    The endpoints are copied bitwise. An already uniform curve resampled to its
    own edge count is returned unchanged.
    """

    if edges < MIN_FLOW_EDGES:
        raise TooFewVertices(f"resampling needs at least {MIN_FLOW_EDGES} edges, got {edges}")
    cache = build_cache(curve)
    x = curve.vertices
    lengths = cache.edge_lengths
    spacing = cache.total_length / curve.edge_count
    if edges == curve.edge_count and np.all(
        np.abs(lengths - spacing) <= 4 * EPS * cache.total_length
    ):
        return curve

    targets = np.linspace(0.0, cache.arc_positions[-1], edges + 1)
    resampled = np.column_stack(
        [np.interp(targets, cache.arc_positions, x[:, k]) for k in range(curve.dim)]
    )
    resampled[0] = x[0]
    resampled[-1] = x[-1]
    return curve.with_vertices(resampled)


def field_magnitudes(field) -> NDArray[np.float64]:
    field = np.asarray(field, dtype=float)
    if field.ndim == 1:
        return np.abs(field)
    return np.linalg.norm(field, axis=-1)


def lp_norm(field, cache: GeometryCache, p: float = 2.0, weights=None) -> float:
    """Discrete L^p norm with the vertex weights as quadrature."""

    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    magnitudes = field_magnitudes(_checked_field(field, cache))
    if math.isinf(p):
        if weights is not None:
            magnitudes = magnitudes[np.asarray(weights) > 0]
        return float(magnitudes.max()) if magnitudes.size else 0.0
    if weights is None:
        weights = cache.vertex_weights
    return float(np.sum(magnitudes**p * weights) ** (1.0 / p))


def scaled_lp_norm(field, cache: GeometryCache, order: int, p: float) -> float:
    """``L^(order + 1 - 1/p) * ||field||_p``, invariant under rescaling of the curve."""

    inverse_p = 0.0 if math.isinf(p) else 1.0 / p
    return cache.total_length ** (order + 1 - inverse_p) * lp_norm(field, cache, p)


def check_stencil(cache: GeometryCache, order: int) -> None:
    if order > cache.edge_count - MIN_FLOW_EDGES:
        raise StencilExhausted(
            f"derivative order {order} needs at least {order + MIN_FLOW_EDGES} edges, "
            f"curve has {cache.edge_count}"
        )


def scale_invariant_norm(curve: DiscreteCurve, k: int, p: float = 2.0) -> float:
    """Sum over i <= k of the scaled L^p norms of the i-th normal derivative of kappa."""

    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    cache = build_cache(curve)
    check_stencil(cache, k)
    total = 0.0
    derivative = cache.curvature
    for order in range(k + 1):
        if order:
            derivative = nabla_s(derivative, cache)
        total += scaled_lp_norm(derivative, cache, order, p)
    return total


def distance_to_chord(curve: DiscreteCurve) -> float:
    """Hausdorff distance between the polyline and the segment joining its endpoints."""

    x = curve.vertices
    start, end = x[0], x[-1]
    direction = end - start
    t = np.clip((x - start) @ direction / (direction @ direction), 0.0, 1.0)
    closest = start + t[:, None] * direction
    return float(np.linalg.norm(x - closest, axis=1).max())
