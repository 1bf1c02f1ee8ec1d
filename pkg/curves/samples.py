"""Analytic sample curves: initial data for runs, audit corpora and fixtures."""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import NDArray

from curves.geometry import DiscreteCurve


def _as_point(value) -> NDArray[np.float64]:
    return np.asarray(value, dtype=float).reshape(-1)


def unit_normal(direction) -> NDArray[np.float64]:
    """A fixed unit vector orthogonal to ``direction``.

    In the plane this is the direction turned by +90 degrees; in higher
    dimensions the least aligned coordinate axis is orthogonalized.
    """

    direction = _as_point(direction)
    direction = direction / np.linalg.norm(direction)
    if direction.shape[0] == 2:
        return np.array([-direction[1], direction[0]])
    axis = np.zeros_like(direction)
    axis[int(np.argmin(np.abs(direction)))] = 1.0
    normal = axis - (axis @ direction) * direction
    return normal / np.linalg.norm(normal)


def second_normal(direction, normal) -> NDArray[np.float64] | None:
    direction = _as_point(direction)
    if direction.shape[0] < 3:
        return None
    basis = [direction / np.linalg.norm(direction), normal]
    for k in range(direction.shape[0]):
        axis = np.zeros_like(direction)
        axis[k] = 1.0
        for vector in basis:
            axis = axis - (axis @ vector) * vector
        norm = np.linalg.norm(axis)
        if norm > 1e-8:
            return axis / norm
    return None


def _pin_endpoints(vertices, f_minus, f_plus) -> DiscreteCurve:
    vertices[0] = f_minus
    vertices[-1] = f_plus
    return DiscreteCurve(vertices)


def straight_segment(f_minus, f_plus, edges: int) -> DiscreteCurve:
    f_minus, f_plus = _as_point(f_minus), _as_point(f_plus)
    s = np.linspace(0.0, 1.0, edges + 1)
    vertices = f_minus + s[:, None] * (f_plus - f_minus)
    return _pin_endpoints(vertices, f_minus, f_plus)


def circle_arc(f_minus, f_plus, bulge: float, edges: int) -> DiscreteCurve:
    """Circular arc through both endpoints whose midpoint sits ``bulge`` off the chord.

    A positive bulge points along :func:`unit_normal` of the chord; vertices
    are equally spaced in angle.
    """

    f_minus, f_plus = _as_point(f_minus), _as_point(f_plus)
    if bulge == 0:
        return straight_segment(f_minus, f_plus, edges)
    chord = f_plus - f_minus
    half = np.linalg.norm(chord) / 2
    along = chord / (2 * half)
    normal = math.copysign(1.0, bulge) * unit_normal(along)
    sagitta = abs(bulge)
    radius = (half**2 + sagitta**2) / (2 * sagitta)
    center = (f_minus + f_plus) / 2 - (radius - sagitta) * normal
    opening = math.atan2(half, radius - sagitta)
    theta = np.linspace(-opening, opening, edges + 1)
    vertices = center + radius * (
        np.sin(theta)[:, None] * along + np.cos(theta)[:, None] * normal
    )
    return _pin_endpoints(vertices, f_minus, f_plus)


def semicircle(edges: int, radius: float = 1.0) -> DiscreteCurve:
    """``radius * (cos t, sin t)`` for t in [0, pi], uniform in t."""

    theta = np.linspace(0.0, math.pi, edges + 1)
    vertices = radius * np.column_stack((np.cos(theta), np.sin(theta)))
    return DiscreteCurve(vertices)


def ellipse_arc(
    semi_x: float, semi_y: float, edges: int, start: float = 0.0, stop: float = math.pi
) -> DiscreteCurve:
    theta = np.linspace(start, stop, edges + 1)
    vertices = np.column_stack((semi_x * np.cos(theta), semi_y * np.sin(theta)))
    return DiscreteCurve(vertices)


def perturbed_line(
    f_minus,
    f_plus,
    edges: int,
    amplitude: float,
    mode: int = 1,
    extra_modes: int = 0,
    seed: int | None = None,
) -> DiscreteCurve:
    """Chord plus ``amplitude * sin(mode * pi * s / L)`` along a fixed unit normal.

    ``extra_modes`` adds the next sine modes with seeded coefficients decaying
    like 1/k^2. In R^n with n >= 3 the seed also turns the displacement
    direction inside the normal plane.
    """

    f_minus, f_plus = _as_point(f_minus), _as_point(f_plus)
    chord = f_plus - f_minus
    s = np.linspace(0.0, 1.0, edges + 1)
    normal = unit_normal(chord)
    profile = np.sin(mode * math.pi * s)
    if extra_modes:
        rng = np.random.default_rng(seed)
        for k in range(mode + 1, mode + extra_modes + 1):
            weight = rng.uniform(-1.0, 1.0) * (mode / k) ** 2
            profile = profile + weight * np.sin(k * math.pi * s)
        other = second_normal(chord, normal)
        if other is not None:
            phase = rng.uniform(0.0, 2 * math.pi)
            normal = math.cos(phase) * normal + math.sin(phase) * other
    vertices = f_minus + s[:, None] * chord + amplitude * profile[:, None] * normal
    return _pin_endpoints(vertices, f_minus, f_plus)


def random_smooth_curve(
    rng: np.random.Generator,
    dim: int,
    edges: int,
    amplitude: float = 0.2,
    modes: int = 3,
) -> DiscreteCurve:
    """Unit chord along the first axis with random smooth normal displacements.

    The sampling is non-uniform: the parameter is warped by a random monotone
    map before the curve is evaluated.
    """

    v = np.linspace(0.0, 1.0, edges + 1)
    warp = rng.uniform(-0.3, 0.3)
    u = v + warp * np.sin(2 * math.pi * v) / (2 * math.pi)
    vertices = np.zeros((edges + 1, dim))
    vertices[:, 0] = u
    for k in range(1, modes + 1):
        coefficients = rng.uniform(-1.0, 1.0, size=dim - 1) * amplitude / k
        vertices[:, 1:] += np.sin(k * math.pi * u)[:, None] * coefficients
    return DiscreteCurve(vertices)
