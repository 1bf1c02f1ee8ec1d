"""Seeded corpora for the inequality audits.

Members are defined by continuous parameters, so the same corpus can be
sampled at any resolution for refinement checks.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray

from curves.geometry import DiscreteCurve


ARC_MODES = (2, 3, 4)


class CorpusMember(NamedTuple):
    name: str
    curve: DiscreteCurve


class ScalarField(NamedTuple):
    name: str
    positions: NDArray[np.float64]
    values: NDArray[np.float64]


class ArcShape(NamedTuple):
    bulge: float
    coefficients: tuple[float, ...]


def _member_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def arc_shapes(size: int, seed: int) -> list[ArcShape]:
    shapes = []
    for index in range(size):
        rng = _member_rng(seed, index)
        bulge = rng.uniform(0.2, 0.8)
        coefficients = tuple(
            rng.uniform(-1.0, 1.0) * 0.1 / mode**2 for mode in ARC_MODES
        )
        shapes.append(ArcShape(bulge, coefficients))
    return shapes


def sample_arc(shape: ArcShape, edges: int) -> DiscreteCurve:
    """Arc from (-1, 0) to (1, 0) with radial sine bumps, uniform in the arc parameter."""

    half, sagitta = 1.0, shape.bulge
    radius = (half**2 + sagitta**2) / (2 * sagitta)
    center = np.array([0.0, sagitta - radius])
    opening = math.atan2(half, radius - sagitta)
    u = np.linspace(0.0, 1.0, edges + 1)
    theta = -opening + 2 * opening * u
    radial = np.column_stack((np.sin(theta), np.cos(theta)))
    offset = np.zeros_like(u)
    for mode, coefficient in zip(ARC_MODES, shape.coefficients):
        offset += coefficient * np.sin(mode * math.pi * u)
    vertices = center + (radius + radius * offset)[:, None] * radial
    vertices[0] = (-1.0, 0.0)
    vertices[-1] = (1.0, 0.0)
    return DiscreteCurve(vertices)


def perturbed_arc_corpus(size: int, seed: int, edges: int) -> list[CorpusMember]:
    return [
        CorpusMember(f"arc-{seed}-{index:03d}", sample_arc(shape, edges))
        for index, shape in enumerate(arc_shapes(size, seed))
    ]


def trig_field_corpus(
    size: int, seed: int, samples: int = 256, degree: int = 8
) -> list[ScalarField]:
    """Random trigonometric polynomials of degree <= ``degree`` on (0, 1)."""

    x = np.linspace(0.0, 1.0, samples)
    fields = []
    for index in range(size):
        rng = _member_rng(seed, index)
        order = int(rng.integers(0, degree + 1))
        values = np.full_like(x, rng.normal())
        for k in range(1, order + 1):
            a, b = rng.normal(size=2) / k
            values += a * np.cos(2 * math.pi * k * x) + b * np.sin(2 * math.pi * k * x)
        fields.append(ScalarField(f"trig-{seed}-{index:03d}-deg{order}", x, values))
    return fields
