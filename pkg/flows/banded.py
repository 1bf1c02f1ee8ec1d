"""Banded systems of the linearly implicit step.

With edge lengths and vertex weights frozen, the bending energy is the
quadratic form  sum_i |c_i . x|^2 * 2 / (h_(i-1) + h_i)  where c_i is the
three-point stencil (1/h_(i-1), -1/h_(i-1) - 1/h_i, 1/h_i). Its Hessian acts
identically on every coordinate, so one scalar pentadiagonal matrix serves all
n right-hand sides of the full step.

The normal step restricts the same quadratic form to the normal planes of the
interior vertices. Its operator couples the coordinates through the projectors
P_i = I - tau_i tau_i^T and is banded with half-width 3n - 1 once the unknowns
are flattened vertex by vertex.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import solve_banded

from curves.geometry import GeometryCache


BANDS = (2, 2)


class SingularBandedSystem(ArithmeticError):
    pass


def bending_stencils(cache: GeometryCache) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Per interior vertex i: stencil coefficients on (i-1, i, i+1) and 2 / span."""

    h = cache.edge_lengths
    left = 1.0 / h[:-1]
    right = 1.0 / h[1:]
    stencils = np.column_stack((left, -(left + right), right))
    factors = 2.0 / (h[:-1] + h[1:])
    return stencils, factors


def frozen_hessian(cache: GeometryCache) -> NDArray[np.float64]:
    """``A_frozen`` on the interior vertices, LAPACK banded layout.

    Row ``u + r - c`` of the returned array holds entry (r, c), ``u = 2``.
    """

    size = cache.edge_count - 1
    upper = BANDS[1]
    ab = np.zeros((sum(BANDS) + 1, size))

    stencils, factors = bending_stencils(cache)
    centers = np.arange(1, cache.edge_count)
    for a in range(3):
        rows = centers - 1 + a
        for b in range(3):
            cols = centers - 1 + b
            # Unknowns are the interior vertices 1..N-1, stored at index - 1.
            keep = (rows >= 1) & (rows <= size) & (cols >= 1) & (cols <= size)
            values = factors * stencils[:, a] * stencils[:, b]
            np.add.at(ab, (upper + rows[keep] - cols[keep], cols[keep] - 1), values[keep])
    return ab


def assemble_implicit_operator(cache: GeometryCache, dt: float) -> NDArray[np.float64]:
    """``diag(ds) / dt + A_frozen`` on the interior vertices, LAPACK banded layout."""

    ab = frozen_hessian(cache)
    ab[BANDS[1]] += cache.vertex_weights[1:-1] / dt
    return ab


def projected_bands(dim: int) -> tuple[int, int]:
    width = 3 * dim - 1
    return width, width


def assemble_projected_operator(cache: GeometryCache, dt: float) -> NDArray[np.float64]:
    """``diag(ds) / dt + P A_frozen P`` on the flattened interior coordinates.

    Unknown ``(i, a)``, coordinate ``a`` of interior vertex ``i``, sits at
    ``(i - 1) * n + a``. Tangential components only meet the mass term, so the
    solution of a normal right-hand side stays normal.
    """

    hessian = frozen_hessian(cache)
    tangents = cache.vertex_tangents[1:-1]
    size, dim = tangents.shape
    projectors = np.eye(dim)[None, :, :] - tangents[:, :, None] * tangents[:, None, :]
    width = projected_bands(dim)[1]
    ab = np.zeros((2 * width + 1, size * dim))

    mass = np.repeat(cache.vertex_weights[1:-1] / dt, dim)
    ab[width] += mass
    for offset in range(-BANDS[0], BANDS[1] + 1):
        rows = np.arange(max(0, -offset), min(size, size - offset))
        if rows.size == 0:
            continue
        cols = rows + offset
        coupling = hessian[BANDS[1] - offset, cols]
        blocks = coupling[:, None, None] * np.einsum(
            "kab,kbc->kac", projectors[rows], projectors[cols]
        )
        for a in range(dim):
            for b in range(dim):
                flat_rows = rows * dim + a
                flat_cols = cols * dim + b
                ab[width + flat_rows - flat_cols, flat_cols] += blocks[:, a, b]
    return ab


def solve_pentadiagonal(ab: NDArray[np.float64], rhs: NDArray[np.float64]) -> NDArray[np.float64]:
    return solve_band_system(BANDS, ab, rhs)


def solve_band_system(
    bands: tuple[int, int], ab: NDArray[np.float64], rhs: NDArray[np.float64]
) -> NDArray[np.float64]:
    try:
        solution = solve_banded(bands, ab, rhs, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularBandedSystem(str(exc)) from exc
    if not np.all(np.isfinite(solution)):
        raise SingularBandedSystem("banded solve produced non-finite values")
    return solution
