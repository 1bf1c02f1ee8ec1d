"""Discrete Willmore-Helfrich energy, its exact gradient and residuals.

    W(f) = 1/2 sum |kappa_i|^2 ds_i  -  <T_{N-1} - T_0, zeta>  +  lambda * L

The coupling term is the telescoped boundary form of the integral of
<kappa, zeta>, so the discrete natural boundary condition matches the
continuous one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from curves.exceptions import CurveError, DimMismatch, StencilExhausted
from curves.geometry import (
    DiscreteCurve,
    GeometryCache,
    VertexField,
    build_cache,
    lp_norm,
    nabla_s_power,
    normal_project,
)


FD_DEFAULT_STEP = 1e-6
MIN_RESIDUAL_EDGES = 6


@dataclass(frozen=True, eq=False)
class FlowParams:
    lam: float
    zeta: NDArray[np.float64]

    def __post_init__(self):
        zeta = np.array(self.zeta, dtype=float).reshape(-1)
        if zeta.shape[0] < 2:
            raise DimMismatch(f"zeta must be a vector in R^n with n >= 2, got {zeta.shape}")
        if not np.isfinite(self.lam) or self.lam < 0:
            raise CurveError(f"lambda must satisfy lambda >= 0, got {self.lam}")
        zeta.flags.writeable = False
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "zeta", zeta)

    @classmethod
    def plain(cls, dim: int, lam: float = 0.0) -> FlowParams:
        return cls(lam=lam, zeta=np.zeros(dim))

    @property
    def dim(self) -> int:
        return self.zeta.shape[0]

    def rotated(self, rotation) -> FlowParams:
        return FlowParams(lam=self.lam, zeta=np.asarray(rotation, dtype=float) @ self.zeta)


@dataclass(frozen=True)
class EnergyBreakdown:
    bending: float
    coupling: float
    length: float
    total: float

    def as_dict(self) -> dict[str, float]:
        return {
            "bending": self.bending,
            "coupling": self.coupling,
            "length": self.length,
            "total": self.total,
        }


def _prepared(curve: DiscreteCurve, params: FlowParams, cache: GeometryCache | None) -> GeometryCache:
    if curve.dim != params.dim:
        raise DimMismatch(f"curve lives in R^{curve.dim}, zeta in R^{params.dim}")
    return cache if cache is not None else build_cache(curve)


def energy(
    curve: DiscreteCurve, params: FlowParams, cache: GeometryCache | None = None
) -> EnergyBreakdown:
    cache = _prepared(curve, params, cache)
    kappa = cache.curvature[1:-1]
    bending = 0.5 * float(np.sum(np.sum(kappa * kappa, axis=1) * cache.vertex_weights[1:-1]))
    tangents = cache.edge_tangents
    coupling = float((tangents[-1] - tangents[0]) @ params.zeta)
    length = cache.total_length
    return EnergyBreakdown(
        bending=bending,
        coupling=coupling,
        length=length,
        total=bending - coupling + params.lam * length,
    )


def gradient(
    curve: DiscreteCurve, params: FlowParams, cache: GeometryCache | None = None
) -> VertexField:
    """Exact derivative of the discrete energy with respect to every vertex.

    The endpoint rows are zero because the endpoints are fixed. Each bending
    term is |T_i - T_(i-1)|^2 / (h_(i-1) + h_i); the chain rule runs through
    the edge tangents and the edge lengths.
    """

    cache = _prepared(curve, params, cache)
    tangents = cache.edge_tangents
    lengths = cache.edge_lengths

    turns = tangents[1:] - tangents[:-1]
    spans = lengths[:-1] + lengths[1:]
    turn_sq = np.sum(turns * turns, axis=1)

    d_tangent = np.zeros_like(tangents)
    d_tangent[1:] += 2 * turns / spans[:, None]
    d_tangent[:-1] -= 2 * turns / spans[:, None]
    d_tangent[0] += params.zeta
    d_tangent[-1] -= params.zeta

    d_length = np.full(lengths.shape, params.lam)
    d_length[1:] -= turn_sq / spans**2
    d_length[:-1] -= turn_sq / spans**2

    per_edge = (
        normal_project(d_tangent, tangents) / lengths[:, None]
        + tangents * d_length[:, None]
    )
    grad = np.zeros_like(curve.vertices)
    grad[1:-1] = per_edge[:-1] - per_edge[1:]
    return grad


def fd_gradient(
    curve: DiscreteCurve, params: FlowParams, step: float = FD_DEFAULT_STEP
) -> VertexField:
    """Central-difference gradient oracle, step scaled by ``1 + |x|`` per coordinate."""

    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    base = np.array(curve.vertices)
    grad = np.zeros_like(base)
    for i in range(1, base.shape[0] - 1):
        for k in range(base.shape[1]):
            delta = step * (1.0 + abs(base[i, k]))
            forward = base.copy()
            backward = base.copy()
            forward[i, k] += delta
            backward[i, k] -= delta
            grad[i, k] = (
                energy(curve.with_vertices(forward), params).total
                - energy(curve.with_vertices(backward), params).total
            ) / (forward[i, k] - backward[i, k])
    return grad


def boundary_target(tau, zeta) -> NDArray[np.float64]:
    """Curvature prescribed at an endpoint: the normal part of zeta."""

    return normal_project(zeta, tau)


def natural_bc_residual(
    curve: DiscreteCurve, params: FlowParams, cache: GeometryCache | None = None
) -> tuple[float, float]:
    cache = _prepared(curve, params, cache)
    kappa = cache.curvature
    tau = cache.vertex_tangents
    start = np.linalg.norm(kappa[0] - boundary_target(tau[0], params.zeta))
    end = np.linalg.norm(kappa[-1] - boundary_target(tau[-1], params.zeta))
    return float(start), float(end)


def stationarity_residual(
    curve: DiscreteCurve, params: FlowParams, cache: GeometryCache | None = None
) -> tuple[VertexField, float]:
    """V = -nabla_s^2 kappa - 1/2 |kappa|^2 kappa + lambda kappa and its L^2 norm.

    V is evaluated at interior vertices; the endpoint rows are zero and the
    norm uses the interior weights only.
    """

    cache = _prepared(curve, params, cache)
    if cache.edge_count < MIN_RESIDUAL_EDGES:
        raise StencilExhausted(
            f"the Euler-Lagrange residual needs at least {MIN_RESIDUAL_EDGES} edges, "
            f"curve has {cache.edge_count}"
        )
    kappa = cache.curvature
    kappa_sq = np.sum(kappa * kappa, axis=1)
    residual = (
        -nabla_s_power(kappa, cache, 2)
        - 0.5 * kappa_sq[:, None] * kappa
        + params.lam * kappa
    )
    residual[0] = 0.0
    residual[-1] = 0.0
    return residual, lp_norm(residual, cache, 2.0, weights=cache.interior_weights)


def curvature_l2_squared(cache: GeometryCache) -> float:
    """Interior quadrature of |kappa|^2, the quantity bounded along the flow."""

    kappa = cache.curvature[1:-1]
    return float(np.sum(np.sum(kappa * kappa, axis=1) * cache.vertex_weights[1:-1]))
