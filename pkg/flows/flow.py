"""Gradient flow of the discrete Willmore-Helfrich energy with fixed endpoints.

The semi-discrete system is the mass-lumped gradient flow

    dx_i/dt = -(dW/dx_i) / ds_i,   i = 1..N-1,

optionally projected onto the normal space at every vertex. Endpoints never
move; the natural boundary conditions are not imposed and emerge from the
discrete first variation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11: same str()/format() behaviour as enum.StrEnum
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from curves.energy import (
    EnergyBreakdown,
    FlowParams,
    energy,
    gradient,
    natural_bc_residual,
)
from curves.exceptions import CurveError, DegenerateEdge, DimMismatch
from curves.geometry import (
    DiscreteCurve,
    GeometryCache,
    VertexField,
    build_cache,
    lp_norm,
    normal_project,
    reparametrize_arclength,
)
from flows.banded import (
    SingularBandedSystem,
    assemble_implicit_operator,
    assemble_projected_operator,
    projected_bands,
    solve_band_system,
    solve_pentadiagonal,
)
from flows.reports import (
    RunReport,
    SeriesRow,
    Termination,
    bound_violations,
    energy_increase,
)


logger = logging.getLogger(__name__)

DEFAULT_REDISTRIBUTE_EVERY = 50
DEFAULT_STATIONARITY_FACTOR = 1e-6


class FlowError(ValueError):
    pass


class MeshCollapse(FlowError):
    pass


class NonFinite(FlowError):
    pass


class SolverSingular(FlowError):
    pass


class IncompatibleInitialData(FlowError):
    pass


class Integrator(StrEnum):
    EXPLICIT = "explicit"
    SEMI_IMPLICIT = "semi_implicit"


class VelocityMode(StrEnum):
    NORMAL = "normal"
    GRADIENT = "gradient"


class DtMode(StrEnum):
    FIXED = "fixed"
    CFL = "cfl"


@dataclass(frozen=True)
class FlowConfig:
    params: FlowParams
    integrator: Integrator = Integrator.SEMI_IMPLICIT
    velocity_mode: VelocityMode = VelocityMode.NORMAL
    dt_mode: DtMode = DtMode.CFL
    dt: float | None = None
    safety: float = 0.1
    t_end: float = 0.0
    max_steps: int = 100_000
    stationarity_tol: float | None = None
    redistribute_every: int | None = None
    h_min_factor: float = 1e-3
    validate_bc0: bool = False
    bc0_tol: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "integrator", Integrator(self.integrator))
        object.__setattr__(self, "velocity_mode", VelocityMode(self.velocity_mode))
        object.__setattr__(self, "dt_mode", DtMode(self.dt_mode))
        if self.t_end <= 0 and self.max_steps <= 0:
            raise ValueError("either t_end or max_steps must be positive")
        if self.stationarity_tol is not None and self.stationarity_tol <= 0:
            raise ValueError("stationarity_tol must be positive")
        if not 0 < self.safety <= 1:
            raise ValueError("safety must lie in (0, 1]")
        if self.dt_mode == DtMode.FIXED and (self.dt is None or self.dt <= 0):
            raise ValueError("a fixed time step needs dt > 0")
        if self.redistribute_every is not None and self.redistribute_every < 0:
            raise ValueError("redistribute_every must be >= 0")
        if self.h_min_factor < 0:
            raise ValueError("h_min_factor must be >= 0")

    @property
    def redistribution_interval(self) -> int:
        if self.redistribute_every is not None:
            return self.redistribute_every
        if self.velocity_mode == VelocityMode.NORMAL:
            return DEFAULT_REDISTRIBUTE_EVERY
        return 0

    def stationarity_threshold(self, initial_total: float) -> float:
        if self.stationarity_tol is not None:
            return self.stationarity_tol
        return DEFAULT_STATIONARITY_FACTOR * (1.0 + abs(initial_total))


@dataclass(frozen=True, eq=False)
class FlowState:
    time: float
    step_index: int
    curve: DiscreteCurve
    cache: GeometryCache
    gradient: VertexField
    velocity: VertexField
    velocity_mode: VelocityMode


def descent_velocity(
    cache: GeometryCache, grad: VertexField, mode: VelocityMode
) -> VertexField:
    """``-g_i / ds_i`` at interior vertices, normal-projected in normal mode."""

    velocity = np.zeros_like(grad)
    velocity[1:-1] = -grad[1:-1] / cache.vertex_weights[1:-1, None]
    if mode == VelocityMode.NORMAL:
        velocity[1:-1] = normal_project(velocity[1:-1], cache.vertex_tangents[1:-1])
    return velocity


def velocity_l2(velocity: VertexField, cache: GeometryCache) -> float:
    return lp_norm(velocity, cache, 2.0)


def _state_for(
    curve: DiscreteCurve,
    config: FlowConfig,
    time: float,
    step_index: int,
    cache: GeometryCache | None = None,
) -> FlowState:
    cache = cache if cache is not None else build_cache(curve)
    grad = gradient(curve, config.params, cache)
    return FlowState(
        time=time,
        step_index=step_index,
        curve=curve,
        cache=cache,
        gradient=grad,
        velocity=descent_velocity(cache, grad, config.velocity_mode),
        velocity_mode=config.velocity_mode,
    )


def initial_state(curve: DiscreteCurve, config: FlowConfig) -> FlowState:
    if curve.dim != config.params.dim:
        raise DimMismatch(f"curve lives in R^{curve.dim}, zeta in R^{config.params.dim}")
    return _state_for(curve, config, 0.0, 0)


def compute_velocity(state: FlowState, config: FlowConfig) -> VertexField:
    grad = gradient(state.curve, config.params, state.cache)
    return descent_velocity(state.cache, grad, config.velocity_mode)


def _moved(state: FlowState, config: FlowConfig, vertices: NDArray[np.float64], dt: float) -> FlowState:
    if not np.all(np.isfinite(vertices)):
        raise NonFinite(f"non-finite coordinates after step {state.step_index + 1}")
    curve = state.curve.with_vertices(vertices)
    try:
        cache = build_cache(curve)
    except DegenerateEdge as exc:
        raise MeshCollapse(str(exc)) from exc
    floor = config.h_min_factor * cache.total_length / cache.edge_count
    shortest = float(cache.edge_lengths.min())
    if shortest < floor:
        raise MeshCollapse(
            f"edge length {shortest:.3e} fell below {floor:.3e} at step {state.step_index + 1}"
        )
    return _state_for(curve, config, state.time + dt, state.step_index + 1, cache)


def explicit_step(state: FlowState, config: FlowConfig, dt: float) -> FlowState:
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    vertices = np.array(state.curve.vertices)
    vertices[1:-1] += dt * state.velocity[1:-1]
    return _moved(state, config, vertices, dt)


def semi_implicit_step(state: FlowState, config: FlowConfig, dt: float) -> FlowState:
    """Solve ``(M / dt + A_frozen) dx = -grad W`` on the interior vertices.

    In normal mode the system is restricted to the normal planes,
    ``(M / dt + P A_frozen P) dx = -P grad W``, so the step vanishes exactly
    where the normal velocity does.
    """

    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    tangents = state.cache.vertex_tangents[1:-1]
    try:
        if config.velocity_mode == VelocityMode.NORMAL:
            rhs = normal_project(-state.gradient[1:-1], tangents)
            operator = assemble_projected_operator(state.cache, dt)
            increment = solve_band_system(
                projected_bands(state.curve.dim), operator, rhs.ravel()
            ).reshape(rhs.shape)
            # Rounding only.
            increment = normal_project(increment, tangents)
        else:
            operator = assemble_implicit_operator(state.cache, dt)
            increment = solve_pentadiagonal(operator, -state.gradient[1:-1])
    except SingularBandedSystem as exc:
        raise SolverSingular(str(exc)) from exc
    vertices = np.array(state.curve.vertices)
    vertices[1:-1] += increment
    return _moved(state, config, vertices, dt)


def select_dt(state: FlowState, config: FlowConfig) -> float:
    """Step size from the mesh: quartic in h explicitly, quadratic semi-implicitly."""

    if config.dt_mode == DtMode.FIXED:
        return float(config.dt)
    shortest = float(state.cache.edge_lengths.min())
    if config.integrator == Integrator.SEMI_IMPLICIT:
        return config.safety * shortest**2
    kappa_sq = np.sum(state.cache.curvature**2, axis=1)
    stiffness = 1.0 + float(kappa_sq.max()) * state.cache.total_length**2
    return config.safety * shortest**4 / stiffness


STEPPERS = {
    Integrator.EXPLICIT: explicit_step,
    Integrator.SEMI_IMPLICIT: semi_implicit_step,
}


def redistribute(state: FlowState, config: FlowConfig) -> FlowState:
    curve = reparametrize_arclength(state.curve, state.curve.edge_count)
    return _state_for(curve, config, state.time, state.step_index)


def series_row(state: FlowState, params: FlowParams) -> tuple[SeriesRow, EnergyBreakdown]:
    breakdown = energy(state.curve, params, state.cache)
    row = SeriesRow.from_state(
        step=state.step_index,
        t=state.time,
        breakdown=breakdown,
        v_l2=velocity_l2(state.velocity, state.cache),
        bc=natural_bc_residual(state.curve, params, state.cache),
        min_h=float(state.cache.edge_lengths.min()),
    )
    return row, breakdown


StateObserver = Callable[[FlowState, SeriesRow], None]


def run(
    initial: DiscreteCurve,
    config: FlowConfig,
    observer: StateObserver | None = None,
) -> RunReport:
    """Integrate until stationary, ``t_end`` or ``max_steps``.

    Step failures end the run with termination ``error``; they are recorded
    in the report rather than raised. ``observer`` sees every accepted state,
    the initial one included.
    """

    params = config.params
    state = initial_state(initial, config)
    if config.validate_bc0:
        residuals = natural_bc_residual(initial, params, state.cache)
        if max(residuals) > config.bc0_tol:
            raise IncompatibleInitialData(
                f"initial curve violates the natural boundary conditions: "
                f"residuals {residuals[0]:.3e}, {residuals[1]:.3e} exceed {config.bc0_tol:.3e}"
            )

    row, breakdown = series_row(state, params)
    tolerance = config.stationarity_threshold(breakdown.total)
    report = RunReport(
        params=params,
        integrator=config.integrator.value,
        velocity_mode=config.velocity_mode.value,
        initial_energy=breakdown,
        chord=initial.chord,
        stationarity_tol=tolerance,
        series=[row],
    )
    report.violations.extend(bound_violations(row, params, breakdown.total, report.chord))
    if observer is not None:
        observer(state, row)

    stepper = STEPPERS[config.integrator]
    interval = config.redistribution_interval
    logger.info(
        "Flow run started: N=%d, integrator=%s, mode=%s, W0=%.12g, tol=%.3e",
        initial.edge_count,
        config.integrator.value,
        config.velocity_mode.value,
        breakdown.total,
        tolerance,
    )

    while True:
        if row.v_l2 <= tolerance:
            report.termination = Termination.STATIONARY
            break
        if config.t_end > 0 and state.time >= config.t_end:
            report.termination = Termination.T_END
            break
        if config.max_steps > 0 and state.step_index >= config.max_steps:
            report.termination = Termination.MAX_STEPS
            break

        dt = select_dt(state, config)
        clipped = config.t_end > 0 and state.time + dt >= config.t_end
        if clipped:
            dt = config.t_end - state.time
        redistributed = False
        try:
            state = stepper(state, config, dt)
            if clipped:
                state = replace(state, time=config.t_end)
            if interval and state.step_index % interval == 0:
                state = redistribute(state, config)
                redistributed = True
        except (FlowError, CurveError) as exc:
            report.termination = Termination.ERROR
            report.error = str(exc)
            logger.warning("Flow run stopped at step %d: %s", state.step_index + 1, exc)
            break

        previous = row
        row, _ = series_row(state, params)
        if not math.isfinite(row.total):
            report.termination = Termination.ERROR
            report.error = f"non-finite energy at step {row.step}"
            break
        if redistributed:
            report.redistributions.append(row.step)
        else:
            increase = energy_increase(previous, row, config.velocity_mode.value)
            if increase is not None:
                report.violations.append(increase)
                logger.warning(
                    "Energy increased by %.3e at step %d", increase.magnitude, increase.step
                )
        report.violations.extend(bound_violations(row, params, breakdown.total, report.chord))
        report.series.append(row)
        if observer is not None:
            observer(state, row)
        logger.debug("step %d t=%.6e W=%.12g |V|=%.3e", row.step, row.t, row.total, row.v_l2)

    report.final_curve = state.curve
    logger.info(
        "Flow run finished: termination=%s, steps=%d, t=%.6e, W=%.12g, violations=%d",
        report.termination.value,
        report.steps,
        report.final_time,
        report.series[-1].total,
        len(report.violations),
    )
    return report
