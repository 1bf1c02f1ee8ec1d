"""Per-step records of a flow run and the per-row invariant checks."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11: same str()/format() behaviour as enum.StrEnum
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__

from curves.energy import EnergyBreakdown, FlowParams
from curves.geometry import DiscreteCurve


class Termination(StrEnum):
    STATIONARY = "stationary"
    T_END = "t_end"
    MAX_STEPS = "max_steps"
    ERROR = "error"


# Relative per-step tolerance on energy increases, by velocity mode.
DISSIPATION_TOLERANCE = {
    "gradient": 1e-12,
    "normal": 1e-8,
}
LENGTH_UPPER_TOLERANCE = 1e-8
CURVATURE_TOLERANCE = 1e-6
LENGTH_LOWER_RELATIVE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SeriesRow:
    step: int
    t: float
    total: float
    bending: float
    coupling: float
    length: float
    v_l2: float
    bc0: float
    bc1: float
    min_h: float

    @classmethod
    def columns(cls) -> tuple[str, ...]:
        return tuple(item.name for item in fields(cls))

    @classmethod
    def from_state(
        cls,
        step: int,
        t: float,
        breakdown: EnergyBreakdown,
        v_l2: float,
        bc: tuple[float, float],
        min_h: float,
    ) -> SeriesRow:
        return cls(
            step=step,
            t=t,
            total=breakdown.total,
            bending=breakdown.bending,
            coupling=breakdown.coupling,
            length=breakdown.length,
            v_l2=v_l2,
            bc0=bc[0],
            bc1=bc[1],
            min_h=min_h,
        )

    @property
    def energy(self) -> EnergyBreakdown:
        return EnergyBreakdown(
            bending=self.bending,
            coupling=self.coupling,
            length=self.length,
            total=self.total,
        )


@dataclass(frozen=True)
class Violation:
    step: int
    invariant: str
    magnitude: float

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunReport:
    params: FlowParams
    integrator: str
    velocity_mode: str
    initial_energy: EnergyBreakdown
    chord: float
    stationarity_tol: float
    series: list[SeriesRow] = field(default_factory=list)
    violations: list[Violation] = field(default_factory=list)
    redistributions: list[int] = field(default_factory=list)
    termination: Termination | None = None
    error: str | None = None
    final_curve: DiscreteCurve | None = None

    @property
    def steps(self) -> int:
        return self.series[-1].step if self.series else 0

    @property
    def final_row(self) -> SeriesRow | None:
        return self.series[-1] if self.series else None

    @property
    def final_time(self) -> float:
        return self.series[-1].t if self.series else 0.0

    @property
    def passed(self) -> bool:
        return not self.violations and self.termination != Termination.ERROR


def energy_increase(previous: SeriesRow, row: SeriesRow, mode: str) -> Violation | None:
    tolerance = DISSIPATION_TOLERANCE[mode] * max(abs(previous.total), abs(row.total))
    increase = row.total - previous.total
    if increase > tolerance:
        return Violation(step=row.step, invariant="energy_decrease", magnitude=increase)
    return None


def length_upper_bound(params: FlowParams, initial_total: float, coupling: float) -> float | None:
    """Upper bound on the length for lambda > 0, None otherwise.

    lambda * L = W - 1/2 int |kappa|^2 + <T_(N-1) - T_0, zeta> <= W_0 + coupling
    along a dissipative run; with zeta = 0 this is L <= W_0 / lambda.
    """

    if params.lam <= 0:
        return None
    return (initial_total + max(coupling, 0.0)) / params.lam


def curvature_bound(initial_total: float, coupling: float) -> float:
    return 2.0 * (initial_total + abs(coupling))


def bound_violations(
    row: SeriesRow, params: FlowParams, initial_total: float, chord: float
) -> list[Violation]:
    violations = []
    floor = chord * (1.0 - LENGTH_LOWER_RELATIVE_TOLERANCE)
    if row.length < floor:
        violations.append(Violation(row.step, "length_lower", chord - row.length))

    ceiling = length_upper_bound(params, initial_total, row.coupling)
    if ceiling is not None and row.length > ceiling + LENGTH_UPPER_TOLERANCE:
        violations.append(Violation(row.step, "length_upper", row.length - ceiling))

    curvature_sq = 2.0 * row.bending
    limit = curvature_bound(initial_total, row.coupling)
    if curvature_sq > limit + CURVATURE_TOLERANCE:
        violations.append(Violation(row.step, "curvature_bound", curvature_sq - limit))

    return violations
