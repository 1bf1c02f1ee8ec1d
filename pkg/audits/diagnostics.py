"""Audits over recorded trajectories, consecutive flow states and curve corpora.

Every audit is a pure function of its inputs and returns an :class:`AuditReport`
(or a table that converts to one). Nothing here mutates a trajectory.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from curves.energy import FlowParams
from curves.exceptions import DimMismatch
from curves.geometry import (
    DiscreteCurve,
    GeometryCache,
    VertexField,
    build_cache,
    check_stencil,
    lp_norm,
    nabla_s,
    nabla_s_power,
    normal_project,
    partial_s,
    scale_invariant_norm,
    scaled_lp_norm,
)
from flows.flow import VelocityMode
from flows.reports import (
    DISSIPATION_TOLERANCE,
    SeriesRow,
    bound_violations,
    curvature_bound,
    energy_increase,
    length_upper_bound,
)


logger = logging.getLogger(__name__)

RESCALE_FACTORS = (0.5, 2.0)
RESCALE_TOLERANCE = 1e-8
SUP_BOUND_TOLERANCE = 1e-3
# Vertices within this distance of an endpoint are left out of the identity residuals.
IDENTITY_MARGIN = 2
IDENTITY_RELATIVE_TOLERANCE = 0.25


class AuditError(ValueError):
    pass


class InsufficientData(AuditError):
    pass


class ZeroCurvature(AuditError):
    pass


class ModeMismatch(AuditError):
    pass


class InvalidAuditSpec(AuditError):
    pass


@dataclass
class AuditReport:
    id: str
    corpus_size: int
    empirical_constant: float | None
    worst_case: str | None
    passed: bool
    details: list[dict] = field(default_factory=list)


def finite_or_none(value) -> float | None:
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


def _finite_entries(entries: dict) -> dict:
    return {
        key: finite_or_none(value) if isinstance(value, float) else value
        for key, value in entries.items()
    }


def identity_rate_residuals(
    series: Sequence[SeriesRow], exempt_steps: Iterable[int] = ()
) -> list[tuple[int, float, float]]:
    """``(step, t, |dW/dt + |V|^2| / (1 + |V|^2))`` per accepted step."""

    exempt = set(exempt_steps)
    residuals = []
    for previous, row in zip(series, series[1:]):
        dt = row.t - previous.t
        if row.step in exempt or dt <= 0:
            continue
        rate = (row.total - previous.total) / dt
        v_sq = previous.v_l2**2
        residuals.append((row.step, row.t, abs(rate + v_sq) / (1.0 + v_sq)))
    return residuals


def _window_max(residuals, t_max: float) -> float:
    inside = [value for _, t, value in residuals if t <= t_max]
    return max(inside) if inside else 0.0


def dissipation_audit(
    series: Sequence[SeriesRow],
    mode: str,
    exempt_steps: Iterable[int] = (),
    reference: Sequence[SeriesRow] | None = None,
) -> AuditReport:
    """Flag energy increases and measure the discrete dissipation identity.

    ``reference`` is a second series of the same fixture at a finer (dt, N);
    both identity residuals are then compared over their common time window.
    """

    if len(series) < 2:
        raise InsufficientData("the dissipation audit needs at least two recorded steps")
    if mode not in DISSIPATION_TOLERANCE:
        raise ModeMismatch(f"unknown velocity mode {mode!r}")

    exempt = set(exempt_steps)
    details = []
    for previous, row in zip(series, series[1:]):
        if row.step in exempt:
            continue
        violation = energy_increase(previous, row, mode)
        if violation is not None:
            details.append(violation.as_dict())
    violations = len(details)

    residuals = identity_rate_residuals(series, exempt)
    worst = max(residuals, key=lambda item: item[2], default=None)
    summary = {
        "mode": mode,
        "violations": violations,
        "max_identity_residual": worst[2] if worst else 0.0,
        "exempt_steps": sorted(exempt),
    }
    if reference is not None:
        if len(reference) < 2:
            raise InsufficientData("the reference series needs at least two recorded steps")
        window = min(series[-1].t, reference[-1].t)
        coarse = _window_max(residuals, window)
        fine = _window_max(identity_rate_residuals(reference), window)
        summary.update(
            window_end=window,
            coarse_residual=coarse,
            fine_residual=fine,
            refinement_ratio=finite_or_none(coarse / fine) if fine > 0 else None,
        )
    details.insert(0, summary)

    passed = violations == 0
    logger.info(
        "Dissipation audit: %d violation(s), max identity residual %.3e",
        violations,
        summary["max_identity_residual"],
    )
    return AuditReport(
        id="dissipation",
        corpus_size=len(series),
        empirical_constant=finite_or_none(summary["max_identity_residual"]),
        worst_case=f"step {worst[0]}" if worst else None,
        passed=passed,
        details=details,
    )


def bounds_audit(
    series: Sequence[SeriesRow], params: FlowParams, W0: float, chord: float
) -> AuditReport:
    """Length bounds and the curvature bound at every recorded step.

    ``empirical_constant`` is the largest fraction of an upper bound in use.
    """

    if not series:
        raise InsufficientData("the bounds audit needs a recorded series")

    details = []
    worst_fraction, worst_step = 0.0, None
    for row in series:
        details.extend(v.as_dict() for v in bound_violations(row, params, W0, chord))
        fractions = []
        ceiling = length_upper_bound(params, W0, row.coupling)
        if ceiling is not None and ceiling > 0:
            fractions.append(row.length / ceiling)
        limit = curvature_bound(W0, row.coupling)
        if limit > 0:
            fractions.append(2.0 * row.bending / limit)
        if fractions and max(fractions) > worst_fraction:
            worst_fraction, worst_step = max(fractions), row.step

    violations = len(details)
    details.insert(
        0,
        {
            "violations": violations,
            "chord": chord,
            "W0": W0,
            "length_upper": "checked" if params.lam > 0 else "skipped (lambda = 0)",
            "min_length_minus_chord": min(row.length for row in series) - chord,
        },
    )
    logger.info("Bounds audit: %d violation(s) over %d step(s)", violations, len(series))
    return AuditReport(
        id="bounds",
        corpus_size=len(series),
        empirical_constant=finite_or_none(worst_fraction),
        worst_case=f"step {worst_step}" if worst_step is not None else None,
        passed=violations == 0,
        details=details,
    )


@dataclass
class CurvatureNormTable:
    l_max: int
    rows: list[dict]

    @property
    def maxima(self) -> dict[str, float]:
        keys = [key for key in self.rows[0] if key not in ("step", "t")] if self.rows else []
        return {key: max(row[key] for row in self.rows) for key in keys}

    @property
    def bounded(self) -> bool:
        return all(math.isfinite(value) for value in self.maxima.values())

    def as_audit(self) -> AuditReport:
        maxima = self.maxima
        worst_key = max(maxima, key=maxima.get, default=None)
        worst_step = None
        if worst_key is not None:
            worst_step = max(self.rows, key=lambda row: row[worst_key])["step"]
        return AuditReport(
            id="curvature_norms",
            corpus_size=len(self.rows),
            empirical_constant=finite_or_none(maxima[worst_key]) if worst_key else None,
            worst_case=f"step {worst_step}: {worst_key}" if worst_key else None,
            passed=self.bounded,
            details=[{"l_max": self.l_max, "maxima": _finite_entries(maxima)}]
            + [_finite_entries(row) for row in self.rows],
        )


def curvature_norm_series(snapshots: Iterable, l_max: int) -> CurvatureNormTable:
    """Per snapshot: L^2 norms of the normal and full derivatives of kappa and the sup of the full ones.

    ``snapshots`` yields objects with ``step``, ``t`` and ``curve``.
    """

    if l_max < 0:
        raise InvalidAuditSpec(f"l_max must be >= 0, got {l_max}")
    rows = []
    for snapshot in snapshots:
        cache = build_cache(snapshot.curve)
        check_stencil(cache, l_max)
        normal = full = cache.curvature
        row = {"step": snapshot.step, "t": snapshot.t}
        for order in range(l_max + 1):
            if order:
                normal = nabla_s(normal, cache)
                full = partial_s(full, cache)
            row[f"nabla_{order}_l2"] = lp_norm(normal, cache, 2.0)
            row[f"partial_{order}_l2"] = lp_norm(full, cache, 2.0)
            row[f"partial_{order}_linf"] = lp_norm(full, cache, math.inf)
        rows.append(row)
    if not rows:
        raise InsufficientData("no snapshots to evaluate")
    return CurvatureNormTable(l_max=l_max, rows=rows)


def interpolation_exponent(k: int, i: int, p: float) -> float:
    return (i + 0.5 - 1.0 / p) / k


def interpolation_ratio(curve: DiscreteCurve, k: int, i: int, p: float) -> float:
    """``||nabla^i kappa||_p / (||kappa||_2^(1 - a) * ||kappa||_(k,2)^a)`` in scale-invariant norms."""

    cache = build_cache(curve)
    check_stencil(cache, k)
    alpha = interpolation_exponent(k, i, p)
    base = scaled_lp_norm(cache.curvature, cache, 0, 2.0)
    if base == 0:
        raise ZeroCurvature("the interpolation ratio is undefined for a straight curve")
    lhs = scaled_lp_norm(nabla_s_power(cache.curvature, cache, i), cache, i, p)
    full = scale_invariant_norm(curve, k, 2.0)
    return lhs / (base ** (1.0 - alpha) * full**alpha)


def _check_interpolation_spec(k: int, i: int, p: float) -> None:
    if not 0 <= i < k:
        raise InvalidAuditSpec(f"need 0 <= i < k, got i={i}, k={k}")
    if p < 2:
        raise InvalidAuditSpec(f"need p >= 2, got p={p}")


def interpolation_audit(corpus: Iterable, k: int, i: int, p: float) -> AuditReport:
    """Empirical constant of the interpolation inequality over ``(name, curve)`` pairs."""

    _check_interpolation_spec(k, i, p)
    members = list(corpus)
    if not members:
        raise InsufficientData("the corpus is empty")

    alpha = interpolation_exponent(k, i, p)
    details = []
    worst_name, worst_ratio, worst_drift = None, -math.inf, 0.0
    for name, curve in members:
        ratio = interpolation_ratio(curve, k, i, p)
        drift = max(
            abs(interpolation_ratio(curve.scaled(factor), k, i, p) - ratio) / max(ratio, 1.0)
            for factor in RESCALE_FACTORS
        )
        worst_drift = max(worst_drift, drift)
        details.append({"curve": name, "ratio": ratio, "rescale_drift": drift})
        if ratio > worst_ratio:
            worst_name, worst_ratio = name, ratio

    passed = math.isfinite(worst_ratio) and worst_drift <= RESCALE_TOLERANCE
    details.insert(0, {"k": k, "i": i, "p": p, "alpha": alpha, "max_rescale_drift": worst_drift})
    logger.info(
        "Interpolation audit k=%d i=%d p=%g: constant %.6g over %d curve(s)",
        k,
        i,
        p,
        worst_ratio,
        len(members),
    )
    return AuditReport(
        id="interpolation",
        corpus_size=len(members),
        empirical_constant=finite_or_none(worst_ratio),
        worst_case=worst_name,
        passed=passed,
        details=details,
    )


def sup_bound_terms(positions, values) -> tuple[float, float, float]:
    """``(sup |g|, ||g_x||_L1, ||g||_L1 / |J|)`` for the piecewise linear interpolant."""

    x = np.asarray(positions, dtype=float)
    g = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.shape != g.shape or x.shape[0] < 2:
        raise InvalidAuditSpec("a scalar field needs matching 1-d positions and values")
    span = float(x[-1] - x[0])
    if span <= 0:
        raise InvalidAuditSpec("field positions must increase")
    magnitude = np.abs(g)
    variation = float(np.sum(np.abs(np.diff(g))))
    mass = float(np.sum(0.5 * (magnitude[1:] + magnitude[:-1]) * np.diff(x)))
    return float(magnitude.max()), variation, mass / span


def sup_bound_audit(fields: Iterable, tolerance: float = SUP_BOUND_TOLERANCE) -> AuditReport:
    """``sup |g| <= ||g_x||_L1 + ||g||_L1 / |J|`` with constant 1 over ``(name, x, g)`` triples."""

    members = list(fields)
    if not members:
        raise InsufficientData("the corpus is empty")

    details = []
    worst_name, worst_ratio = None, 0.0
    for name, positions, values in members:
        sup, variation, mean = sup_bound_terms(positions, values)
        rhs = variation + mean
        if sup > rhs + tolerance * sup:
            details.append({"field": name, "sup": sup, "rhs": rhs})
        ratio = sup / rhs if rhs > 0 else 0.0
        if ratio > worst_ratio or worst_name is None:
            worst_name, worst_ratio = name, ratio

    violations = len(details)
    details.insert(0, {"constant": 1.0, "tolerance": tolerance, "violations": violations})
    logger.info("Sup-bound audit: %d violation(s) over %d field(s)", violations, len(members))
    return AuditReport(
        id="sup_bound",
        corpus_size=len(members),
        empirical_constant=finite_or_none(worst_ratio),
        worst_case=worst_name,
        passed=violations == 0,
        details=details,
    )


def _curve_and_mode(state) -> tuple[DiscreteCurve, str | None]:
    if isinstance(state, DiscreteCurve):
        return state, None
    mode = getattr(state, "velocity_mode", None)
    return state.curve, (str(mode) if mode is not None else None)


def _interior_weights(cache: GeometryCache, margin: int) -> np.ndarray:
    weights = np.array(cache.vertex_weights)
    weights[:margin] = 0.0
    weights[-margin:] = 0.0
    return weights


def applied_velocity(before: DiscreteCurve, after: DiscreteCurve, dt: float) -> VertexField:
    """Normal part of ``(x_1 - x_0) / dt`` at interior vertices, zero at the ends."""

    cache = build_cache(before)
    velocity = (after.vertices - before.vertices) / dt
    velocity[0] = velocity[-1] = 0.0
    velocity[1:-1] = normal_project(velocity[1:-1], cache.vertex_tangents[1:-1])
    return velocity


def _identity_terms(before, after, dt: float) -> dict[str, tuple[float, float, float]]:
    curve0, mode0 = _curve_and_mode(before)
    curve1, mode1 = _curve_and_mode(after)
    if VelocityMode.GRADIENT in (mode0, mode1):
        raise ModeMismatch("the evolution identities hold for normal flows only")
    if dt <= 0:
        raise InvalidAuditSpec(f"dt must be positive, got {dt}")
    if curve0.vertices.shape != curve1.vertices.shape:
        raise DimMismatch("both states must share dimension and vertex count")

    cache0 = build_cache(curve0)
    cache1 = build_cache(curve1)
    check_stencil(cache0, IDENTITY_MARGIN)
    velocity = applied_velocity(curve0, curve1, dt)
    kappa, tau = cache0.curvature, cache0.vertex_tangents
    kappa_dot_v = np.sum(kappa * velocity, axis=1)
    weights = _interior_weights(cache0, IDENTITY_MARGIN)
    edge_weights = np.array(cache0.edge_lengths)
    edge_weights[:IDENTITY_MARGIN] = 0.0
    edge_weights[-IDENTITY_MARGIN:] = 0.0

    def vertex_term(lhs, rhs, p=2.0):
        return (
            lp_norm(lhs, cache0, p, weights=weights),
            lp_norm(rhs, cache0, p, weights=weights),
            lp_norm(lhs - rhs, cache0, p, weights=weights),
        )

    def edge_term(lhs, rhs):
        return tuple(
            float(np.sqrt(np.sum(values**2 * edge_weights))) for values in (lhs, rhs, lhs - rhs)
        )

    return {
        "ds": vertex_term((cache1.vertex_weights / cache0.vertex_weights - 1.0) / dt, -kappa_dot_v),
        "tau": vertex_term((cache1.vertex_tangents - tau) / dt, nabla_s(velocity, cache0)),
        "kappa": vertex_term(
            normal_project((cache1.curvature - kappa) / dt, tau),
            nabla_s_power(velocity, cache0, 2) + kappa_dot_v[:, None] * kappa,
        ),
        "full_derivative": vertex_term(
            partial_s(kappa, cache0),
            nabla_s(kappa, cache0) - np.sum(kappa * kappa, axis=1)[:, None] * tau,
            math.inf,
        ),
        "gamma": edge_term(
            (cache1.edge_lengths / cache0.edge_lengths - 1.0) / dt,
            -0.5 * (kappa_dot_v[:-1] + kappa_dot_v[1:]),
        ),
    }


def identity_residuals(before, after, dt: float) -> dict[str, float]:
    """Residuals of the evolution identities of a normal flow between two states.

    ``before`` and ``after`` are flow states or curves; the velocity is the one
    the step applied, the normal part of ``(x_1 - x_0) / dt``. Keys: ``ds``,
    ``tau`` and ``kappa`` (time differences against their right-hand sides,
    L^2), ``full_derivative`` (full versus normal derivative of kappa, sup)
    and ``gamma`` (per-edge length rate, L^2).
    """

    return {name: term[2] for name, term in _identity_terms(before, after, dt).items()}


def _relative(lhs: float, rhs: float, residual: float) -> float:
    scale = max(lhs, rhs)
    if scale == 0.0:
        return 0.0 if residual == 0.0 else math.inf
    return residual / scale


def identity_audit(before, after, dt: float) -> AuditReport:
    """Residuals of one pair; passes when every residual is a small fraction of its terms."""

    terms = _identity_terms(before, after, dt)
    edges = _curve_and_mode(before)[0].edge_count
    details = []
    relative = {}
    for name, (lhs, rhs, residual) in terms.items():
        relative[name] = _relative(lhs, rhs, residual)
        details.append(
            {
                "identity": name,
                "residual": finite_or_none(residual),
                "relative": finite_or_none(relative[name]),
                "dt": dt,
                "N": edges,
            }
        )
    worst = max(relative, key=relative.get)
    return AuditReport(
        id="identity",
        corpus_size=1,
        empirical_constant=finite_or_none(relative[worst]),
        worst_case=worst,
        passed=all(value <= IDENTITY_RELATIVE_TOLERANCE for value in relative.values()),
        details=details,
    )


def identity_audit_pairs(pairs: Iterable) -> AuditReport:
    """Identity audit over ``(label, before, after, dt)`` tuples, worst pair reported."""

    reports = []
    for label, before, after, dt in pairs:
        report = identity_audit(before, after, dt)
        for entry in report.details:
            entry["pair"] = label
        reports.append((label, report))
    if not reports:
        raise InsufficientData("no consecutive state pairs to audit")

    constants = [report.empirical_constant for _, report in reports]
    if any(value is None for value in constants):
        worst_label, worst = next(item for item in reports if item[1].empirical_constant is None)
    else:
        worst_label, worst = max(reports, key=lambda item: item[1].empirical_constant)
    return AuditReport(
        id="identity",
        corpus_size=len(reports),
        empirical_constant=worst.empirical_constant,
        worst_case=f"{worst_label}: {worst.worst_case}",
        passed=all(report.passed for _, report in reports),
        details=[entry for _, report in reports for entry in report.details],
    )
