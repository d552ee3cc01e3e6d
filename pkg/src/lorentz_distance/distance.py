from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from numpy.typing import ArrayLike
from scipy.optimize import minimize

from .clifford import euclidean_generators
from .families import SteepFamily
from .spacetime import (
    CausalRelation,
    FloatArray,
    ModelKind,
    ScaleForm,
    SpacetimeModel,
    causal_relation,
)

logger = logging.getLogger(__name__)

CAUSAL_SEGMENT_TOLERANCE = 1e-9
NUMERIC_SLACK = 1e-6
# objective value for candidates that are not steep on the grid
INFEASIBLE_PENALTY = 1e6


class DistanceError(RuntimeError):
    pass


class UnsupportedPairError(DistanceError):
    pass


class NonCausalCurveError(DistanceError):
    pass


class EmptyFamilyError(DistanceError):
    pass


class DistanceMethod(StrEnum):
    ANALYTIC = "analytic"
    CURVE_ORACLE = "curve-oracle"
    STEEP_VARIATIONAL = "steep-variational"
    RIEMANNIAN_BASELINE = "riemannian-baseline"


@dataclass(frozen=True, slots=True)
class DistanceResult:
    value: float
    method: DistanceMethod
    # maximizing curve nodes, minimizing parameter, or maximizing gradient
    certificate: FloatArray | None = None
    notes: tuple[str, ...] = ()
    iterations: int = 0

    def __post_init__(self) -> None:
        if self.value < 0.0:
            raise DistanceError(f"Distance must be non-negative, got {self.value}")


@dataclass(frozen=True, slots=True)
class PolygonalCausalCurve:
    nodes: FloatArray

    def __post_init__(self) -> None:
        if self.nodes.ndim != 2 or self.nodes.shape[0] < 2:
            raise NonCausalCurveError("A curve needs at least two nodes")
        if np.any(np.diff(self.nodes[:, 0]) <= 0.0):
            raise NonCausalCurveError("Curve nodes must have strictly increasing t")

    @classmethod
    def through(cls, *points: ArrayLike) -> PolygonalCausalCurve:
        return cls(nodes=np.asarray([np.asarray(p, dtype=np.float64) for p in points]))

    @classmethod
    def straight(cls, p: ArrayLike, q: ArrayLike, segments: int) -> PolygonalCausalCurve:
        start = np.asarray(p, dtype=np.float64)
        end = np.asarray(q, dtype=np.float64)
        weights = np.linspace(0.0, 1.0, segments + 1)[:, None]
        return cls(nodes=start + weights * (end - start))


@dataclass(frozen=True, slots=True)
class OracleSettings:
    segments: int = 64
    iterations: int = 200
    starts: int = 8
    seed: int = 0
    cone_margin: float = 1e-6
    step_tol: float = 1e-10
    perturbation: float = 0.1


@dataclass(frozen=True, slots=True)
class VariationalSettings:
    starts: int = 8
    seed: int = 0
    slack: float = 1e-8
    refine_step: float = 1e-2
    refine_tol: float = 1e-12
    max_refinements: int = 10_000


@dataclass(frozen=True, slots=True)
class GapReport:
    lower: DistanceResult
    upper: DistanceResult
    tolerance: float
    notes: tuple[str, ...] = ()

    @property
    def gap(self) -> float:
        return self.upper.value - self.lower.value

    @property
    def consistent(self) -> bool:
        return self.gap >= -NUMERIC_SLACK

    @property
    def closed(self) -> bool:
        return self.consistent and self.gap <= self.tolerance


def pos_part(alpha: float) -> float:
    return max(0.0, alpha)


def curve_length(
    model: SpacetimeModel,
    curve: PolygonalCausalCurve,
    tol: float = CAUSAL_SEGMENT_TOLERANCE,
) -> float:
    for node in curve.nodes:
        model.validate_point(node)
    lengths, speed_sq = _segment_lengths(model, curve.nodes[:, 0], curve.nodes[:, 1:])
    # g(v, v) = -1 + |v|_h^2 with v^0 = 1
    spacelike = np.flatnonzero(speed_sq - 1.0 > tol)
    if spacelike.size:
        index = int(spacelike[0])
        raise NonCausalCurveError(
            f"Segment {index} has a spacelike midpoint velocity "
            f"(g(v,v)={speed_sq[index] - 1.0:.3e})"
        )
    return float(np.sum(lengths))


def analytic_distance(model: SpacetimeModel, p: ArrayLike, q: ArrayLike) -> DistanceResult:
    start = model.validate_point(p)
    end = model.validate_point(q)
    dt = float(end[0] - start[0])
    dx = end[1:] - start[1:]

    if model.kind is ModelKind.MINKOWSKI:
        return _flat_distance(dt, float(np.linalg.norm(dx)))

    scale = model.scale_factor
    if scale is not None and scale.form is ScaleForm.CONSTANT:
        return _flat_distance(dt, scale.coefficient * float(np.linalg.norm(dx)))
    if np.allclose(dx, 0.0, rtol=0.0, atol=1e-12):
        return DistanceResult(
            value=pos_part(dt), method=DistanceMethod.ANALYTIC, notes=("comoving",)
        )
    raise UnsupportedPairError(
        f"No closed form on {model.label} for non-comoving points "
        f"{start.tolist()} -> {end.tolist()}"
    )


def oracle_distance(
    model: SpacetimeModel,
    p: ArrayLike,
    q: ArrayLike,
    settings: OracleSettings | None = None,
) -> DistanceResult:
    settings = settings or OracleSettings()
    start = model.validate_point(p)
    end = model.validate_point(q)

    relation = causal_relation(model, start, end)
    if relation is CausalRelation.UNRELATED:
        logger.info("Oracle: %s -> %s not causally related", start.tolist(), end.tolist())
        return DistanceResult(
            value=0.0, method=DistanceMethod.CURVE_ORACLE, notes=("unreachable",)
        )
    if relation is CausalRelation.CAUSAL_NULL:
        return DistanceResult(
            value=0.0, method=DistanceMethod.CURVE_ORACLE, notes=("null-related",)
        )

    times = np.linspace(start[0], end[0], settings.segments + 1)
    base = _conformal_line(model, times, start, end)
    if not _feasible(model, times, base, 0.0):
        projected = _project_into_cone(model, times, base, settings.cone_margin)
        if projected is None:
            return DistanceResult(
                value=0.0,
                method=DistanceMethod.CURVE_ORACLE,
                notes=("unreachable", "no causal polygonal curve at this resolution"),
            )
        base = projected

    rng = np.random.default_rng(settings.seed)
    best_spatial = base
    best_length = _total_length(model, times, base)
    total_iterations = 0

    for index in range(settings.starts):
        initial = base if index == 0 else _perturbed_start(model, times, base, rng, settings)
        spatial, length, iterations = _ascend(model, times, initial, settings)
        total_iterations += iterations
        logger.debug("Oracle start=%d length=%.12f iterations=%d", index, length, iterations)
        if length > best_length:
            best_spatial, best_length = spatial, length

    nodes = np.column_stack((times, best_spatial))
    value = curve_length(model, PolygonalCausalCurve(nodes=nodes))
    logger.info(
        "Oracle distance %s -> %s on %s = %.12f (segments=%d starts=%d)",
        start.tolist(),
        end.tolist(),
        model.label,
        value,
        settings.segments,
        settings.starts,
    )
    return DistanceResult(
        value=value,
        method=DistanceMethod.CURVE_ORACLE,
        certificate=nodes,
        notes=(relation.value,),
        iterations=total_iterations,
    )


def steep_family_distance(
    model: SpacetimeModel,
    family: SteepFamily,
    p: ArrayLike,
    q: ArrayLike,
    settings: VariationalSettings | None = None,
) -> DistanceResult:
    settings = settings or VariationalSettings()
    start = model.validate_point(p)
    end = model.validate_point(q)

    relation = causal_relation(model, start, end)
    if relation is CausalRelation.UNRELATED:
        logger.info("Variational: %s -> %s not causally related", start.tolist(), end.tolist())
        return DistanceResult(
            value=0.0, method=DistanceMethod.STEEP_VARIATIONAL, notes=("unreachable",)
        )
    if relation is CausalRelation.CAUSAL_NULL:
        return DistanceResult(
            value=0.0, method=DistanceMethod.STEEP_VARIATIONAL, notes=("null-related",)
        )

    bounds = list(zip(family.lower, family.upper, strict=True))
    rejected = 0

    def objective(theta: FloatArray) -> float:
        nonlocal rejected
        theta = np.clip(theta, family.lower, family.upper)
        if not family.is_steep(model, theta, settings.slack):
            rejected += 1
            return INFEASIBLE_PENALTY
        return pos_part(family.difference(theta, start, end))

    rng = np.random.default_rng(settings.seed)
    candidates = [family.center] + [
        rng.uniform(family.lower, family.upper) for _ in range(max(settings.starts - 1, 0))
    ]

    best_theta: FloatArray | None = None
    best_value = math.inf
    evaluations = 0
    for index, candidate in enumerate(candidates):
        start_value = objective(candidate)
        if start_value >= INFEASIBLE_PENALTY:
            logger.debug("Variational start=%d is not steep on the grid, skipped", index)
            continue
        found = minimize(
            objective,
            candidate,
            method="Powell",
            bounds=bounds,
            options={"xtol": 1e-12, "ftol": 1e-15, "maxiter": 10_000},
        )
        evaluations += int(found.nfev)
        theta = np.clip(np.asarray(found.x, dtype=np.float64), family.lower, family.upper)
        # bounded Powell may end on a point worse than its start
        if objective(theta) > start_value:
            logger.debug("Variational start=%d: Powell did not improve, refining start", index)
            theta = np.asarray(candidate, dtype=np.float64).copy()
        theta, value, refinements = _coordinate_refine(objective, theta, family, settings)
        evaluations += refinements
        logger.debug("Variational start=%d value=%.12f theta=%s", index, value, theta.tolist())
        if value < best_value:
            best_theta, best_value = theta, value

    if best_theta is None or best_value >= INFEASIBLE_PENALTY:
        logger.error("Family %s has no member steep on its validation grid", family.name)
        raise EmptyFamilyError(f"Family {family.name} has no member steep on its validation grid")

    family.member(best_theta).check_consistency()
    logger.info(
        "Variational distance %s -> %s with %s = %.12f (rejected candidates=%d)",
        start.tolist(),
        end.tolist(),
        family.name,
        best_value,
        rejected,
    )
    return DistanceResult(
        value=best_value,
        method=DistanceMethod.STEEP_VARIATIONAL,
        certificate=best_theta,
        notes=(family.name,),
        iterations=evaluations,
    )


def riemannian_baseline(
    p: ArrayLike, q: ArrayLike, *, iterations: int = 200, seed: int = 0, tol: float = 1e-14
) -> DistanceResult:
    """sup |f(q) - f(p)| over affine f with ||[D, f]|| <= 1 on flat Euclidean space."""
    start = np.asarray(p, dtype=np.float64)
    delta = np.asarray(q, dtype=np.float64) - start
    generators = np.asarray(euclidean_generators(delta.shape[0]))

    def lipschitz_norm(w: FloatArray) -> float:
        commutator = -1j * np.tensordot(w, generators, axes=1)
        return float(np.linalg.norm(commutator, ord=2))

    def project(w: FloatArray) -> FloatArray:
        return w / max(1.0, lipschitz_norm(w))

    span = float(np.linalg.norm(delta))
    rng = np.random.default_rng(seed)
    w = project(rng.normal(size=delta.shape[0]))
    if span == 0.0:
        return DistanceResult(
            value=0.0, method=DistanceMethod.RIEMANNIAN_BASELINE, certificate=w
        )

    # unit ascent direction keeps the step independent of the pair spacing
    unit = delta / span
    used = 0
    converged = False
    for used in range(1, iterations + 1):
        direction = 1.0 if w @ unit >= 0.0 else -1.0
        updated = project(w + direction * unit)
        converged = float(np.max(np.abs(updated - w))) <= tol
        w = updated
        if converged:
            break
    if not converged:
        logger.warning(
            "Riemannian baseline did not converge in %d iterations (tol=%.1e)", iterations, tol
        )

    return DistanceResult(
        value=abs(float(w @ delta)),
        method=DistanceMethod.RIEMANNIAN_BASELINE,
        certificate=w,
        iterations=used,
    )


def duality_gap(
    model: SpacetimeModel,
    family: SteepFamily,
    p: ArrayLike,
    q: ArrayLike,
    oracle_settings: OracleSettings | None = None,
    variational_settings: VariationalSettings | None = None,
    tolerance: float = 5e-3,
) -> GapReport:
    lower = oracle_distance(model, p, q, oracle_settings)
    upper = steep_family_distance(model, family, p, q, variational_settings)
    notes: list[str] = []
    report = GapReport(lower=lower, upper=upper, tolerance=tolerance)
    if not report.consistent:
        notes.append("sandwich violated")
        logger.error(
            "Duality gap negative on %s: lower=%.12f upper=%.12f",
            model.label,
            lower.value,
            upper.value,
        )
    elif not report.closed:
        notes.append(f"family {family.name} too small to close the gap")
        logger.warning(
            "Family %s leaves gap %.3e > %.1e on %s",
            family.name,
            report.gap,
            tolerance,
            model.label,
        )
    return GapReport(lower=lower, upper=upper, tolerance=tolerance, notes=tuple(notes))


def _flat_distance(dt: float, spatial: float) -> DistanceResult:
    if dt >= 0.0 and dt >= spatial:
        return DistanceResult(
            value=math.sqrt(max(dt * dt - spatial * spatial, 0.0)), method=DistanceMethod.ANALYTIC
        )
    return DistanceResult(
        value=0.0, method=DistanceMethod.ANALYTIC, notes=("not causally related",)
    )


def _segment_lengths(
    model: SpacetimeModel, times: FloatArray, spatial: FloatArray
) -> tuple[FloatArray, FloatArray]:
    dt = np.diff(times)
    dx = np.diff(spatial, axis=0)
    scale = model.scale_at(0.5 * (times[1:] + times[:-1]))
    # |v|_h^2 for v = (1, dx/dt) at the segment midpoint
    speed_sq = scale**2 * np.sum(dx * dx, axis=1) / dt**2
    return dt * np.sqrt(np.clip(1.0 - speed_sq, 0.0, None)), speed_sq


def _total_length(model: SpacetimeModel, times: FloatArray, spatial: FloatArray) -> float:
    lengths, _ = _segment_lengths(model, times, spatial)
    return float(np.sum(lengths))


def _feasible(
    model: SpacetimeModel, times: FloatArray, spatial: FloatArray, margin: float
) -> bool:
    _, speed_sq = _segment_lengths(model, times, spatial)
    return bool(np.all(np.sqrt(speed_sq) <= 1.0 - margin + CAUSAL_SEGMENT_TOLERANCE))


def _conformal_line(
    model: SpacetimeModel, times: FloatArray, start: FloatArray, end: FloatArray
) -> FloatArray:
    # straight in conformal time, so causal whenever q lies in the causal future of p
    eta = model.conformal_time(times)
    fraction = (eta - eta[0]) / (eta[-1] - eta[0])
    return start[1:] + fraction[:, None] * (end[1:] - start[1:])


def _perturbed_start(
    model: SpacetimeModel,
    times: FloatArray,
    base: FloatArray,
    rng: np.random.Generator,
    settings: OracleSettings,
) -> FloatArray:
    span = float(times[-1] - times[0])
    noise = rng.normal(scale=settings.perturbation * span, size=base.shape)
    noise[0] = 0.0
    noise[-1] = 0.0
    projected = _project_into_cone(model, times, base + noise, settings.cone_margin)
    if projected is not None:
        return projected

    # blend back toward the feasible base curve
    weight = 0.5
    while weight > 1e-6:
        candidate = base + weight * noise
        if _feasible(model, times, candidate, settings.cone_margin):
            return candidate
        weight *= 0.5
    return base


def _project_into_cone(
    model: SpacetimeModel,
    times: FloatArray,
    spatial: FloatArray,
    margin: float,
    passes: int = 100,
) -> FloatArray | None:
    """Pull offending segment velocities back inside the cone; endpoints stay fixed."""
    nodes = spatial.copy()
    last = nodes.shape[0] - 1
    limit = 1.0 - margin
    dt = np.diff(times)
    scale = model.scale_at(0.5 * (times[1:] + times[:-1]))

    for _ in range(passes):
        moved = False
        for k in range(last):
            dx = nodes[k + 1] - nodes[k]
            speed = scale[k] * float(np.linalg.norm(dx)) / dt[k]
            if speed <= limit:
                continue
            excess = dx * (1.0 - limit / speed)
            if k == 0:
                nodes[k + 1] -= excess
            elif k + 1 == last:
                nodes[k] += excess
            else:
                nodes[k] += 0.5 * excess
                nodes[k + 1] -= 0.5 * excess
            moved = True
        if not moved:
            return nodes
    return nodes if _feasible(model, times, nodes, margin) else None


def _length_gradient(model: SpacetimeModel, times: FloatArray, spatial: FloatArray) -> FloatArray:
    dt = np.diff(times)
    dx = np.diff(spatial, axis=0)
    scale = model.scale_at(0.5 * (times[1:] + times[:-1]))
    lengths = np.sqrt(np.clip(dt**2 - scale**2 * np.sum(dx * dx, axis=1), 0.0, None))
    # d l_k / d dx_k = -a_k^2 dx_k / l_k
    partial = -(scale**2)[:, None] * dx / np.maximum(lengths, 1e-12)[:, None]
    gradient = np.zeros_like(spatial)
    gradient[1:-1] = partial[:-1] - partial[1:]
    return gradient


def _ascend(
    model: SpacetimeModel,
    times: FloatArray,
    spatial: FloatArray,
    settings: OracleSettings,
) -> tuple[FloatArray, float, int]:
    current = spatial
    length = _total_length(model, times, current)
    step = float(times[1] - times[0])
    iterations = 0
    gain = 0.0

    for iterations in range(1, settings.iterations + 1):
        gradient = _length_gradient(model, times, current)
        if not np.any(gradient):
            break
        improved = False
        while step > 1e-16:
            candidate = _project_into_cone(
                model, times, current + step * gradient, settings.cone_margin
            )
            if candidate is not None:
                candidate_length = _total_length(model, times, candidate)
                if candidate_length > length:
                    gain = candidate_length - length
                    current, length = candidate, candidate_length
                    improved = True
                    step *= 2.0
                    break
            step *= 0.5
        if not improved or gain < settings.step_tol:
            break
    return current, length, iterations


def _coordinate_refine(
    objective: Callable[[FloatArray], float],
    theta: FloatArray,
    family: SteepFamily,
    settings: VariationalSettings,
) -> tuple[FloatArray, float, int]:
    best = theta.copy()
    value = objective(best)
    step = settings.refine_step
    evaluations = 1
    while step > settings.refine_tol and evaluations < settings.max_refinements:
        improved = False
        for axis in range(family.dimension):
            for sign in (1.0, -1.0):
                trial = best.copy()
                trial[axis] = np.clip(
                    trial[axis] + sign * step, family.lower[axis], family.upper[axis]
                )
                trial_value = objective(trial)
                evaluations += 1
                if trial_value < value:
                    best, value, improved = trial, trial_value, True
        if not improved:
            step *= 0.5
    return best, value, evaluations
