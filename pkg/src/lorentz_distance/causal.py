from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
from numpy.typing import ArrayLike
from scipy.linalg import eigvalsh

from .clifford import (
    CliffordModule,
    ComplexMatrix,
    clifford_action,
    extend_even,
    extend_odd,
    steep_operators,
)
from .spacetime import (
    CovectorSample,
    FloatArray,
    FrameAtPoint,
    SpacetimeModel,
    covector_norm_sq,
    frame_at,
    spatial_norm_sq,
)

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-9
BOUNDARY_BAND_FACTOR = 10.0
COVECTOR_RANGE = (-3.0, 3.0)
_HERMITIAN_TOLERANCE = 1e-12


class OperatorError(RuntimeError):
    pass


class GradientConsistencyError(ValueError):
    pass


class Route(StrEnum):
    GRADIENT = "gradient"
    OPERATOR = "operator"


@dataclass(frozen=True, slots=True)
class CausalVerdict:
    causal: bool
    margin: float
    route: Route
    # None when only causality was evaluated
    steep: bool | None = None

    def __post_init__(self) -> None:
        if self.steep and not self.causal:
            raise ValueError("A steep verdict must also be causal")


@dataclass(frozen=True, slots=True)
class SampledFunction:
    value: Callable[[FloatArray], float]
    gradient: Callable[[FloatArray], FloatArray]
    grid: FloatArray
    name: str = "f"

    def check_consistency(self, rel_tol: float = 1e-5, step: float = 1e-6) -> float:
        """Largest relative mismatch between the declared gradient and central differences."""
        worst = 0.0
        for point in self.grid:
            declared = np.asarray(self.gradient(point), dtype=np.float64)
            numeric = np.empty_like(declared)
            for axis in range(point.shape[0]):
                offset = np.zeros_like(point)
                offset[axis] = step
                forward = self.value(point + offset)
                backward = self.value(point - offset)
                numeric[axis] = (forward - backward) / (2 * step)
            scale = max(1.0, float(np.max(np.abs(declared))))
            mismatch = float(np.max(np.abs(declared - numeric))) / scale
            worst = max(worst, mismatch)
            if mismatch > rel_tol:
                logger.error(
                    "Gradient of %s inconsistent at %s (declared=%s numeric=%s)",
                    self.name,
                    point.tolist(),
                    declared.tolist(),
                    numeric.tolist(),
                )
                raise GradientConsistencyError(
                    f"Gradient of {self.name} disagrees with its values at {point.tolist()} "
                    f"(relative mismatch {mismatch:.2e} > {rel_tol:.0e})"
                )
        return worst


@dataclass(frozen=True, slots=True)
class SampleDisagreement:
    point: tuple[float, ...]
    components: tuple[float, ...]
    verdict: str
    gradient_margin: float
    operator_margin: float


@dataclass(slots=True)
class EquivalenceReport:
    n: int
    model: str
    trials: int
    seed: int
    tol: float
    causal_agreements: int = 0
    steep_agreements: int = 0
    causal_boundary: int = 0
    steep_boundary: int = 0
    max_spectrum_discrepancy: float = 0.0
    max_extension_deviation: float = 0.0
    split_mismatches: int = 0
    disagreements: list[SampleDisagreement] = field(default_factory=list)

    @property
    def causal_checked(self) -> int:
        return self.trials - self.causal_boundary

    @property
    def steep_checked(self) -> int:
        return self.trials - self.steep_boundary

    @property
    def passed(self) -> bool:
        return not self.disagreements and self.split_mismatches == 0


def gradient_causal_check(
    model: SpacetimeModel, sample: CovectorSample, tol: float = DEFAULT_TOLERANCE
) -> CausalVerdict:
    norm_sq = covector_norm_sq(model, sample)
    orientation = -float(sample.components[0])
    return CausalVerdict(
        causal=norm_sq <= tol and orientation <= tol,
        margin=max(norm_sq, orientation),
        route=Route.GRADIENT,
    )


def gradient_steep_check(
    model: SpacetimeModel, sample: CovectorSample, tol: float = DEFAULT_TOLERANCE
) -> CausalVerdict:
    norm_sq = covector_norm_sq(model, sample)
    orientation = -float(sample.components[0])
    causal = norm_sq <= tol and orientation <= tol
    return CausalVerdict(
        causal=causal,
        steep=causal and norm_sq <= -1.0 + tol,
        margin=max(norm_sq + 1.0, orientation),
        route=Route.GRADIENT,
    )


def operator_causal_check(
    cliff: CliffordModule,
    model: SpacetimeModel,
    sample: CovectorSample,
    tol: float = DEFAULT_TOLERANCE,
) -> CausalVerdict:
    frame = _frame_for(cliff, model, sample)
    largest = largest_eigenvalue(clifford_action(cliff, frame, sample.components))
    return CausalVerdict(causal=largest <= tol, margin=largest, route=Route.OPERATOR)


def operator_steep_check(
    cliff: CliffordModule,
    model: SpacetimeModel,
    sample: CovectorSample,
    tol: float = DEFAULT_TOLERANCE,
) -> CausalVerdict:
    frame = _frame_for(cliff, model, sample)
    causal_margin = largest_eigenvalue(clifford_action(cliff, frame, sample.components))
    steep_margin = max(
        largest_eigenvalue(matrix) for matrix in steep_operators(cliff, frame, sample.components)
    )
    return CausalVerdict(
        causal=causal_margin <= tol,
        steep=steep_margin <= tol,
        margin=steep_margin,
        route=Route.OPERATOR,
    )


def largest_eigenvalue(matrix: ComplexMatrix) -> float:
    deviation = float(np.max(np.abs(matrix - matrix.conj().T)))
    if deviation > _HERMITIAN_TOLERANCE:
        logger.error("Operator is not Hermitian (deviation=%.3e)", deviation)
        raise OperatorError(
            f"Expected a Hermitian operator, deviation {deviation:.3e}; "
            "the Clifford module is likely malformed"
        )
    return float(eigvalsh(matrix)[-1])


def predicted_spectrum(
    model: SpacetimeModel, sample: CovectorSample, fiber_dim: int
) -> FloatArray:
    # -f_,0 +/- sqrt(g^ij f_,i f_,j), each with multiplicity fiber_dim / 2
    s = math.sqrt(max(spatial_norm_sq(model, sample), 0.0))
    f_0 = float(sample.components[0])
    half = fiber_dim // 2
    return np.sort(np.array([-f_0 - s] * half + [-f_0 + s] * half))


def equivalence_scan(
    cliff: CliffordModule,
    model: SpacetimeModel,
    trials: int,
    seed: int,
    tol: float = DEFAULT_TOLERANCE,
) -> EquivalenceReport:
    if cliff.n != model.n:
        raise OperatorError(f"Clifford module n={cliff.n} does not match model n={model.n}")

    rng = np.random.default_rng(seed)
    band = BOUNDARY_BAND_FACTOR * tol
    report = EquivalenceReport(n=model.n, model=model.label, trials=trials, seed=seed, tol=tol)
    extended = extend_even(cliff, sign=1) if cliff.is_even else extend_odd(cliff)

    for _ in range(trials):
        point = model.sample_point(rng)
        sample = CovectorSample.of(point, rng.uniform(*COVECTOR_RANGE, size=model.n))
        frame = frame_at(model, point)

        by_gradient = gradient_steep_check(model, sample, tol)
        causal_by_gradient = gradient_causal_check(model, sample, tol)
        causal_by_operator = operator_causal_check(cliff, model, sample, tol)
        by_operator = operator_steep_check(cliff, model, sample, tol)

        if _near_boundary(causal_by_gradient.margin, causal_by_operator.margin, band):
            report.causal_boundary += 1
        elif causal_by_gradient.causal == causal_by_operator.causal:
            report.causal_agreements += 1
        else:
            report.disagreements.append(
                _disagreement(sample, "causal", causal_by_gradient, causal_by_operator)
            )

        if _near_boundary(by_gradient.margin, by_operator.margin, band):
            report.steep_boundary += 1
        elif by_gradient.steep == by_operator.steep:
            report.steep_agreements += 1
        else:
            report.disagreements.append(_disagreement(sample, "steep", by_gradient, by_operator))

        spectrum = eigvalsh(clifford_action(cliff, frame, sample.components))
        expected = predicted_spectrum(model, sample, cliff.fiber_dim)
        report.max_spectrum_discrepancy = max(
            report.max_spectrum_discrepancy, float(np.max(np.abs(spectrum - expected)))
        )

        extended_operator = extended_action(extended, frame, sample.components)
        if cliff.is_even:
            (steep_operator,) = steep_operators(cliff, frame, sample.components)
            report.max_extension_deviation = max(
                report.max_extension_deviation,
                float(np.max(np.abs(steep_operator - extended_operator))),
            )
        elif abs(by_operator.margin) > band:
            split_nsd = by_operator.margin <= tol
            doubled_nsd = largest_eigenvalue(extended_operator) <= tol
            if split_nsd != doubled_nsd:
                report.split_mismatches += 1
                logger.warning(
                    "Odd split mismatch at point=%s df=%s",
                    point.tolist(),
                    sample.components.tolist(),
                )

    for disagreement in report.disagreements:
        logger.error(
            "Route disagreement (%s) at point=%s df=%s gradient_margin=%.3e operator_margin=%.3e",
            disagreement.verdict,
            list(disagreement.point),
            list(disagreement.components),
            disagreement.gradient_margin,
            disagreement.operator_margin,
        )
    logger.info(
        "Equivalence scan model=%s n=%d trials=%d causal_agree=%d/%d steep_agree=%d/%d",
        report.model,
        report.n,
        trials,
        report.causal_agreements,
        report.causal_checked,
        report.steep_agreements,
        report.steep_checked,
    )
    return report


def extended_action(
    extended: CliffordModule, frame: FrameAtPoint, df: ArrayLike
) -> ComplexMatrix:
    """J~[D~, f~] for f~ = f - x_n on the product with one extra flat spatial dimension."""
    n = frame.e.shape[0]
    e = np.zeros((n + 1, n + 1))
    e[:n, :n] = frame.e
    e[n, n] = 1.0
    extended_frame = FrameAtPoint(point=np.append(frame.point, 0.0), e=e)
    components = np.append(np.asarray(df, dtype=np.float64), -1.0)
    return clifford_action(extended, extended_frame, components)


def rectangular_grid(
    lower: ArrayLike, upper: ArrayLike, counts: ArrayLike
) -> FloatArray:
    lows = np.asarray(lower, dtype=np.float64)
    highs = np.asarray(upper, dtype=np.float64)
    sizes = np.asarray(counts, dtype=np.int64)
    if not lows.shape == highs.shape == sizes.shape:
        raise ValueError("Grid bounds and counts must have the same length")
    if np.any(sizes < 1):
        raise ValueError("Every grid axis needs at least one point")
    axes = [np.linspace(lo, hi, int(size)) for lo, hi, size in zip(lows, highs, sizes, strict=True)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([axis.ravel() for axis in mesh], axis=-1)


def function_causal_on_grid(
    cliff: CliffordModule | None,
    model: SpacetimeModel,
    f: SampledFunction,
    *,
    route: Route = Route.OPERATOR,
    tol: float = DEFAULT_TOLERANCE,
    consistency_tol: float = 1e-5,
) -> CausalVerdict:
    if f.grid.size == 0:
        raise ValueError(f"Function {f.name} has an empty grid")
    if route is Route.OPERATOR and cliff is None:
        raise OperatorError("The operator route needs a Clifford module")
    f.check_consistency(rel_tol=consistency_tol)

    causal = True
    steep = True
    worst = -math.inf
    for point in f.grid:
        sample = CovectorSample.of(point, f.gradient(point))
        if route is Route.OPERATOR and cliff is not None:
            verdict = operator_steep_check(cliff, model, sample, tol)
        else:
            verdict = gradient_steep_check(model, sample, tol)
        causal = causal and verdict.causal
        steep = steep and bool(verdict.steep)
        worst = max(worst, verdict.margin)

    logger.info(
        "Grid check of %s on %s route=%s causal=%s steep=%s margin=%.3e",
        f.name,
        model.label,
        route.value,
        causal,
        steep,
        worst,
    )
    return CausalVerdict(causal=causal, steep=steep and causal, margin=worst, route=route)


def _frame_for(
    cliff: CliffordModule, model: SpacetimeModel, sample: CovectorSample
) -> FrameAtPoint:
    if cliff.n != model.n:
        raise OperatorError(f"Clifford module n={cliff.n} does not match model n={model.n}")
    return frame_at(model, sample.point)


def _near_boundary(gradient_margin: float, operator_margin: float, band: float) -> bool:
    return abs(gradient_margin) <= band or abs(operator_margin) <= band


def _disagreement(
    sample: CovectorSample, verdict: str, by_gradient: CausalVerdict, by_operator: CausalVerdict
) -> SampleDisagreement:
    return SampleDisagreement(
        point=tuple(float(x) for x in sample.point),
        components=tuple(float(x) for x in sample.components),
        verdict=verdict,
        gradient_margin=by_gradient.margin,
        operator_margin=by_operator.margin,
    )
