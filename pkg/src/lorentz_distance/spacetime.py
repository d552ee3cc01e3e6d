from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import cholesky, solve_triangular

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

NULL_TOLERANCE = 1e-10
SPATIAL_SAMPLE_RANGE = (-5.0, 5.0)


class DomainError(ValueError):
    pass


class ModelKind(StrEnum):
    MINKOWSKI = "minkowski"
    FLRW = "flrw"


class ScaleForm(StrEnum):
    CONSTANT = "constant"
    LINEAR = "linear"
    POWER = "power"


class CausalCharacter(StrEnum):
    TIMELIKE = "timelike"
    NULL = "null"
    SPACELIKE = "spacelike"
    ZERO = "zero"


class TimeOrientation(StrEnum):
    PAST_DIRECTED = "past-directed"
    FUTURE_DIRECTED = "future-directed"
    NONE = "none"


class CausalRelation(StrEnum):
    CHRONOLOGICAL = "chronological"
    CAUSAL_NULL = "causal-null"
    UNRELATED = "unrelated"

    @property
    def is_causal(self) -> bool:
        return self is not CausalRelation.UNRELATED


@dataclass(frozen=True, slots=True)
class ScaleFactor:
    """Whitelisted a(t): constant c, linear c*t + offset, or power c*t^exponent."""

    form: ScaleForm
    coefficient: float = 1.0
    offset: float = 0.0
    exponent: float = 1.0

    def value(self, t: ArrayLike) -> FloatArray:
        t = np.asarray(t, dtype=np.float64)
        match self.form:
            case ScaleForm.CONSTANT:
                return np.full_like(t, self.coefficient)
            case ScaleForm.LINEAR:
                return self.coefficient * t + self.offset
            case ScaleForm.POWER:
                return self.coefficient * np.power(t, self.exponent)

    def derivative(self, t: ArrayLike) -> FloatArray:
        t = np.asarray(t, dtype=np.float64)
        match self.form:
            case ScaleForm.CONSTANT:
                return np.zeros_like(t)
            case ScaleForm.LINEAR:
                return np.full_like(t, self.coefficient)
            case ScaleForm.POWER:
                return self.coefficient * self.exponent * np.power(t, self.exponent - 1.0)

    def conformal_time(self, t: ArrayLike) -> FloatArray:
        # eta(t) = int dt / a(t), fixed up to an additive constant
        t = np.asarray(t, dtype=np.float64)
        match self.form:
            case ScaleForm.CONSTANT:
                return t / self.coefficient
            case ScaleForm.LINEAR:
                if self.coefficient == 0.0:
                    return t / self.offset
                return np.log(np.abs(self.coefficient * t + self.offset)) / self.coefficient
            case ScaleForm.POWER:
                if self.exponent == 1.0:
                    return np.log(t) / self.coefficient
                power = 1.0 - self.exponent
                return np.power(t, power) / (self.coefficient * power)

    def describe(self) -> str:
        match self.form:
            case ScaleForm.CONSTANT:
                return f"{self.coefficient:g}"
            case ScaleForm.LINEAR:
                if self.offset == 0.0:
                    return f"{self.coefficient:g}*t"
                return f"{self.coefficient:g}*t{self.offset:+g}"
            case ScaleForm.POWER:
                return f"{self.coefficient:g}*t^{self.exponent:g}"


@dataclass(frozen=True, slots=True)
class SpacetimeModel:
    n: int
    kind: ModelKind
    scale_factor: ScaleFactor | None = None
    t_domain: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.n < 2:
            raise DomainError(f"Spacetime dimension must be >= 2, got {self.n}")
        if self.kind is ModelKind.MINKOWSKI:
            if self.scale_factor is not None:
                raise DomainError("Minkowski models take no scale factor")
            return

        if self.scale_factor is None or self.t_domain is None:
            raise DomainError("FLRW models need a scale factor and a t-domain")
        lower, upper = self.t_domain
        if not lower < upper:
            raise DomainError(f"FLRW t-domain must be an increasing interval, got {self.t_domain}")
        if self.scale_factor.form is ScaleForm.POWER and lower <= 0.0:
            raise DomainError("Power-law scale factors need a t-domain with t > 0")
        # all whitelisted forms are monotone, so checking both ends covers the interval
        ends = self.scale_factor.value(np.array([lower, upper]))
        if not np.all(ends > 0.0):
            raise DomainError(
                f"Scale factor a(t)={self.scale_factor.describe()} must be > 0 on {self.t_domain}"
            )

    @property
    def label(self) -> str:
        if self.kind is ModelKind.MINKOWSKI or self.scale_factor is None:
            return f"{self.kind.value}"
        return f"{self.kind.value}[a={self.scale_factor.describe()}]"

    def validate_point(self, point: ArrayLike) -> FloatArray:
        coordinates = np.asarray(point, dtype=np.float64)
        if coordinates.shape != (self.n,):
            raise DomainError(
                f"Expected a point with {self.n} coordinates, got shape {coordinates.shape}"
            )
        if not np.all(np.isfinite(coordinates)):
            raise DomainError(f"Point has non-finite coordinates: {coordinates.tolist()}")
        if self.t_domain is not None:
            lower, upper = self.t_domain
            if not lower <= coordinates[0] <= upper:
                raise DomainError(
                    f"t={coordinates[0]:g} is outside the working domain {self.t_domain}"
                )
        return coordinates

    def scale_at(self, t: ArrayLike) -> FloatArray:
        if self.scale_factor is None:
            return np.ones_like(np.asarray(t, dtype=np.float64))
        scale = self.scale_factor.value(t)
        if np.any(scale <= 0.0):
            raise DomainError(
                f"Scale factor a(t)={self.scale_factor.describe()} is not positive at t"
            )
        return scale

    def conformal_time(self, t: ArrayLike) -> FloatArray:
        if self.scale_factor is None:
            return np.asarray(t, dtype=np.float64)
        return self.scale_factor.conformal_time(t)

    def sample_point(self, rng: np.random.Generator) -> FloatArray:
        lower, upper = self.t_domain if self.t_domain is not None else SPATIAL_SAMPLE_RANGE
        t = rng.uniform(lower, upper)
        spatial = rng.uniform(*SPATIAL_SAMPLE_RANGE, size=self.n - 1)
        return np.concatenate(([t], spatial))


@dataclass(frozen=True, slots=True)
class FrameAtPoint:
    point: FloatArray
    # e[mu, a] = e^mu_a
    e: FloatArray


@dataclass(frozen=True, slots=True)
class CovectorSample:
    point: FloatArray
    components: FloatArray

    @classmethod
    def of(cls, point: ArrayLike, components: ArrayLike) -> CovectorSample:
        sample = cls(
            point=np.asarray(point, dtype=np.float64),
            components=np.asarray(components, dtype=np.float64),
        )
        if sample.point.shape != sample.components.shape:
            raise DomainError(
                f"Point {sample.point.shape} and covector {sample.components.shape} differ in size"
            )
        if not np.all(np.isfinite(sample.components)):
            raise DomainError(f"Covector has non-finite entries: {sample.components.tolist()}")
        return sample


@dataclass(frozen=True, slots=True)
class CovectorClass:
    character: CausalCharacter
    orientation: TimeOrientation


def minkowski(n: int) -> SpacetimeModel:
    return SpacetimeModel(n=n, kind=ModelKind.MINKOWSKI)


def flrw(n: int, scale_factor: ScaleFactor, t_domain: tuple[float, float]) -> SpacetimeModel:
    return SpacetimeModel(n=n, kind=ModelKind.FLRW, scale_factor=scale_factor, t_domain=t_domain)


def metric_at(model: SpacetimeModel, point: ArrayLike) -> FloatArray:
    coordinates = model.validate_point(point)
    scale = float(model.scale_at(coordinates[0]))
    return np.diag([-1.0] + [scale**2] * (model.n - 1))


def inverse_metric_at(model: SpacetimeModel, point: ArrayLike) -> FloatArray:
    coordinates = model.validate_point(point)
    scale = float(model.scale_at(coordinates[0]))
    return np.diag([-1.0] + [scale**-2] * (model.n - 1))


def frame_at(model: SpacetimeModel, point: ArrayLike) -> FrameAtPoint:
    coordinates = model.validate_point(point)
    metric = metric_at(model, coordinates)
    if metric[0, 0] != -1.0 or np.any(metric[0, 1:] != 0.0):
        raise DomainError("Only charts with g_00 = -1 and g_0i = 0 are supported")

    # spatial block h = L L^T, so e_s = L^{-T} gives e_s^T h e_s = 1
    lower = cholesky(metric[1:, 1:], lower=True)
    spatial = solve_triangular(lower.T, np.eye(model.n - 1), lower=False)

    e = np.zeros((model.n, model.n))
    e[0, 0] = 1.0
    e[1:, 1:] = spatial
    return FrameAtPoint(point=coordinates, e=e)


def inner_product(model: SpacetimeModel, point: ArrayLike, v: ArrayLike, w: ArrayLike) -> float:
    metric = metric_at(model, point)
    return float(np.asarray(v, dtype=np.float64) @ metric @ np.asarray(w, dtype=np.float64))


def covector_norm_sq(model: SpacetimeModel, sample: CovectorSample) -> float:
    inverse = inverse_metric_at(model, sample.point)
    return float(sample.components @ inverse @ sample.components)


def spatial_norm_sq(model: SpacetimeModel, sample: CovectorSample) -> float:
    inverse = inverse_metric_at(model, sample.point)
    spatial = sample.components[1:]
    return float(spatial @ inverse[1:, 1:] @ spatial)


def classify_covector(model: SpacetimeModel, sample: CovectorSample) -> CovectorClass:
    if not np.any(sample.components):
        return CovectorClass(CausalCharacter.ZERO, TimeOrientation.NONE)

    norm_sq = covector_norm_sq(model, sample)
    if norm_sq > NULL_TOLERANCE:
        return CovectorClass(CausalCharacter.SPACELIKE, TimeOrientation.NONE)

    character = CausalCharacter.NULL if norm_sq >= -NULL_TOLERANCE else CausalCharacter.TIMELIKE
    # in the normalized gauge (grad f)^0 = -f_,0
    f_0 = sample.components[0]
    if abs(f_0) <= NULL_TOLERANCE:
        orientation = TimeOrientation.NONE
    elif f_0 > 0.0:
        orientation = TimeOrientation.PAST_DIRECTED
    else:
        orientation = TimeOrientation.FUTURE_DIRECTED
    return CovectorClass(character, orientation)


def causal_relation(model: SpacetimeModel, p: ArrayLike, q: ArrayLike) -> CausalRelation:
    start = model.validate_point(p)
    end = model.validate_point(q)
    if np.allclose(start, end, rtol=0.0, atol=NULL_TOLERANCE):
        return CausalRelation.CAUSAL_NULL
    if end[0] <= start[0]:
        return CausalRelation.UNRELATED

    conformal_span = float(model.conformal_time(end[0]) - model.conformal_time(start[0]))
    spatial_span = float(np.linalg.norm(end[1:] - start[1:]))
    if math.isclose(spatial_span, conformal_span, rel_tol=0.0, abs_tol=NULL_TOLERANCE):
        return CausalRelation.CAUSAL_NULL
    if spatial_span < conformal_span:
        return CausalRelation.CHRONOLOGICAL
    return CausalRelation.UNRELATED
