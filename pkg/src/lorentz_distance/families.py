from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from numpy.typing import ArrayLike
from scipy.integrate import quad

from .causal import SampledFunction, gradient_steep_check, rectangular_grid
from .spacetime import CovectorSample, FloatArray, SpacetimeModel

logger = logging.getLogger(__name__)

STEEP_SLACK = 1e-8


class FamilyKind(StrEnum):
    BOOST = "boost"
    TILTED_TIME = "tilted-time"
    MOMENTUM = "momentum"


@dataclass(frozen=True, slots=True)
class SteepFamily:
    """Finite-dimensional family theta -> f_theta of candidate steep functions."""

    name: str
    lower: FloatArray
    upper: FloatArray
    value: Callable[[FloatArray, FloatArray], float]
    gradient: Callable[[FloatArray, FloatArray], FloatArray]
    grid: FloatArray
    # f_theta(q) - f_theta(p); families with an integral in their value override it
    increment: Callable[[FloatArray, FloatArray, FloatArray], float] | None = None

    @property
    def dimension(self) -> int:
        return int(self.lower.shape[0])

    @property
    def center(self) -> FloatArray:
        return 0.5 * (self.lower + self.upper)

    def difference(self, theta: FloatArray, p: FloatArray, q: FloatArray) -> float:
        if self.increment is not None:
            return self.increment(theta, p, q)
        return self.value(theta, q) - self.value(theta, p)

    def member(self, theta: FloatArray) -> SampledFunction:
        return SampledFunction(
            value=lambda point: self.value(theta, point),
            gradient=lambda point: self.gradient(theta, point),
            grid=self.grid,
            name=f"{self.name}{np.round(theta, 6).tolist()}",
        )

    def is_steep(
        self, model: SpacetimeModel, theta: FloatArray, slack: float = STEEP_SLACK
    ) -> bool:
        for point in self.grid:
            sample = CovectorSample.of(point, self.gradient(theta, point))
            if not gradient_steep_check(model, sample, tol=slack).steep:
                return False
        return True


def boost_family(n: int, grid: FloatArray, bound: float = 5.0) -> SteepFamily:
    """f(t, x) = cosh|z| t - sinh|z| (z/|z|).x, exactly steep on Minkowski space."""

    def value(theta: FloatArray, point: FloatArray) -> float:
        rapidity = float(np.linalg.norm(theta))
        return math.cosh(rapidity) * float(point[0]) - _sinhc(rapidity) * float(theta @ point[1:])

    def gradient(theta: FloatArray, point: FloatArray) -> FloatArray:
        rapidity = float(np.linalg.norm(theta))
        return np.concatenate(([math.cosh(rapidity)], -_sinhc(rapidity) * theta))

    return SteepFamily(
        name=FamilyKind.BOOST.value,
        lower=np.full(n - 1, -bound),
        upper=np.full(n - 1, bound),
        value=value,
        gradient=gradient,
        grid=_checked_grid(grid, n),
    )


def tilted_time_family(n: int, grid: FloatArray, bound: float = 1.0) -> SteepFamily:
    def value(theta: FloatArray, point: FloatArray) -> float:
        return float(point[0] + theta @ point[1:])

    def gradient(theta: FloatArray, point: FloatArray) -> FloatArray:
        return np.concatenate(([1.0], theta))

    return SteepFamily(
        name=FamilyKind.TILTED_TIME.value,
        lower=np.full(n - 1, -bound),
        upper=np.full(n - 1, bound),
        value=value,
        gradient=gradient,
        grid=_checked_grid(grid, n),
    )


def momentum_family(model: SpacetimeModel, grid: FloatArray, bound: float = 50.0) -> SteepFamily:
    """f(t, x) = int_{t0}^{t} sqrt(1 + |c|^2 / a(s)^2) ds - c.x for comoving momentum c.

    Every member satisfies g(grad f, grad f) = -1, and on spatially flat charts the
    infimum over c equals the Lorentzian distance.
    """
    t_ref = model.t_domain[0] if model.t_domain is not None else 0.0

    def rate(theta: FloatArray, t: float) -> float:
        scale = float(model.scale_at(t))
        return math.sqrt(1.0 + float(theta @ theta) / scale**2)

    def elapsed(theta: FloatArray, start: float, end: float) -> float:
        if model.scale_factor is None:
            return rate(theta, 0.0) * (end - start)
        integral, _ = quad(lambda s: rate(theta, s), start, end, epsabs=1e-13, epsrel=1e-13)
        return float(integral)

    def value(theta: FloatArray, point: FloatArray) -> float:
        return elapsed(theta, t_ref, float(point[0])) - float(theta @ point[1:])

    def gradient(theta: FloatArray, point: FloatArray) -> FloatArray:
        return np.concatenate(([rate(theta, float(point[0]))], -theta))

    def increment(theta: FloatArray, p: FloatArray, q: FloatArray) -> float:
        return elapsed(theta, float(p[0]), float(q[0])) - float(theta @ (q[1:] - p[1:]))

    return SteepFamily(
        name=FamilyKind.MOMENTUM.value,
        lower=np.full(model.n - 1, -bound),
        upper=np.full(model.n - 1, bound),
        value=value,
        gradient=gradient,
        grid=_checked_grid(grid, model.n),
        increment=increment,
    )


def build_family(
    kind: FamilyKind, model: SpacetimeModel, grid: FloatArray, bound: float | None = None
) -> SteepFamily:
    options: dict[str, float] = {} if bound is None else {"bound": bound}
    match kind:
        case FamilyKind.BOOST:
            return boost_family(model.n, grid, **options)
        case FamilyKind.TILTED_TIME:
            return tilted_time_family(model.n, grid, **options)
        case FamilyKind.MOMENTUM:
            return momentum_family(model, grid, **options)


def default_grid(
    model: SpacetimeModel, p: ArrayLike, q: ArrayLike, per_axis: int = 3
) -> FloatArray:
    """Lattice spanning the box between p and q, clipped to the model's working domain."""
    start = np.asarray(p, dtype=np.float64)
    end = np.asarray(q, dtype=np.float64)
    lower = np.minimum(start, end)
    upper = np.maximum(start, end)
    if model.t_domain is not None:
        lower[0] = max(lower[0], model.t_domain[0])
        upper[0] = min(upper[0], model.t_domain[1])
    return rectangular_grid(lower, upper, np.full(model.n, per_axis))


def _checked_grid(grid: FloatArray, n: int) -> FloatArray:
    points = np.atleast_2d(np.asarray(grid, dtype=np.float64))
    if points.size == 0 or points.shape[1] != n:
        raise ValueError(f"Validation grid must be a non-empty array of {n}-dimensional points")
    return points


def _sinhc(x: float) -> float:
    # sinh(x) / x, continuous at 0
    if abs(x) < 1e-8:
        return 1.0
    return math.sinh(x) / x
