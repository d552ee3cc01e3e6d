from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from lorentz_distance.distance import analytic_distance
from lorentz_distance.spacetime import (
    CausalCharacter,
    CausalRelation,
    CovectorSample,
    DomainError,
    ScaleFactor,
    ScaleForm,
    SpacetimeModel,
    TimeOrientation,
    causal_relation,
    classify_covector,
    covector_norm_sq,
    flrw,
    frame_at,
    inner_product,
    inverse_metric_at,
    metric_at,
    minkowski,
)

LINEAR = ScaleFactor(form=ScaleForm.LINEAR)


def test_minkowski_requires_two_dimensions() -> None:
    with pytest.raises(DomainError, match=">= 2"):
        minkowski(1)


def test_flrw_rejects_non_positive_scale_factor() -> None:
    with pytest.raises(DomainError, match="must be > 0"):
        flrw(2, LINEAR, (-1.0, 1.0))
    with pytest.raises(DomainError, match="t > 0"):
        flrw(2, ScaleFactor(form=ScaleForm.POWER, exponent=0.5), (0.0, 1.0))
    with pytest.raises(DomainError, match="increasing"):
        flrw(2, LINEAR, (2.0, 1.0))


def test_scale_factor_forms() -> None:
    t = np.array([1.0, 4.0])

    assert_allclose(ScaleFactor(ScaleForm.CONSTANT, coefficient=2.0).value(t), [2.0, 2.0])
    assert_allclose(ScaleFactor(ScaleForm.LINEAR, 0.5, offset=1.0).value(t), [1.5, 3.0])
    assert_allclose(ScaleFactor(ScaleForm.POWER, 2.0, exponent=0.5).value(t), [2.0, 4.0])
    assert_allclose(ScaleFactor(ScaleForm.POWER, 2.0, exponent=0.5).derivative(t), [1.0, 0.5])
    assert ScaleFactor(ScaleForm.LINEAR, 2.0, offset=-1.0).describe() == "2*t-1"


def test_conformal_time_matches_integral_of_inverse_scale() -> None:
    model = flrw(2, LINEAR, (1.0, 10.0))
    power = ScaleFactor(ScaleForm.POWER, 1.0, exponent=0.5)

    assert_allclose(model.conformal_time(math.e) - model.conformal_time(1.0), 1.0)
    # int_1^4 t^{-1/2} dt = 2
    assert_allclose(power.conformal_time(4.0) - power.conformal_time(1.0), 2.0)


def test_frame_orthonormalizes_the_flrw_metric() -> None:
    model = flrw(3, LINEAR, (1.0, 10.0))
    point = [2.0, 0.3, -1.0]

    frame = frame_at(model, point)
    metric = metric_at(model, point)

    assert_allclose(frame.e.T @ metric @ frame.e, np.diag([-1.0, 1.0, 1.0]), atol=1e-14)
    assert_allclose(frame.e, np.diag([1.0, 0.5, 0.5]))
    assert_allclose(metric @ inverse_metric_at(model, point), np.eye(3), atol=1e-14)


def test_points_outside_the_domain_are_rejected() -> None:
    model = flrw(2, LINEAR, (1.0, 10.0))

    with pytest.raises(DomainError, match="outside the working domain"):
        model.validate_point([0.5, 0.0])
    with pytest.raises(DomainError, match="coordinates"):
        model.validate_point([2.0, 0.0, 0.0])


@pytest.mark.parametrize(
    ("q", "expected"),
    [
        ([2.0, 1.0], CausalRelation.CHRONOLOGICAL),
        ([1.0, 1.0], CausalRelation.CAUSAL_NULL),
        ([1.0, 2.0], CausalRelation.UNRELATED),
        ([-2.0, 0.0], CausalRelation.UNRELATED),
        ([0.0, 0.0], CausalRelation.CAUSAL_NULL),
    ],
)
def test_minkowski_causal_relation(q: list[float], expected: CausalRelation) -> None:
    assert causal_relation(minkowski(2), [0.0, 0.0], q) is expected


def test_flrw_causal_relation_uses_conformal_time() -> None:
    model = flrw(2, LINEAR, (1.0, 10.0))

    assert causal_relation(model, [1.0, 0.0], [math.e, 1.0]) is CausalRelation.CAUSAL_NULL
    assert causal_relation(model, [1.0, 0.0], [math.e, 0.5]) is CausalRelation.CHRONOLOGICAL
    assert causal_relation(model, [1.0, 0.0], [2.0, 0.9]) is CausalRelation.UNRELATED
    assert not CausalRelation.UNRELATED.is_causal


@pytest.mark.parametrize(
    ("components", "character", "orientation"),
    [
        ([1.0, 0.0], CausalCharacter.TIMELIKE, TimeOrientation.PAST_DIRECTED),
        ([-1.0, 0.5], CausalCharacter.TIMELIKE, TimeOrientation.FUTURE_DIRECTED),
        ([1.0, 1.0], CausalCharacter.NULL, TimeOrientation.PAST_DIRECTED),
        ([0.0, 1.0], CausalCharacter.SPACELIKE, TimeOrientation.NONE),
        ([0.0, 0.0], CausalCharacter.ZERO, TimeOrientation.NONE),
    ],
)
def test_classify_covector(
    components: list[float], character: CausalCharacter, orientation: TimeOrientation
) -> None:
    sample = CovectorSample.of([0.0, 0.0], components)

    covector_class = classify_covector(minkowski(2), sample)

    assert covector_class.character is character
    assert covector_class.orientation is orientation


def test_covector_norm_scales_with_inverse_metric() -> None:
    model = flrw(2, LINEAR, (1.0, 10.0))
    sample = CovectorSample.of([2.0, 0.0], [1.0, 2.0])

    assert covector_norm_sq(model, sample) == pytest.approx(-1.0 + 4.0 / 4.0)


def test_covector_sample_rejects_mismatched_shapes() -> None:
    with pytest.raises(DomainError, match="differ in size"):
        CovectorSample.of([0.0, 0.0], [1.0, 0.0, 0.0])


def test_reverse_cauchy_schwarz_for_timelike_vectors() -> None:
    model = flrw(4, LINEAR, (1.0, 10.0))
    rng = np.random.default_rng(11)

    for _ in range(200):
        point = model.sample_point(rng)
        scale = float(model.scale_at(point[0]))
        vectors = []
        for _ in range(2):
            spatial = rng.uniform(-1.0, 1.0, size=3)
            # |x|_h < t keeps the vector timelike
            speed = float(np.linalg.norm(spatial)) * scale
            vectors.append(np.concatenate(([speed + rng.uniform(0.1, 2.0)], spatial)))
        v, w = vectors

        lhs = abs(inner_product(model, point, v, w))
        rhs = math.sqrt(-inner_product(model, point, v, v)) * math.sqrt(
            -inner_product(model, point, w, w)
        )
        assert lhs >= rhs - 1e-12


def test_sample_point_stays_in_domain() -> None:
    model = flrw(3, LINEAR, (1.0, 2.0))
    rng = np.random.default_rng(0)

    points = np.array([model.sample_point(rng) for _ in range(100)])

    assert np.all((points[:, 0] >= 1.0) & (points[:, 0] <= 2.0))
    assert np.all(np.abs(points[:, 1:]) <= 5.0)


@pytest.mark.parametrize(
    "model",
    [
        minkowski(4),
        flrw(4, LINEAR, (1.0, 10.0)),
        flrw(3, ScaleFactor(ScaleForm.POWER, 1.0, exponent=2.0 / 3.0), (0.5, 8.0)),
        flrw(2, ScaleFactor(ScaleForm.CONSTANT, coefficient=2.0), (-5.0, 5.0)),
    ],
    ids=lambda model: model.label,
)
def test_frame_is_orthonormal_at_random_points(model: SpacetimeModel) -> None:
    rng = np.random.default_rng(model.n)
    eta = np.diag([-1.0] + [1.0] * (model.n - 1))

    for _ in range(1000):
        point = model.sample_point(rng)
        e = frame_at(model, point).e

        assert_allclose(e.T @ metric_at(model, point) @ e, eta, rtol=0.0, atol=1e-10)


def test_negated_covector_keeps_character_and_flips_orientation() -> None:
    model = flrw(3, LINEAR, (1.0, 10.0))
    rng = np.random.default_rng(17)
    flipped = {
        TimeOrientation.PAST_DIRECTED: TimeOrientation.FUTURE_DIRECTED,
        TimeOrientation.FUTURE_DIRECTED: TimeOrientation.PAST_DIRECTED,
        TimeOrientation.NONE: TimeOrientation.NONE,
    }
    seen: set[CausalCharacter] = set()

    for _ in range(1000):
        point = model.sample_point(rng)
        df = rng.uniform(-3.0, 3.0, size=3)

        forward = classify_covector(model, CovectorSample.of(point, df))
        backward = classify_covector(model, CovectorSample.of(point, -df))

        assert backward.character is forward.character
        assert backward.orientation is flipped[forward.orientation]
        seen.add(forward.character)

    assert {CausalCharacter.TIMELIKE, CausalCharacter.SPACELIKE} <= seen


def test_unit_scale_factor_reproduces_minkowski() -> None:
    flat = minkowski(3)
    unit = flrw(3, ScaleFactor(ScaleForm.CONSTANT, coefficient=1.0), (-5.0, 5.0))
    rng = np.random.default_rng(23)

    for _ in range(200):
        p = rng.uniform(-5.0, 5.0, size=3)
        q = rng.uniform(-5.0, 5.0, size=3)
        df = rng.uniform(-3.0, 3.0, size=3)
        v = rng.normal(size=3)
        sample = CovectorSample.of(p, df)

        assert_allclose(metric_at(unit, p), metric_at(flat, p), rtol=0.0, atol=1e-12)
        assert_allclose(
            inverse_metric_at(unit, p), inverse_metric_at(flat, p), rtol=0.0, atol=1e-12
        )
        assert_allclose(frame_at(unit, p).e, frame_at(flat, p).e, rtol=0.0, atol=1e-12)
        assert inner_product(unit, p, v, df) == pytest.approx(
            inner_product(flat, p, v, df), abs=1e-12
        )
        assert covector_norm_sq(unit, sample) == pytest.approx(
            covector_norm_sq(flat, sample), abs=1e-12
        )
        assert classify_covector(unit, sample) == classify_covector(flat, sample)
        assert causal_relation(unit, p, q) is causal_relation(flat, p, q)
        assert analytic_distance(unit, p, q).value == pytest.approx(
            analytic_distance(flat, p, q).value, abs=1e-12
        )
        assert float(unit.conformal_time(q[0]) - unit.conformal_time(p[0])) == pytest.approx(
            float(flat.conformal_time(q[0]) - flat.conformal_time(p[0])), abs=1e-12
        )
