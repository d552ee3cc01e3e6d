from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from lorentz_distance.causal import (
    CausalVerdict,
    GradientConsistencyError,
    OperatorError,
    Route,
    SampledFunction,
    equivalence_scan,
    extended_action,
    function_causal_on_grid,
    gradient_causal_check,
    gradient_steep_check,
    largest_eigenvalue,
    operator_causal_check,
    operator_steep_check,
    predicted_spectrum,
    rectangular_grid,
)
from lorentz_distance.clifford import build_gamma_matrices, clifford_action, extend_even
from lorentz_distance.spacetime import (
    CovectorSample,
    ScaleFactor,
    ScaleForm,
    SpacetimeModel,
    flrw,
    frame_at,
    minkowski,
)


def _milne(n: int) -> SpacetimeModel:
    return flrw(n, ScaleFactor(form=ScaleForm.LINEAR), (1.0, 10.0))


@pytest.mark.parametrize(
    ("components", "causal", "steep"),
    [
        ([2.0, 1.0], True, True),
        ([1.0, 0.0], True, True),
        ([1.0, 1.0], True, False),
        ([0.5, 0.0], True, False),
        ([-1.0, 0.0], False, False),
        ([0.0, 1.0], False, False),
    ],
)
def test_gradient_and_operator_routes_agree_on_known_covectors(
    components: list[float], causal: bool, steep: bool
) -> None:
    model = minkowski(2)
    cliff = build_gamma_matrices(2)
    sample = CovectorSample.of([0.0, 0.0], components)

    assert gradient_causal_check(model, sample).causal is causal
    assert operator_causal_check(cliff, model, sample).causal is causal
    assert gradient_steep_check(model, sample).steep is steep
    assert operator_steep_check(cliff, model, sample).steep is steep


def test_causal_checks_leave_steepness_unevaluated() -> None:
    sample = CovectorSample.of([0.0, 0.0], [2.0, 1.0])
    verdict = operator_causal_check(build_gamma_matrices(2), minkowski(2), sample)

    assert verdict.steep is None
    assert verdict.route is Route.OPERATOR
    assert gradient_causal_check(minkowski(2), sample).steep is None


def test_steep_verdict_implies_causal() -> None:
    with pytest.raises(ValueError, match="must also be causal"):
        CausalVerdict(causal=False, margin=1.0, route=Route.GRADIENT, steep=True)


def test_operator_margin_is_largest_eigenvalue() -> None:
    sample = CovectorSample.of([0.0, 0.0, 0.0], [3.0, 1.0, 0.0])
    cliff = build_gamma_matrices(3)

    causal = operator_causal_check(cliff, minkowski(3), sample)
    steep = operator_steep_check(cliff, minkowski(3), sample)

    assert causal.margin == pytest.approx(-2.0)
    assert steep.margin == pytest.approx(-3.0 + np.sqrt(2.0))


def test_largest_eigenvalue_rejects_non_hermitian_input() -> None:
    with pytest.raises(OperatorError, match="Hermitian"):
        largest_eigenvalue(np.array([[0.0, 1.0], [0.0, 0.0]], dtype=np.complex128))


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_spectrum_follows_closed_form(n: int) -> None:
    model = _milne(n)
    cliff = build_gamma_matrices(n)
    rng = np.random.default_rng(n)

    for _ in range(100):
        point = model.sample_point(rng)
        sample = CovectorSample.of(point, rng.uniform(-3.0, 3.0, size=n))
        action = clifford_action(cliff, frame_at(model, point), sample.components)

        assert_allclose(
            np.linalg.eigvalsh(action),
            predicted_spectrum(model, sample, cliff.fiber_dim),
            atol=1e-9,
        )


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
@pytest.mark.parametrize("model_name", ["minkowski", "flrw"])
def test_equivalence_scan_has_no_disagreements(n: int, model_name: str) -> None:
    model = minkowski(n) if model_name == "minkowski" else _milne(n)

    report = equivalence_scan(build_gamma_matrices(n), model, trials=1000, seed=7)

    assert report.passed, report.disagreements[:3]
    assert report.causal_agreements == report.causal_checked
    assert report.steep_agreements == report.steep_checked
    assert report.causal_checked > 900
    assert report.max_spectrum_discrepancy <= 1e-9
    assert report.max_extension_deviation <= 1e-12
    assert report.split_mismatches == 0


def test_equivalence_scan_is_reproducible_for_a_seed() -> None:
    cliff = build_gamma_matrices(3)
    first = equivalence_scan(cliff, minkowski(3), trials=200, seed=3)
    second = equivalence_scan(cliff, minkowski(3), trials=200, seed=3)

    assert first.causal_agreements == second.causal_agreements
    assert first.max_spectrum_discrepancy == second.max_spectrum_discrepancy


def test_equivalence_scan_rejects_dimension_mismatch() -> None:
    with pytest.raises(OperatorError, match="does not match"):
        equivalence_scan(build_gamma_matrices(3), minkowski(4), trials=1, seed=0)


def test_even_steep_operator_equals_extended_action() -> None:
    model = _milne(4)
    cliff = build_gamma_matrices(4)
    extended = extend_even(cliff, sign=1)
    frame = frame_at(model, [2.0, 0.1, 0.2, 0.3])
    df = np.array([1.5, -0.4, 0.7, 0.2])

    steep = clifford_action(cliff, frame, df) + 1j * (cliff.j @ cliff.chi)

    assert_allclose(extended_action(extended, frame, df), steep, atol=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_chirality_sign_does_not_change_steep_verdicts(n: int) -> None:
    model = _milne(n)
    plus = build_gamma_matrices(n, chi_sign=1)
    minus = build_gamma_matrices(n, chi_sign=-1)
    rng = np.random.default_rng(100 + n)

    for _ in range(200):
        point = model.sample_point(rng)
        sample = CovectorSample.of(point, rng.uniform(-3.0, 3.0, size=n))
        first = operator_steep_check(plus, model, sample)
        second = operator_steep_check(minus, model, sample)

        assert first.steep == second.steep
        assert abs(first.margin - second.margin) <= 1e-12


def test_rectangular_grid_covers_every_combination() -> None:
    grid = rectangular_grid([0.0, -1.0], [1.0, 1.0], [2, 3])

    assert grid.shape == (6, 2)
    assert_allclose(grid[0], [0.0, -1.0])
    assert_allclose(grid[-1], [1.0, 1.0])


def test_rectangular_grid_rejects_empty_axis() -> None:
    with pytest.raises(ValueError, match="at least one point"):
        rectangular_grid([0.0], [1.0], [0])


def test_sampled_function_detects_inconsistent_gradient() -> None:
    grid = rectangular_grid([0.0, 0.0], [1.0, 1.0], [2, 2])
    wrong = SampledFunction(
        value=lambda point: float(point[0]),
        gradient=lambda point: np.array([2.0, 0.0]),
        grid=grid,
        name="t",
    )

    with pytest.raises(GradientConsistencyError, match="disagrees"):
        wrong.check_consistency()


@pytest.mark.parametrize("route", [Route.GRADIENT, Route.OPERATOR])
def test_time_function_is_steep_on_a_grid(route: Route) -> None:
    model = _milne(3)
    grid = rectangular_grid([1.0, -1.0, -1.0], [3.0, 1.0, 1.0], [3, 3, 3])
    time = SampledFunction(
        value=lambda point: float(point[0]),
        gradient=lambda point: np.array([1.0, 0.0, 0.0]),
        grid=grid,
        name="t",
    )
    half_time = SampledFunction(
        value=lambda point: 0.5 * float(point[0]),
        gradient=lambda point: np.array([0.5, 0.0, 0.0]),
        grid=grid,
        name="t/2",
    )
    cliff = build_gamma_matrices(3)

    verdict = function_causal_on_grid(cliff, model, time, route=route)
    slow = function_causal_on_grid(cliff, model, half_time, route=route)

    assert verdict.causal and verdict.steep
    assert slow.causal and not slow.steep


def test_operator_route_needs_a_clifford_module() -> None:
    function = SampledFunction(
        value=lambda point: float(point[0]),
        gradient=lambda point: np.array([1.0, 0.0]),
        grid=rectangular_grid([0.0, 0.0], [1.0, 1.0], [2, 2]),
    )

    with pytest.raises(OperatorError, match="Clifford module"):
        function_causal_on_grid(None, minkowski(2), function)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_operator_steep_verdict_comes_from_steep_operators(n: int) -> None:
    model = _milne(n)
    cliff = build_gamma_matrices(n)
    rng = np.random.default_rng(200 + n)

    for _ in range(200):
        point = model.sample_point(rng)
        sample = CovectorSample.of(point, rng.uniform(-3.0, 3.0, size=n))

        verdict = operator_steep_check(cliff, model, sample, tol=1e-9)

        assert verdict.steep is (verdict.margin <= 1e-9)
        assert verdict.causal is operator_causal_check(cliff, model, sample, tol=1e-9).causal
        if verdict.steep:
            assert verdict.causal
