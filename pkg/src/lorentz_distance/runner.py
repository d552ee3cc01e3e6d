from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import StrEnum

import numpy as np

from .causal import (
    GradientConsistencyError,
    OperatorError,
    equivalence_scan,
    gradient_causal_check,
    gradient_steep_check,
    operator_causal_check,
    operator_steep_check,
)
from .clifford import CliffordError, build_gamma_matrices, extend_even, extend_odd, verify_clifford
from .distance import (
    DistanceError,
    DistanceResult,
    OracleSettings,
    UnsupportedPairError,
    VariationalSettings,
    analytic_distance,
    duality_gap,
    oracle_distance,
    steep_family_distance,
)
from .families import FamilyKind, SteepFamily, build_family, default_grid
from .scenario import DistanceChoice, Extension, ScenarioConfig, TaskKind, TaskSpec
from .spacetime import CovectorSample, DomainError, FloatArray, ModelKind

logger = logging.getLogger(__name__)

# agreement with the closed-form eigenvalues and the extension identity
SPECTRUM_TOLERANCE = 1e-9
EXTENSION_TOLERANCE = 1e-12

_TASK_ERRORS = (
    CliffordError,
    DistanceError,
    DomainError,
    GradientConsistencyError,
    OperatorError,
)


class RowStatus(StrEnum):
    OK = "ok"
    OPEN = "open"
    SKIPPED = "skipped"
    FAIL = "fail"

    @property
    def failed(self) -> bool:
        return self is RowStatus.FAIL


@dataclass(frozen=True, slots=True)
class ResultRow:
    task: str
    model: str
    n: int
    p: str
    q: str
    method: str
    value: float
    margin: float | None
    gap: float | None
    seed: int | None
    tolerance: float
    status: RowStatus
    certificate: FloatArray | None = None
    notes: tuple[str, ...] = ()


def run_scenario(scenario: ScenarioConfig) -> list[ResultRow]:
    rows: list[ResultRow] = []
    for task in scenario.tasks:
        logger.info("Running task id=%s kind=%s", task.id, task.kind.value)
        try:
            task_rows = run_task(scenario, task)
        except _TASK_ERRORS as exc:
            logger.error("Task id=%s failed: %s", task.id, exc)
            task_rows = [_error_row(scenario, task, exc)]
        for row in task_rows:
            logger.info(
                "Result task=%s method=%s value=%.12g status=%s",
                row.task,
                row.method,
                row.value,
                row.status.value,
            )
        rows.extend(task_rows)
    return rows


def run_task(scenario: ScenarioConfig, task: TaskSpec) -> list[ResultRow]:
    match task.kind:
        case TaskKind.DIST:
            return _distance_rows(scenario, task)
        case TaskKind.CHECK_CAUSAL | TaskKind.CHECK_STEEP:
            return _check_rows(scenario, task)
        case TaskKind.VERIFY_CLIFFORD:
            return [_clifford_row(scenario, task)]
        case TaskKind.EQUIVALENCE_SCAN:
            return _scan_rows(scenario, task)
        case TaskKind.GAP:
            return _gap_rows(scenario, task)


def resolve_family(scenario: ScenarioConfig, task: TaskSpec) -> SteepFamily:
    model = scenario.model
    grid = default_grid(model, scenario.point(task.p), scenario.point(task.q))
    if task.family is None:
        kind = FamilyKind.BOOST if model.kind is ModelKind.MINKOWSKI else FamilyKind.MOMENTUM
        return build_family(kind, model, grid)
    return build_family(task.family.kind, model, grid, task.family.bound)


def _distance_rows(scenario: ScenarioConfig, task: TaskSpec) -> list[ResultRow]:
    model = scenario.model
    p = scenario.point(task.p)
    q = scenario.point(task.q)
    choice = task.method
    rows: list[ResultRow] = []

    if choice in (DistanceChoice.ANALYTIC, DistanceChoice.ALL):
        try:
            result = analytic_distance(model, p, q)
        except UnsupportedPairError as exc:
            logger.warning("Task id=%s: %s", task.id, exc)
            rows.append(
                _row(
                    scenario,
                    task,
                    "analytic",
                    math.nan,
                    tolerance=0.0,
                    status=RowStatus.SKIPPED,
                    notes=(str(exc),),
                )
            )
        else:
            rows.append(_result_row(scenario, task, result, tolerance=0.0))
    if choice in (DistanceChoice.ORACLE, DistanceChoice.ALL):
        rows.append(
            _result_row(scenario, task, oracle_distance(model, p, q, _oracle_settings(task)))
        )
    if choice in (DistanceChoice.STEEP, DistanceChoice.ALL):
        family = resolve_family(scenario, task)
        result = steep_family_distance(model, family, p, q, _variational_settings(task))
        rows.append(_result_row(scenario, task, result))
    return rows


def _check_rows(scenario: ScenarioConfig, task: TaskSpec) -> list[ResultRow]:
    model = scenario.model
    tol = task.resolved_tolerance
    sample = CovectorSample.of(scenario.point(task.point), np.asarray(task.df, dtype=np.float64))
    cliff = build_gamma_matrices(model.n, chi_sign=task.chi_sign)

    if task.kind is TaskKind.CHECK_CAUSAL:
        by_gradient = gradient_causal_check(model, sample, tol)
        by_operator = operator_causal_check(cliff, model, sample, tol)
        agree = by_gradient.causal == by_operator.causal
    else:
        by_gradient = gradient_steep_check(model, sample, tol)
        by_operator = operator_steep_check(cliff, model, sample, tol)
        agree = by_gradient.steep == by_operator.steep

    if not agree:
        logger.error(
            "Routes disagree on %s at point=%s df=%s",
            task.kind.value,
            sample.point.tolist(),
            sample.components.tolist(),
        )
    status = RowStatus.OK if agree else RowStatus.FAIL
    rows: list[ResultRow] = []
    for verdict in (by_gradient, by_operator):
        holds = verdict.causal if task.kind is TaskKind.CHECK_CAUSAL else bool(verdict.steep)
        rows.append(
            _row(
                scenario,
                task,
                verdict.route.value,
                1.0 if holds else 0.0,
                p=_coordinates(sample.point),
                margin=verdict.margin,
                status=status,
                notes=(f"df={_coordinates(sample.components)}",),
            )
        )
    return rows


def _clifford_row(scenario: ScenarioConfig, task: TaskSpec) -> ResultRow:
    module = build_gamma_matrices(scenario.model.n, chi_sign=task.chi_sign)
    method = "clifford"
    if task.extend is Extension.EVEN:
        module = extend_even(module, sign=task.chi_sign)
        method = "clifford-extend-even"
    elif task.extend is Extension.ODD:
        module = extend_odd(module)
        method = "clifford-extend-odd"

    report = verify_clifford(module, tol=task.resolved_tolerance)
    return _row(
        scenario,
        task,
        method,
        report.max_deviation,
        n=module.n,
        status=RowStatus.OK if report.passed else RowStatus.FAIL,
        notes=tuple(report.violations),
    )


def _scan_rows(scenario: ScenarioConfig, task: TaskSpec) -> list[ResultRow]:
    model = scenario.model
    cliff = build_gamma_matrices(model.n, chi_sign=task.chi_sign)
    report = equivalence_scan(cliff, model, task.trials, task.seed, task.resolved_tolerance)

    spectrum_ok = report.max_spectrum_discrepancy <= SPECTRUM_TOLERANCE
    extension_ok = report.max_extension_deviation <= EXTENSION_TOLERANCE
    causal_failed = any(d.verdict == "causal" for d in report.disagreements)
    steep_failed = any(d.verdict == "steep" for d in report.disagreements)
    return [
        _row(
            scenario,
            task,
            "causal-equivalence",
            _fraction(report.causal_agreements, report.causal_checked),
            margin=report.max_spectrum_discrepancy,
            seed=task.seed,
            status=RowStatus.FAIL if causal_failed or not spectrum_ok else RowStatus.OK,
            notes=(f"boundary={report.causal_boundary}",),
        ),
        _row(
            scenario,
            task,
            "steep-equivalence",
            _fraction(report.steep_agreements, report.steep_checked),
            margin=report.max_extension_deviation,
            seed=task.seed,
            status=(
                RowStatus.FAIL
                if steep_failed or not extension_ok or report.split_mismatches
                else RowStatus.OK
            ),
            notes=(
                f"boundary={report.steep_boundary}",
                f"split_mismatches={report.split_mismatches}",
            ),
        ),
    ]


def _gap_rows(scenario: ScenarioConfig, task: TaskSpec) -> list[ResultRow]:
    family = resolve_family(scenario, task)
    report = duality_gap(
        scenario.model,
        family,
        scenario.point(task.p),
        scenario.point(task.q),
        _oracle_settings(task),
        _variational_settings(task),
        tolerance=task.resolved_tolerance,
    )
    if not report.consistent:
        status = RowStatus.FAIL
    elif report.closed:
        status = RowStatus.OK
    else:
        status = RowStatus.OPEN
    return [
        _result_row(scenario, task, result, gap=report.gap, status=status, notes=report.notes)
        for result in (report.lower, report.upper)
    ]


def _oracle_settings(task: TaskSpec) -> OracleSettings:
    return OracleSettings(
        segments=task.segments,
        iterations=task.iterations,
        starts=task.starts,
        seed=task.seed,
    )


def _variational_settings(task: TaskSpec) -> VariationalSettings:
    return VariationalSettings(starts=task.starts, seed=task.seed)


def _result_row(
    scenario: ScenarioConfig,
    task: TaskSpec,
    result: DistanceResult,
    *,
    tolerance: float | None = None,
    gap: float | None = None,
    status: RowStatus = RowStatus.OK,
    notes: tuple[str, ...] = (),
) -> ResultRow:
    return _row(
        scenario,
        task,
        result.method.value,
        result.value,
        gap=gap,
        seed=task.seed,
        tolerance=tolerance,
        status=status,
        certificate=result.certificate,
        notes=result.notes + notes,
    )


def _row(
    scenario: ScenarioConfig,
    task: TaskSpec,
    method: str,
    value: float,
    *,
    p: str | None = None,
    q: str | None = None,
    n: int | None = None,
    margin: float | None = None,
    gap: float | None = None,
    seed: int | None = None,
    tolerance: float | None = None,
    status: RowStatus = RowStatus.OK,
    certificate: FloatArray | None = None,
    notes: tuple[str, ...] = (),
) -> ResultRow:
    return ResultRow(
        task=task.id,
        model=scenario.model.label,
        n=scenario.model.n if n is None else n,
        p=p if p is not None else _point_label(scenario, task.p),
        q=q if q is not None else _point_label(scenario, task.q),
        method=method,
        value=value,
        margin=margin,
        gap=gap,
        seed=seed,
        tolerance=task.resolved_tolerance if tolerance is None else tolerance,
        status=status,
        certificate=certificate,
        notes=notes,
    )


def _error_row(scenario: ScenarioConfig, task: TaskSpec, exc: Exception) -> ResultRow:
    return _row(
        scenario,
        task,
        task.kind.value,
        math.nan,
        status=RowStatus.FAIL,
        notes=(f"{type(exc).__name__}: {exc}",),
    )


def _point_label(scenario: ScenarioConfig, name: str | None) -> str:
    if name is None:
        return ""
    return _coordinates(scenario.point(name))


def _coordinates(values: FloatArray) -> str:
    return " ".join(f"{float(x):.12g}" for x in values)


def _fraction(agreements: int, checked: int) -> float:
    return agreements / checked if checked else math.nan
