from __future__ import annotations

import logging
import re
import tomllib
from collections.abc import Mapping
from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path
from typing import Any, TypeVar

import numpy as np

from .config import ScenarioError
from .families import FamilyKind
from .spacetime import (
    DomainError,
    FloatArray,
    ModelKind,
    ScaleFactor,
    ScaleForm,
    SpacetimeModel,
    flrw,
    minkowski,
)

logger = logging.getLogger(__name__)

E = TypeVar("E", bound=StrEnum)

DEFAULT_T_DOMAIN = np.array([1.0, 10.0])

_NUMBER = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_CONSTANT_PATTERN = re.compile(rf"^(?P<c>[+-]?{_NUMBER})$")
_LINEAR_PATTERN = re.compile(
    rf"^(?:(?P<c>[+-]?{_NUMBER})\s*\*\s*)?t(?:\s*(?P<sign>[+-])\s*(?P<d>{_NUMBER}))?$"
)
_POWER_PATTERN = re.compile(
    rf"^(?:(?P<c>[+-]?{_NUMBER})\s*\*\s*)?t\s*(?:\^|\*\*)\s*(?P<p>[+-]?{_NUMBER})$"
)

_TASK_KEYS = frozenset(
    {
        "id",
        "kind",
        "p",
        "q",
        "point",
        "df",
        "method",
        "segments",
        "iterations",
        "starts",
        "trials",
        "seed",
        "tolerance",
        "family",
        "extend",
        "chi_sign",
    }
)


class TaskKind(StrEnum):
    DIST = "dist"
    CHECK_CAUSAL = "check-causal"
    CHECK_STEEP = "check-steep"
    VERIFY_CLIFFORD = "verify-clifford"
    EQUIVALENCE_SCAN = "equivalence-scan"
    GAP = "gap"


class DistanceChoice(StrEnum):
    ANALYTIC = "analytic"
    ORACLE = "oracle"
    STEEP = "steep"
    ALL = "all"


class Extension(StrEnum):
    EVEN = "even"
    ODD = "odd"


DEFAULT_TOLERANCES: dict[TaskKind, float] = {
    TaskKind.DIST: 1e-9,
    TaskKind.CHECK_CAUSAL: 1e-9,
    TaskKind.CHECK_STEEP: 1e-9,
    TaskKind.VERIFY_CLIFFORD: 1e-12,
    TaskKind.EQUIVALENCE_SCAN: 1e-9,
    TaskKind.GAP: 5e-3,
}


@dataclass(frozen=True, slots=True)
class FamilySpec:
    kind: FamilyKind
    bound: float | None = None


@dataclass(frozen=True, slots=True)
class TaskSpec:
    id: str
    kind: TaskKind
    p: str | None = None
    q: str | None = None
    point: str | None = None
    df: tuple[float, ...] | None = None
    method: DistanceChoice = DistanceChoice.ALL
    segments: int = 64
    iterations: int = 200
    starts: int = 8
    trials: int = 1000
    seed: int = 0
    tolerance: float | None = None
    family: FamilySpec | None = None
    extend: Extension | None = None
    chi_sign: int = 1

    @property
    def resolved_tolerance(self) -> float:
        if self.tolerance is not None:
            return self.tolerance
        return DEFAULT_TOLERANCES[self.kind]


@dataclass(frozen=True, slots=True)
class ScenarioConfig:
    model: SpacetimeModel
    points: dict[str, FloatArray]
    tasks: tuple[TaskSpec, ...]

    def point(self, name: str | None) -> FloatArray:
        if name is None or name not in self.points:
            raise ScenarioError(f"Unknown point: {name!r}")
        return self.points[name]


def load_scenario(path: str | Path) -> ScenarioConfig:
    scenario_path = Path(path).expanduser()
    try:
        with scenario_path.open("rb") as handle:
            data = tomllib.load(handle)
    except OSError as exc:
        raise ScenarioError(f"Cannot read scenario file {scenario_path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"Malformed scenario file {scenario_path}: {exc}") from exc

    scenario = scenario_from_mapping(data)
    logger.info(
        "Loaded scenario path=%s model=%s n=%d points=%d tasks=%d",
        scenario_path,
        scenario.model.label,
        scenario.model.n,
        len(scenario.points),
        len(scenario.tasks),
    )
    return scenario


def scenario_from_mapping(data: Mapping[str, Any]) -> ScenarioConfig:
    unknown = set(data) - {"model", "points", "tasks"}
    if unknown:
        raise ScenarioError(f"Unknown top-level sections: {sorted(unknown)}")

    model_table = _table(data, "model")
    model = build_model(
        kind=_string(model_table, "kind", "minkowski"),
        n=_optional_integer(model_table, "n"),
        a=model_table.get("a"),
        t_domain=model_table.get("t_domain"),
    )

    points: dict[str, FloatArray] = {}
    for name, coordinates in _table(data, "points", required=False).items():
        try:
            points[name] = model.validate_point(_floats(coordinates, f"points.{name}"))
        except DomainError as exc:
            raise ScenarioError(f"Point {name!r}: {exc}") from exc

    raw_tasks = data.get("tasks", [])
    if not isinstance(raw_tasks, list) or not raw_tasks:
        raise ScenarioError("A scenario needs at least one [[tasks]] entry")

    tasks = tuple(_task(raw, index, model) for index, raw in enumerate(raw_tasks))
    ids = [task.id for task in tasks]
    if len(set(ids)) != len(ids):
        raise ScenarioError(f"Task ids must be unique, got {ids}")

    scenario = ScenarioConfig(model=model, points=points, tasks=tasks)
    for task in tasks:
        for reference in (task.p, task.q, task.point):
            if reference is not None:
                scenario.point(reference)
    return scenario


def build_model(
    kind: str, n: int | None, a: Any = None, t_domain: Any = None
) -> SpacetimeModel:
    if n is None:
        raise ScenarioError("model.n is required")
    try:
        model_kind = ModelKind(kind)
    except ValueError as exc:
        raise ScenarioError(
            f"Unsupported model kind {kind!r}; expected one of {[k.value for k in ModelKind]}"
        ) from exc

    try:
        if model_kind is ModelKind.MINKOWSKI:
            if a is not None:
                raise ScenarioError("Minkowski models take no scale factor")
            return minkowski(n)

        if not isinstance(a, str):
            raise ScenarioError("FLRW models need a scale factor string, e.g. a = \"t\"")
        domain = _floats(t_domain, "model.t_domain") if t_domain is not None else DEFAULT_T_DOMAIN
        if len(domain) != 2:
            raise ScenarioError("model.t_domain must be [lower, upper]")
        return flrw(n, parse_scale_factor(a), (float(domain[0]), float(domain[1])))
    except DomainError as exc:
        raise ScenarioError(str(exc)) from exc


def parse_scale_factor(expression: str) -> ScaleFactor:
    """Parse `c`, `[c*]t[+-d]` or `[c*]t^p` (also `t**p`); nothing else is accepted."""
    text = expression.strip()
    if match := _CONSTANT_PATTERN.match(text):
        return ScaleFactor(form=ScaleForm.CONSTANT, coefficient=float(match["c"]))
    if match := _LINEAR_PATTERN.match(text):
        offset = float(match["d"]) if match["d"] else 0.0
        if match["sign"] == "-":
            offset = -offset
        return ScaleFactor(
            form=ScaleForm.LINEAR, coefficient=_coefficient(match["c"]), offset=offset
        )
    if match := _POWER_PATTERN.match(text):
        return ScaleFactor(
            form=ScaleForm.POWER, coefficient=_coefficient(match["c"]), exponent=float(match["p"])
        )
    raise ScenarioError(f"Unsupported scale factor {expression!r}; use c, c*t+d or c*t^p")


def _task(raw: Any, index: int, model: SpacetimeModel) -> TaskSpec:
    if not isinstance(raw, Mapping):
        raise ScenarioError(f"tasks[{index}] must be a table")
    unknown = set(raw) - _TASK_KEYS
    if unknown:
        raise ScenarioError(f"tasks[{index}] has unknown keys: {sorted(unknown)}")

    try:
        kind = TaskKind(_string(raw, "kind", None))
    except ValueError as exc:
        raise ScenarioError(
            f"tasks[{index}].kind must be one of {[k.value for k in TaskKind]}"
        ) from exc

    task_id = _string(raw, "id", f"{kind.value}-{index + 1}")
    task = TaskSpec(
        id=task_id,
        kind=kind,
        p=_optional_string(raw, "p"),
        q=_optional_string(raw, "q"),
        point=_optional_string(raw, "point"),
        df=tuple(_floats(raw["df"], f"{task_id}.df")) if "df" in raw else None,
        method=_choice(DistanceChoice, raw, "method", DistanceChoice.ALL, task_id),
        segments=_positive(raw, "segments", 64, task_id),
        iterations=_positive(raw, "iterations", 200, task_id),
        starts=_positive(raw, "starts", 8, task_id),
        trials=_positive(raw, "trials", 1000, task_id),
        seed=_integer(raw, "seed", 0),
        tolerance=_optional_float(raw, "tolerance", task_id),
        family=_family(raw.get("family"), task_id),
        extend=_optional_choice(Extension, raw, "extend", task_id),
        chi_sign=_integer(raw, "chi_sign", 1),
    )
    _check_task(task, model)
    return task


def _check_task(task: TaskSpec, model: SpacetimeModel) -> None:
    if task.chi_sign not in (1, -1):
        raise ScenarioError(f"{task.id}: chi_sign must be +1 or -1")
    if task.tolerance is not None and task.tolerance <= 0.0:
        raise ScenarioError(f"{task.id}: tolerance must be > 0")

    match task.kind:
        case TaskKind.DIST | TaskKind.GAP:
            if task.p is None or task.q is None:
                raise ScenarioError(f"{task.id}: {task.kind.value} needs points p and q")
        case TaskKind.CHECK_CAUSAL | TaskKind.CHECK_STEEP:
            if task.point is None or task.df is None:
                raise ScenarioError(f"{task.id}: {task.kind.value} needs a point and df")
            if len(task.df) != model.n:
                raise ScenarioError(f"{task.id}: df needs {model.n} components")
        case TaskKind.VERIFY_CLIFFORD:
            if task.extend is Extension.EVEN and model.n % 2 == 1:
                raise ScenarioError(f"{task.id}: extend = \"even\" needs an even n")
            if task.extend is Extension.ODD and model.n % 2 == 0:
                raise ScenarioError(f"{task.id}: extend = \"odd\" needs an odd n")
        case TaskKind.EQUIVALENCE_SCAN:
            pass


def _family(raw: Any, task_id: str) -> FamilySpec | None:
    if raw is None:
        return None
    if isinstance(raw, str):
        raw = {"kind": raw}
    if not isinstance(raw, Mapping):
        raise ScenarioError(f"{task_id}.family must be a table or a family name")
    kind = _optional_choice(FamilyKind, raw, "kind", task_id)
    if kind is None:
        raise ScenarioError(f"{task_id}.family.kind is required")
    return FamilySpec(kind=kind, bound=_optional_float(raw, "bound", task_id))


def _coefficient(raw: str | None) -> float:
    return float(raw) if raw else 1.0


def _table(data: Mapping[str, Any], key: str, *, required: bool = True) -> Mapping[str, Any]:
    value = data.get(key)
    if value is None and not required:
        return {}
    if not isinstance(value, Mapping):
        raise ScenarioError(f"[{key}] section is missing or not a table")
    return value


def _string(data: Mapping[str, Any], key: str, default: str | None) -> str:
    value = data.get(key, default)
    if not isinstance(value, str):
        raise ScenarioError(f"{key} must be a string")
    return value


def _optional_string(data: Mapping[str, Any], key: str) -> str | None:
    if key not in data:
        return None
    return _string(data, key, None)


def _optional_integer(data: Mapping[str, Any], key: str) -> int | None:
    value = data.get(key)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{key} must be an integer")
    return value


def _integer(data: Mapping[str, Any], key: str, default: int) -> int:
    value = _optional_integer(data, key)
    return default if value is None else value


def _positive(data: Mapping[str, Any], key: str, default: int, task_id: str) -> int:
    value = _integer(data, key, default)
    if value < 1:
        raise ScenarioError(f"{task_id}.{key} must be >= 1")
    return value


def _optional_float(data: Mapping[str, Any], key: str, task_id: str) -> float | None:
    value = data.get(key)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int | float):
        raise ScenarioError(f"{task_id}.{key} must be a number")
    return float(value)


def _choice(enum: type[E], data: Mapping[str, Any], key: str, default: E, task_id: str) -> E:
    value = _optional_choice(enum, data, key, task_id)
    return default if value is None else value


def _optional_choice(
    enum: type[E], data: Mapping[str, Any], key: str, task_id: str
) -> E | None:
    value = data.get(key)
    if value is None:
        return None
    try:
        return enum(value)
    except ValueError as exc:
        raise ScenarioError(
            f"{task_id}.{key} must be one of {[member.value for member in enum]}"
        ) from exc


def _floats(raw: Any, key: str) -> FloatArray:
    if isinstance(raw, str):
        raw = [part for part in raw.split(",") if part.strip()]
    if not isinstance(raw, list | tuple):
        raise ScenarioError(f"{key} must be a list of numbers")
    try:
        values = np.asarray([float(x) for x in raw], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{key} must be a list of numbers") from exc
    if not np.all(np.isfinite(values)):
        raise ScenarioError(f"{key} has non-finite entries")
    return values
