from __future__ import annotations

import argparse
from collections.abc import Sequence
from typing import Any

from .config import DEFAULT_LOG_FILE
from .families import FamilyKind
from .scenario import (
    DistanceChoice,
    Extension,
    ScenarioConfig,
    TaskKind,
    load_scenario,
    scenario_from_mapping,
)
from .spacetime import ModelKind

RUN_COMMAND = "run"


def build_parser() -> argparse.ArgumentParser:
    logging_options = argparse.ArgumentParser(add_help=False)
    logging_options.add_argument("--log-level", default="INFO", help="Logging level name")
    logging_options.add_argument(
        "--log-file", default=DEFAULT_LOG_FILE, help="Rotating log file path"
    )

    model_options = argparse.ArgumentParser(add_help=False)
    model_options.add_argument(
        "--model", choices=[kind.value for kind in ModelKind], default=ModelKind.MINKOWSKI.value
    )
    model_options.add_argument("--n", type=int, required=True, help="Spacetime dimension")
    model_options.add_argument("--a", help='Scale factor for flrw: "c", "c*t+d" or "c*t^p"')
    model_options.add_argument("--t-domain", help="Working t interval for flrw as LO,HI")

    seeded = argparse.ArgumentParser(add_help=False)
    seeded.add_argument("--seed", type=int, default=0, help="Explicit random seed")
    seeded.add_argument("--tol", type=float, help="Tolerance (task default when omitted)")

    optimizer = argparse.ArgumentParser(add_help=False)
    optimizer.add_argument("--p", required=True, help="Start point as comma-separated coordinates")
    optimizer.add_argument("--q", required=True, help="End point as comma-separated coordinates")
    optimizer.add_argument("--segments", type=int, default=64)
    optimizer.add_argument("--iterations", type=int, default=200)
    optimizer.add_argument("--starts", type=int, default=8)
    optimizer.add_argument("--family", choices=[kind.value for kind in FamilyKind])
    optimizer.add_argument("--family-bound", type=float)

    chirality = argparse.ArgumentParser(add_help=False)
    chirality.add_argument("--chi-sign", type=int, choices=[1, -1], default=1)

    parser = argparse.ArgumentParser(
        prog="lorentz-distance",
        description="Lorentzian distance via steep functions and Dirac-type operators",
        epilog="Negative coordinates need the --p=-1,0 form.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    dist = commands.add_parser(
        TaskKind.DIST.value,
        parents=[logging_options, model_options, seeded, optimizer],
        help="Distance between two points",
    )
    dist.add_argument(
        "--method",
        choices=[choice.value for choice in DistanceChoice],
        default=DistanceChoice.ALL.value,
    )

    for kind in (TaskKind.CHECK_CAUSAL, TaskKind.CHECK_STEEP):
        check = commands.add_parser(
            kind.value,
            parents=[logging_options, model_options, seeded, chirality],
            help=f"Gradient vs operator {kind.value.removeprefix('check-')} check of one covector",
        )
        check.add_argument("--point", required=True, help="Base point as comma-separated values")
        check.add_argument("--df", required=True, help="Covector f_,mu as comma-separated values")

    verify = commands.add_parser(
        TaskKind.VERIFY_CLIFFORD.value,
        parents=[logging_options, chirality],
        help="Check the Clifford identities of the gamma matrices",
    )
    verify.add_argument("--n", type=int, required=True, help="Spacetime dimension")
    verify.add_argument("--tol", type=float, help="Tolerance (1e-12 when omitted)")
    verify.add_argument("--extend", choices=[extension.value for extension in Extension])

    scan = commands.add_parser(
        TaskKind.EQUIVALENCE_SCAN.value,
        parents=[logging_options, model_options, seeded, chirality],
        help="Random scan comparing gradient and operator verdicts",
    )
    scan.add_argument("--trials", type=int, default=1000)

    commands.add_parser(
        TaskKind.GAP.value,
        parents=[logging_options, model_options, seeded, optimizer],
        help="Curve oracle vs steep-family bound",
    )

    run = commands.add_parser(
        RUN_COMMAND, parents=[logging_options], help="Run every task of a TOML scenario"
    )
    run.add_argument("--config", required=True, help="Scenario file")
    return parser


def scenario_from_args(args: argparse.Namespace) -> ScenarioConfig:
    if args.command == RUN_COMMAND:
        return load_scenario(args.config)

    kind = TaskKind(args.command)
    if kind is TaskKind.VERIFY_CLIFFORD:
        model: dict[str, Any] = {"kind": ModelKind.MINKOWSKI.value, "n": args.n}
    else:
        model = _drop_none(
            {"kind": args.model, "n": args.n, "a": args.a, "t_domain": args.t_domain}
        )

    task: dict[str, Any] = {"id": kind.value, "kind": kind.value}
    points: dict[str, str] = {}
    match kind:
        case TaskKind.DIST | TaskKind.GAP:
            points = {"p": args.p, "q": args.q}
            task |= {
                "p": "p",
                "q": "q",
                "segments": args.segments,
                "iterations": args.iterations,
                "starts": args.starts,
                "seed": args.seed,
            }
            if kind is TaskKind.DIST:
                task["method"] = args.method
            if args.family is not None:
                task["family"] = _drop_none({"kind": args.family, "bound": args.family_bound})
        case TaskKind.CHECK_CAUSAL | TaskKind.CHECK_STEEP:
            points = {"point": args.point}
            task |= {"point": "point", "df": args.df, "chi_sign": args.chi_sign}
        case TaskKind.VERIFY_CLIFFORD:
            task |= _drop_none({"extend": args.extend, "chi_sign": args.chi_sign})
        case TaskKind.EQUIVALENCE_SCAN:
            task |= {"trials": args.trials, "seed": args.seed, "chi_sign": args.chi_sign}

    if args.tol is not None:
        task["tolerance"] = args.tol
    return scenario_from_mapping({"model": model, "points": points, "tasks": [task]})


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def _drop_none(values: dict[str, Any]) -> dict[str, Any]:
    return {key: value for key, value in values.items() if value is not None}
