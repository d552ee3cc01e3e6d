from __future__ import annotations

import logging
from collections.abc import Sequence

from rich.console import Console
from rich.markup import escape

from .cli import parse_args, scenario_from_args
from .config import SettingsError, load_settings
from .logging_config import configure_logging
from .report import any_failed, render_summary, write_results
from .runner import run_scenario

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def main(argv: Sequence[str] | None = None, console: Console | None = None) -> int:
    args = parse_args(argv)
    console = console or Console()
    try:
        settings = load_settings(args.log_level, args.log_file)
        configure_logging(settings.log_level, settings.log_file)
        scenario = scenario_from_args(args)
    except SettingsError as exc:
        logger.error("Configuration error: %s", exc)
        Console(stderr=True).print(f"[red]error:[/red] {escape(str(exc))}")
        return EXIT_USAGE

    logger.info(
        "Starting lorentz-distance command=%s model=%s tasks=%d",
        args.command,
        scenario.model.label,
        len(scenario.tasks),
    )
    rows = run_scenario(scenario)
    path = write_results(rows, settings.output_dir)
    render_summary(rows, console)
    console.print(f"results: {path}")

    if any_failed(rows):
        logger.warning("At least one task failed; see %s", path)
        return EXIT_FAILED
    return EXIT_OK


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
