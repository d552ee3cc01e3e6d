from __future__ import annotations

import csv
import math
from pathlib import Path

import pytest

from lorentz_distance import runner
from lorentz_distance.distance import EmptyFamilyError
from lorentz_distance.main import EXIT_FAILED, EXIT_OK, EXIT_USAGE, main

FAST_DIST = ["--n", "2", "--p", "0,0", "--q", "2,1", "--segments", "16", "--starts", "2"]


def _main(tmp_path: Path, monkeypatch: pytest.MonkeyPatch, *args: str) -> int:
    monkeypatch.setenv("LORENTZ_DISTANCE_OUTPUT_DIR", str(tmp_path / "out"))
    return main([*args, "--log-file", str(tmp_path / "logs" / "run.log")])


def _rows(tmp_path: Path) -> list[dict[str, str]]:
    with (tmp_path / "out" / "results.csv").open(encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def test_dist_all_methods_agree_on_minkowski(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    code = _main(tmp_path, monkeypatch, "dist", *FAST_DIST)
    rows = _rows(tmp_path)

    assert code == EXIT_OK
    assert [row["method"] for row in rows] == ["analytic", "curve-oracle", "steep-variational"]
    assert float(rows[0]["value"]) == pytest.approx(math.sqrt(3))
    assert float(rows[1]["value"]) == pytest.approx(math.sqrt(3), abs=1e-3)
    assert float(rows[2]["value"]) == pytest.approx(math.sqrt(3), abs=1e-6)
    assert all(row["status"] == "ok" and row["tolerance"] for row in rows)
    assert rows[0]["p"] == "0 0"
    assert (tmp_path / "out" / "dist-curve-oracle.certificate.csv").exists()
    assert (tmp_path / "out" / "dist-steep-variational.certificate.csv").exists()
    assert (tmp_path / "logs" / "run.log").exists()


def test_dist_just_outside_the_cone_is_zero_for_every_method(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    code = _main(
        tmp_path, monkeypatch, "dist", "--n", "2", "--p", "0,0", "--q", "1,1.00005", "--starts", "2"
    )
    rows = _rows(tmp_path)

    assert code == EXIT_OK
    assert len(rows) == 3
    assert all(float(row["value"]) == 0.0 for row in rows)


def test_results_are_byte_identical_for_same_seed(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    _main(tmp_path, monkeypatch, "dist", *FAST_DIST, "--seed", "5")
    first = (tmp_path / "out" / "results.csv").read_bytes()
    _main(tmp_path, monkeypatch, "dist", *FAST_DIST, "--seed", "5")
    second = (tmp_path / "out" / "results.csv").read_bytes()

    assert first == second


def test_verify_clifford_passes(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture[str]
) -> None:
    code = _main(tmp_path, monkeypatch, "verify-clifford", "--n", "5", "--tol", "1e-12")
    (row,) = _rows(tmp_path)

    assert code == EXIT_OK
    assert row["status"] == "ok"
    assert row["tolerance"] == "1e-12"
    assert float(row["value"]) <= 1e-12
    assert "lorentz-distance results" in capsys.readouterr().out


def test_equivalence_scan_on_flrw(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    code = _main(
        tmp_path,
        monkeypatch,
        "equivalence-scan",
        "--model",
        "flrw",
        "--a",
        "t",
        "--n",
        "2",
        "--trials",
        "1000",
        "--seed",
        "7",
    )
    rows = _rows(tmp_path)

    assert code == EXIT_OK
    assert [row["method"] for row in rows] == ["causal-equivalence", "steep-equivalence"]
    assert all(float(row["value"]) == 1.0 for row in rows)
    assert all(row["seed"] == "7" for row in rows)


def test_check_steep_reports_both_routes(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    code = _main(tmp_path, monkeypatch, "check-steep", "--n", "2", "--point", "0,0", "--df", "1,1")
    rows = _rows(tmp_path)

    assert code == EXIT_OK
    assert [row["method"] for row in rows] == ["gradient", "operator"]
    assert all(float(row["value"]) == 0.0 for row in rows)


def test_gap_on_minkowski(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    code = _main(tmp_path, monkeypatch, "gap", *FAST_DIST, "--family", "momentum")
    rows = _rows(tmp_path)

    assert code == EXIT_OK
    assert [row["method"] for row in rows] == ["curve-oracle", "steep-variational"]
    assert abs(float(rows[0]["gap"])) <= 2e-3
    assert rows[0]["tolerance"] == "0.005"


def test_config_errors_exit_with_usage_code(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture[str]
) -> None:
    bad_scale = _main(
        tmp_path, monkeypatch, "dist", "--model", "flrw", "--a", "sin(t)", *FAST_DIST
    )
    missing = _main(tmp_path, monkeypatch, "run", "--config", str(tmp_path / "nope.toml"))

    assert bad_scale == EXIT_USAGE
    assert missing == EXIT_USAGE
    assert "Cannot read scenario file" in capsys.readouterr().err
    assert not (tmp_path / "out" / "results.csv").exists()


def test_unknown_command_is_a_usage_error() -> None:
    with pytest.raises(SystemExit) as exc_info:
        main(["integrate"])

    assert exc_info.value.code == EXIT_USAGE


def test_failed_task_exits_with_failure_code(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    def no_steep_member(*args: object, **kwargs: object) -> None:
        raise EmptyFamilyError("Family boost has no member steep on its validation grid")

    monkeypatch.setattr(runner, "steep_family_distance", no_steep_member)

    code = _main(tmp_path, monkeypatch, "dist", *FAST_DIST, "--method", "steep")
    (row,) = _rows(tmp_path)

    assert code == EXIT_FAILED
    assert row["status"] == "fail"
    assert row["value"] == "nan"


def test_run_scenario_file(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    config = tmp_path / "scenario.toml"
    config.write_text(
        "\n".join(
            [
                "[model]",
                'kind = "minkowski"',
                "n = 3",
                "",
                "[points]",
                "p = [0.0, 0.0, 0.0]",
                "q = [1.0, 2.0, 0.0]",
                "",
                "[[tasks]]",
                'id = "spacelike"',
                'kind = "dist"',
                'p = "p"',
                'q = "q"',
                "segments = 8",
                "starts = 2",
                "",
                "[[tasks]]",
                'id = "odd-extension"',
                'kind = "verify-clifford"',
                'extend = "odd"',
            ]
        ),
        encoding="utf-8",
    )

    code = _main(tmp_path, monkeypatch, "run", "--config", str(config))
    rows = _rows(tmp_path)

    assert code == EXIT_OK
    assert [float(row["value"]) for row in rows[:3]] == [0.0, 0.0, 0.0]
    assert rows[3]["method"] == "clifford-extend-odd"
    assert rows[3]["n"] == "4"
