from __future__ import annotations

import json

import pytest

from automix.cli import main
from conftest import write_session


@pytest.fixture(scope="module")
def session_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("session")
    write_session(
        path,
        seeds=[41, 42],
        seconds=0.8,
        optimizer={"memory_size": 4, "max_iterations": 6},
        seed=5,
    )
    return path


def test_run_writes_report_and_figures(session_dir, tmp_path):
    out = tmp_path / "out"
    code = main(["run", str(session_dir / "session.json"), "--out", str(out)])
    assert code == 0
    for name in (
        "mix.wav",
        "report.json",
        "trace.csv",
        "positions.csv",
        "trace.png",
        "spectra.png",
        "positions.png",
    ):
        assert (out / name).exists(), name
    payload = json.loads((out / "report.json").read_text())
    assert payload["seed"] == 5
    assert payload["iterations"] == 6


def test_seed_and_iteration_overrides(session_dir, tmp_path):
    out = tmp_path / "out"
    code = main(
        [
            "run",
            str(session_dir / "session.json"),
            "--out",
            str(out),
            "--seed",
            "9",
            "--max-iter",
            "3",
            "--no-plots",
        ]
    )
    assert code == 0
    payload = json.loads((out / "report.json").read_text())
    assert payload["seed"] == 9
    assert payload["iterations"] == 3
    assert not (out / "trace.png").exists()


def test_dump_bands_writes_table(session_dir, tmp_path):
    out = tmp_path / "out"
    code = main(
        [
            "run",
            str(session_dir / "session.json"),
            "--out",
            str(out),
            "--no-plots",
            "--dump-bands",
        ]
    )
    assert code == 0
    lines = (out / "bands.csv").read_text().strip().splitlines()
    assert lines[0] == "band,lower_hz,center_hz,upper_hz,center_bark"
    assert len(lines) == 1 + 109


def test_target_lufs_override_shifts_stem_levels(session_dir, tmp_path):
    reports = {}
    for target in (-23.0, -33.0):
        out = tmp_path / f"out{int(-target)}"
        code = main(
            [
                "run",
                str(session_dir / "session.json"),
                "--out",
                str(out),
                "--target-lufs",
                str(target),
                "--max-iter",
                "2",
                "--no-plots",
            ]
        )
        assert code == 0
        reports[target] = json.loads((out / "report.json").read_text())

    quiet, loud = reports[-33.0], reports[-23.0]
    for row_quiet, row_loud in zip(quiet["loudness_table"], loud["loudness_table"]):
        assert row_quiet["lufs_before"] == row_loud["lufs_before"]
        assert row_quiet["lufs_after"] <= row_loud["lufs_after"] - 2.0


def test_missing_manifest_reports_and_fails(tmp_path, capsys):
    code = main(["run", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_invalid_session_reports_and_fails(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"scenario": "x", "tracks": [{"id": "a", "path": "a.wav"}]}))
    code = main(["run", str(bad), "--out", str(tmp_path / "o")])
    assert code == 1
    assert "at least 2 tracks" in capsys.readouterr().err
