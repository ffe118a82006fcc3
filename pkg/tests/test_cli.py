"""Tests for the lowsync-bench command line."""

import json
from pathlib import Path

from typer.testing import CliRunner

from lowsync_krylov import __version__, requirement
from lowsync_krylov.cli import EXIT_ALL_FAILED, EXIT_IO, EXIT_OK, app
from lowsync_krylov.reporter import read_results

runner = CliRunner()

SMALL_BENCH = """
repetitions = 1
output = "out"

[[problems]]
name = "tridiag"
n = 40
m = 12
tol = 1e-8

[[configurations]]
skeleton = "bmgs"

[[configurations]]
skeleton = "bcgs_pip"

[[configurations]]
paradigm = "global"
skeleton = "bmgs_icwy"

[[configurations]]
skeleton = "bmgs_lts"
muscle = "cholqr"
"""


def _config(tmp_path: Path, text: str) -> Path:
    path = tmp_path / "bench.toml"
    path.write_text(text)
    return path


@requirement("CLI-030", "`run` writes results, summary and history files")
def test_run_writes_outputs(tmp_path):
    result = runner.invoke(app, ["run", str(_config(tmp_path, SMALL_BENCH))])
    assert result.exit_code == EXIT_OK, result.output

    out = tmp_path / "out"
    rows = read_results(out / "results.csv")
    assert len(rows) == 3
    assert all(r.status != "error" for r in rows)
    assert next(r for r in rows if r.label == "cl-BMGS∘CholQR-FOM").status == "converged"
    assert max(rows, key=lambda r: r.time_s).accel_pct == 0.0
    assert all(r.sync_ct > 0 and r.a_ct >= r.iter_ct for r in rows)

    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert len(summary["runs"]) == 3
    assert summary["rejected"][0]["entry"] == {"skeleton": "bmgs_lts", "muscle": "cholqr"}
    assert (out / "history_cl-bmgs-cholqr-fom_tridiag.csv").exists()
    assert (out / "history_gl-bmgs_icwy-fom_tridiag.csv").exists()
    assert "Issues Found:" in result.output


@requirement("CLI-031", "command-line options override the benchmark file")
def test_run_overrides(tmp_path):
    other = tmp_path / "elsewhere"
    result = runner.invoke(
        app,
        ["run", str(_config(tmp_path, SMALL_BENCH)), "--out", str(other), "-r", "2",
         "--diagnostics", "iteration", "--workers", "2"],
    )
    assert result.exit_code == EXIT_OK, result.output
    assert (other / "results.csv").exists()
    assert not (tmp_path / "out").exists()

    summary = json.loads((other / "summary.json").read_text(encoding="utf-8"))
    assert all(len(run["times"]) == 2 for run in summary["runs"])
    history = (other / "history_cl-bmgs-cholqr-fom_tridiag.csv").read_text().splitlines()
    assert history[0] == "cycle,iter,relres_est,relerr,kappa,loo"
    assert all(not line.endswith(",") for line in history[1:])


@requirement("CLI-032", "an empty benchmark file succeeds with empty results")
def test_run_empty_config(tmp_path):
    result = runner.invoke(app, ["run", str(_config(tmp_path, "")), "-o", str(tmp_path / "o")])
    assert result.exit_code == EXIT_OK
    assert read_results(tmp_path / "o" / "results.csv") == []


@requirement("CLI-033", "a missing or malformed benchmark file exits with code 1")
def test_run_bad_config(tmp_path):
    result = runner.invoke(app, ["run", str(tmp_path / "missing.toml")])
    assert result.exit_code == EXIT_IO
    result = runner.invoke(app, ["run", str(_config(tmp_path, "repetitions = [\n"))])
    assert result.exit_code == EXIT_IO


@requirement("CLI-034", "exit code 2 when every attempted run failed")
def test_run_all_failed(tmp_path):
    text = """
[[problems]]
name = "absent"
path = "absent.mtx"
s = 2
m = 5
tol = 1e-6

[[configurations]]
skeleton = "bmgs"
"""
    result = runner.invoke(
        app, ["run", str(_config(tmp_path, text)), "-o", str(tmp_path / "o")]
    )
    assert result.exit_code == EXIT_ALL_FAILED
    summary = json.loads((tmp_path / "o" / "summary.json").read_text(encoding="utf-8"))
    assert summary["problem_errors"][0]["problem"] == "absent"


@requirement("CLI-035", "--version prints the version")
def test_version():
    result = runner.invoke(app, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


@requirement("CLI-036", "the skeleton catalogue is available as command and flag")
def test_list_skeletons():
    for args in (["list-skeletons"], ["--list-skeletons"]):
        result = runner.invoke(app, args)
        assert result.exit_code == 0
        assert "BCGSIROLS" in result.output
