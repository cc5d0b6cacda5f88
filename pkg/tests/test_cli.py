import json
import subprocess
import sys
from pathlib import Path
from textwrap import dedent

import pytest

import marginalrg.funcspace as fs
from marginalrg.cli import main
from marginalrg.funcspace import GridSpec, SpectralFunction
from marginalrg.rgflow import TRACE_COLUMNS

CANONICAL = Path(__file__).resolve().parents[1] / "configs" / "canonical.yaml"

SMALL_FLOW = dedent(
    """
    time: {p: 1.0}
    grid: {n_points: 1024, x_max: 40.0}
    nonlinearity:
      mu: 0.05
      lam: 0.01
      terms: [[3, 1.0]]
    flow: {L: 2.0, n_steps: 3, A0: 0.05}
    """
)


def write_config(tmp_path, text, name="run.yaml"):
    path = tmp_path / name
    path.write_text(dedent(text))
    return str(path)


def run_cli(*argv):
    return main(list(argv))


def test_flow_canonical_contract(tmp_path, capsys):
    code = run_cli(
        "flow", "--config", str(CANONICAL), "--out", str(tmp_path), "--label", "canon"
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "final amplitude" in out
    assert "decreasing on [5, end]" in out
    lines = (tmp_path / "canon_trace.csv").read_text().splitlines()
    assert lines[0] == ",".join(TRACE_COLUMNS)
    assert len(lines) == 14
    manifest = json.loads((tmp_path / "canon_manifest.json").read_text())
    assert manifest["completed"] is True
    assert manifest["rows"] == 13
    assert manifest["command"] == "flow"
    assert manifest["config"]["nonlinearity"]["mu"] == 0.05


def test_flow_is_bit_reproducible(tmp_path):
    cfg = write_config(tmp_path, SMALL_FLOW)
    for label in ("a", "b"):
        assert run_cli("flow", "--config", cfg, "--out", str(tmp_path), "--label", label) == 0
    assert (tmp_path / "a_trace.csv").read_bytes() == (tmp_path / "b_trace.csv").read_bytes()


def test_flow_solver_failure_writes_partial_trace(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        SMALL_FLOW.replace("flow:", "solver: {norm_guard: 1.0e-6}\nflow:"),
    )
    code = run_cli("flow", "--config", cfg, "--out", str(tmp_path), "--label", "part")
    assert code == 3
    assert "solver failure" in capsys.readouterr().err
    lines = (tmp_path / "part_trace.csv").read_text().splitlines()
    assert len(lines) == 2
    manifest = json.loads((tmp_path / "part_manifest.json").read_text())
    assert manifest["completed"] is False
    assert manifest["failure"].startswith("level 0")


def test_exit_2_names_the_violated_condition(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        """
        time: {p: 1.0}
        nonlinearity: {mu: 0.05, lam: 0.1, terms: [[3, 1.0]]}
        """,
    )
    assert run_cli("flow", "--config", cfg, "--out", str(tmp_path)) == 2
    assert "|lambda| < mu" in capsys.readouterr().err

    cfg = write_config(tmp_path, "time: {p: 1.0}\nkernel: {d: 3.0}\n", name="alpha.yaml")
    assert run_cli("flow", "--config", cfg, "--out", str(tmp_path)) == 2
    assert "2.5" in capsys.readouterr().err

    assert run_cli("flow", "--out", str(tmp_path)) == 2
    assert "--config" in capsys.readouterr().err


def test_beta_json_contract(tmp_path, capsys):
    import math

    code = run_cli(
        "beta", "--config", str(CANONICAL), "--out", str(tmp_path), "--label", "b"
    )
    assert code == 0
    data = json.loads(capsys.readouterr().out)
    assert set(data) == {
        "R_direct",
        "R_oracle",
        "beta",
        "beta_star_lo",
        "beta_star_hi",
        "beta_n_table",
        "A_prefactor",
    }
    assert data["beta"] == pytest.approx(math.log(2.0) / (2.0 * math.sqrt(math.pi)), rel=1e-10)
    assert data["R_direct"] == pytest.approx(math.sqrt(math.pi / 2.0), abs=1e-6)
    assert data["beta_star_lo"] < data["beta"] < data["beta_star_hi"]
    assert len(data["beta_n_table"]) == 11
    on_disk = json.loads((tmp_path / "b_beta.json").read_text())
    assert on_disk == data


def test_verify_power_model_passes(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        """
        time: {p: 1.0, r_model: power, delta: 0.5, coeff: 1.0}
        flow: {n_steps: 3}
        """,
    )
    code = run_cli("verify", "--config", cfg, "--out", str(tmp_path), "--label", "v")
    assert code == 0
    out = capsys.readouterr().out
    assert "overall: PASS" in out
    report = json.loads((tmp_path / "v_report.json").read_text())["report"]
    assert report["passed"] is True
    names = [c["name"] for c in report["checks"]]
    assert "beta_convergence" in names
    assert "flow_monotonicity" not in names


@pytest.mark.filterwarnings("ignore::marginalrg.errors.UnderResolvedWarning")
def test_verify_coarse_grid_fails(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        """
        time: {p: 1.0}
        grid: {n_points: 256, x_max: 80.0}
        nonlinearity:
          mu: 0.05
          lam: 0.01
          terms: [[3, 1.0]]
        """,
    )
    code = run_cli("verify", "--config", cfg, "--out", str(tmp_path), "--label", "c")
    assert code == 1
    assert "overall: FAIL" in capsys.readouterr().out
    report = json.loads((tmp_path / "c_report.json").read_text())["report"]
    assert report["passed"] is False
    by_name = {c["name"]: c for c in report["checks"]}
    assert by_name["fixed_point"]["passed"] is False


def test_direct_artifacts(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        """
        time: {p: 1.0}
        grid: {n_points: 1024, x_max: 40.0}
        """,
    )
    code = run_cli("direct", "--config", cfg, "--out", str(tmp_path), "--label", "d")
    assert code == 0
    assert "4096 points" in capsys.readouterr().out
    lines = (tmp_path / "d_direct.csv").read_text().splitlines()
    assert lines[0] == "t,omega,re_fhat,im_fhat"
    assert len(lines) == 1 + 4 * 4096
    manifest = json.loads((tmp_path / "d_manifest.json").read_text())
    assert manifest["t_end"] == 8.0
    assert manifest["landmark_times"] == [1.0, 2.0, 4.0, 8.0]
    assert manifest["solution_grid"] == {"n_points": 4096, "x_max": 160.0}


def test_norm_roundtrip(tmp_path, capsys):
    import numpy as np

    grid = GridSpec(1024, 40.0)
    f = SpectralFunction(grid, np.exp(-grid.omega**2))
    path = tmp_path / "f.csv"
    fs.to_csv(f, path)
    assert run_cli("norm", str(path)) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["q"] == 2
    assert data["bq_norm"] == pytest.approx(fs.weighted_norm(f, 2), rel=1e-12)

    assert run_cli("norm", str(tmp_path / "absent.csv")) == 2

    cfg = write_config(tmp_path, "time: {p: 3.0}\nkernel: {d: 4.0, q: 4}\n")
    assert run_cli("norm", "--config", cfg, str(path)) == 0
    data4 = json.loads(capsys.readouterr().out)
    assert data4["q"] == 4
    assert data4["bq_norm"] == pytest.approx(fs.weighted_norm(f, 4), rel=1e-12)


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "marginalrg", "--version"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == "0.1.0"
