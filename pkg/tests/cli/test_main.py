"""Tests for the aniflow command line."""

from __future__ import annotations

import json

import numpy as np
import pytest

from cli.main import EXIT_CONDITION, EXIT_INPUT, EXIT_OK, EXIT_SOLVER, main, parse_anisotropy
from tests.helpers import square
from workflows import storage
from workflows.schemas import IsotropicSpec, KFoldSpec, TableSpec


def _write_config(path, **overrides):
    payload = {
        "flow": "surface_diffusion",
        "anisotropy": {"kind": "isotropic"},
        "N": 16,
        "tau": 1e-3,
        "t_end": 3e-3,
        "stabilizer": {"mode": "constant", "value": 0.0},
        "initial_shape": {"kind": "ellipse", "a": 1.5, "b": 1.0},
        "snapshot_every": 2,
    }
    payload.update(overrides)
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def test_parse_anisotropy():
    spec = parse_anisotropy("kfold:beta=0.333333,k=3")
    assert isinstance(spec, KFoldSpec)
    assert spec.beta == pytest.approx(0.333333)
    assert spec.k == 3
    assert isinstance(parse_anisotropy("isotropic"), IsotropicSpec)
    table = parse_anisotropy("table:file=gamma.csv")
    assert isinstance(table, TableSpec)
    assert table.path.name == "gamma.csv"
    with pytest.raises(ValueError):
        parse_anisotropy("kfold:beta")


def test_check_gamma(capsys):
    assert main(["check-gamma", "--anisotropy", "kfold:beta=0.333333"]) == EXIT_OK
    assert "holds" in capsys.readouterr().out
    assert main(["check-gamma", "--anisotropy", "kfold:beta=0.6", "--grid", "360"]) == EXIT_CONDITION
    assert "FAILS" in capsys.readouterr().out


def test_bad_anisotropy_is_an_input_error(capsys):
    assert main(["check-gamma", "--anisotropy", "kfold:beta=2"]) == EXIT_INPUT
    assert main(["check-gamma", "--anisotropy", "hexagonal"]) == EXIT_INPUT
    assert "error:" in capsys.readouterr().err


def test_k0_table(tmp_path, capsys):
    out = tmp_path / "k0.csv"
    code = main(["k0-table", "--anisotropy", "case1", "--points", "4", "--grid", "128", "--out", str(out)])
    assert code == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "theta,k0"
    assert len(lines) == 5
    assert str(out) in capsys.readouterr().out


def test_k0_table_refuses_violated_condition(tmp_path):
    code = main(["k0-table", "--anisotropy", "kfold:beta=0.6", "--points", "4", "--grid", "128", "--out", str(tmp_path / "k0.csv")])
    assert code == EXIT_CONDITION


def test_distance(tmp_path, capsys):
    first = storage.write_curve_csv(square(), tmp_path / "a.csv")
    second = storage.write_curve_csv(square(x0=0.5), tmp_path / "b.csv")
    assert main(["distance", str(first), str(second)]) == EXIT_OK
    assert float(capsys.readouterr().out) == pytest.approx(1.0)


def test_distance_rejects_bow_tie(tmp_path):
    bow_tie = tmp_path / "bow.csv"
    bow_tie.write_text("x,y\n0,0\n0,1\n1,0\n1,1\n")
    other = storage.write_curve_csv(square(), tmp_path / "a.csv")
    assert main(["distance", str(bow_tie), str(other)]) == EXIT_INPUT


def test_simulate_writes_outputs(tmp_path, capsys):
    cfg = _write_config(tmp_path / "run.json", output_dir=str(tmp_path / "out"))
    assert main(["--log-level", "WARNING", "simulate", "--config", str(cfg), "--plots"]) == EXIT_OK
    out = tmp_path / "out"
    assert {p.name for p in out.iterdir()} == {
        "curve_000000.csv",
        "curve_000002.csv",
        "curve_000003.csv",
        "diagnostics.csv",
        "summary.json",
        "plot_run.py",
    }
    assert "final area" in capsys.readouterr().out
    assert storage.read_summary_json(out / "summary.json").steps == 3


def test_simulate_output_dir_flag_and_semi_implicit(tmp_path):
    cfg = _write_config(tmp_path / "run.json")
    out = tmp_path / "elsewhere"
    assert main(["simulate", "--config", str(cfg), "--output-dir", str(out), "--semi-implicit"]) == EXIT_OK
    summary = storage.read_summary_json(out / "summary.json")
    assert summary.implicit is False
    assert summary.max_newton_iterations == 1
    diag = storage.read_diagnostics_csv(out / "diagnostics.csv")
    assert np.all(diag["mesh_ratio"] >= 1)


def test_simulate_exit_codes(tmp_path, capsys):
    invalid = _write_config(tmp_path / "invalid.json", N=4)
    assert main(["simulate", "--config", str(invalid)]) == EXIT_INPUT
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == EXIT_INPUT

    violated = _write_config(tmp_path / "violated.json", anisotropy={"kind": "kfold", "beta": 0.6})
    assert main(["simulate", "--config", str(violated), "--output-dir", str(tmp_path / "v")]) == EXIT_CONDITION

    failing = _write_config(tmp_path / "failing.json", newton={"max_iterations": 1})
    capsys.readouterr()
    assert main(["simulate", "--config", str(failing), "--output-dir", str(tmp_path / "f")]) == EXIT_SOLVER
    err = capsys.readouterr().err
    assert "Step 1 failed" in err
    assert "tau=0.0005" in err


def test_converge(tmp_path, capsys):
    base = _write_config(tmp_path / "base.json", N=8, t_end=1e-3)
    reference = _write_config(tmp_path / "reference.json", N=32, tau=1 / 1024, t_end=0.0625)
    out = tmp_path / "study"
    code = main([
        "converge",
        "--config", str(base),
        "--h", "0.125,0.0625",
        "--reference", str(reference),
        "--time", "0.0625",
        "--out", str(out),
        "--threads", "2",
        "--keep-runs",
    ])
    assert code == EXIT_OK
    assert (out / "convergence.csv").exists()
    assert (out / "h_16" / "diagnostics.csv").exists()
    assert "order=" in capsys.readouterr().out


def test_converge_against_reference_curve(tmp_path):
    base = _write_config(tmp_path / "base.json", N=8, t_end=1e-3)
    ref_curve = storage.write_curve_csv(square(-1.0, -1.0, 2.0), tmp_path / "ref.csv")
    out = tmp_path / "study"
    code = main(["converge", "--config", str(base), "--h", "0.125,0.0625", "--reference", str(ref_curve), "--time", "0.0625", "--out", str(out)])
    assert code == EXIT_OK
    data = np.loadtxt(out / "convergence.csv", delimiter=",", skiprows=1)
    assert data.shape == (2, 3)
    assert np.all(data[:, 1] > 0)
