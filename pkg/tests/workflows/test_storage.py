"""Tests for curve, diagnostics, summary and convergence files."""

from __future__ import annotations

import json

import numpy as np
import pytest

from tools.geometry import ellipse_curve, polygon_area
from workflows import storage
from workflows.schemas import DiagnosticsRecord, FlowKind, RunSummary


def _summary(**overrides):
    fields = dict(
        flow=FlowKind.SURFACE_DIFFUSION,
        anisotropy="kfold",
        N=16,
        tau=1e-3,
        t_end=0.01,
        steps=10,
        implicit=True,
        final_area=1.5,
        final_energy=6.2,
        max_abs_rel_area_loss=3e-15,
        monotone_energy=True,
        max_newton_iterations=2,
    )
    fields.update(overrides)
    return RunSummary(**fields)


def test_curve_csv_is_lossless(tmp_path):
    curve = ellipse_curve(2.0, 0.5, 37)
    path = storage.write_curve_csv(curve, tmp_path / "nested" / "curve.csv")
    assert path.read_text().splitlines()[0] == "x,y"
    np.testing.assert_array_equal(storage.read_curve_csv(path).nodes, curve.nodes)


def test_read_curve_reorients_counterclockwise_input(tmp_path):
    path = tmp_path / "ccw.csv"
    path.write_text("x,y\n0,0\n1,0\n1,1\n0,1\n")
    curve = storage.read_curve_csv(path)
    assert polygon_area(curve) == pytest.approx(1.0)


def test_read_curve_drops_closing_duplicate(tmp_path, caplog):
    path = tmp_path / "closed.csv"
    path.write_text("x,y\n0,0\n0,1\n1,1\n1,0\n0,0\n")
    with caplog.at_level("WARNING"):
        curve = storage.read_curve_csv(path)
    assert curve.size == 4
    assert "closing node" in caplog.text


def test_read_curve_rejects_bad_files(tmp_path):
    wrong_header = tmp_path / "header.csv"
    wrong_header.write_text("a,b\n0,0\n0,1\n1,1\n")
    with pytest.raises(ValueError):
        storage.read_curve_csv(wrong_header)
    three_columns = tmp_path / "columns.csv"
    three_columns.write_text("x,y\n0,0,0\n0,1,0\n1,1,0\n")
    with pytest.raises(ValueError):
        storage.read_curve_csv(three_columns)


def test_snapshot_name():
    assert storage.snapshot_name(0) == "curve_000000.csv"
    assert storage.snapshot_name(8192) == "curve_008192.csv"


def test_diagnostics_csv(tmp_path):
    records = [
        DiagnosticsRecord(step=0, t=0.0, area=1.5, energy=6.0, rel_area_loss=0.0, norm_energy=1.0, mesh_ratio=1.0, newton_iters=0),
        DiagnosticsRecord(step=1, t=1e-3, area=1.5, energy=5.9, rel_area_loss=-1e-16, norm_energy=5.9 / 6.0, mesh_ratio=1.01, newton_iters=2),
    ]
    path = storage.write_diagnostics_csv(records, tmp_path / "diagnostics.csv")
    assert path.read_text().splitlines()[0] == "t,area,energy,rel_area_loss,norm_energy,mesh_ratio,newton_iters"
    assert path.read_text().splitlines()[2].endswith(",2")
    data = storage.read_diagnostics_csv(path)
    assert data.shape == (2,)
    np.testing.assert_array_equal(data["energy"], [6.0, 5.9])
    np.testing.assert_array_equal(data["newton_iters"], [0, 2])
    assert data["rel_area_loss"][1] == -1e-16


def test_summary_json_round_trip(tmp_path):
    summary = _summary(condition_forced=True)
    path = storage.write_summary_json(summary, tmp_path / "summary.json")
    payload = json.loads(path.read_text())
    assert payload["flow"] == "surface_diffusion"
    assert payload["condition_forced"] is True
    assert storage.read_summary_json(path) == summary


def test_convergence_csv(tmp_path):
    path = storage.write_convergence_csv([0.125, 0.0625, 0.03125], [4e-3, 1e-3, 2.5e-4], [2.0, 2.0], tmp_path / "convergence.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "h,error,order"
    assert lines[1].endswith(",nan")
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    np.testing.assert_allclose(data[1:, 2], 2.0)
    np.testing.assert_array_equal(data[:, 0], [0.125, 0.0625, 0.03125])
