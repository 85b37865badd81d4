"""File storage for curves, per-step diagnostics, run summaries and convergence tables."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from templates import render_plot_script
from tools.geometry import ClosedCurve, ensure_clockwise
from workflows.schemas import DiagnosticsRecord, RunSummary

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

CURVE_HEADER = "x,y"
FLOAT_FORMAT = "%.17g"


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def read_curve_csv(path: PathLike) -> ClosedCurve:
    """Read a curve CSV (header ``x,y``, no closing duplicate) and orient it clockwise."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as handle:
        header = handle.readline().strip().replace(" ", "")
    if header != CURVE_HEADER:
        raise ValueError(f"{path}: expected header '{CURVE_HEADER}', got '{header}'")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns, got {data.shape[1]}")
    if data.shape[0] > 3 and np.array_equal(data[0], data[-1]):
        logger.warning(f"{path}: dropping duplicated closing node")
        data = data[:-1]
    return ensure_clockwise(ClosedCurve(data))


def write_curve_csv(curve: ClosedCurve, path: PathLike) -> Path:
    path = _prepare(path)
    np.savetxt(path, curve.nodes, fmt=FLOAT_FORMAT, delimiter=",", header=CURVE_HEADER, comments="")
    return path


def snapshot_name(step: int) -> str:
    return f"curve_{step:06d}.csv"


def write_diagnostics_csv(records: Iterable[DiagnosticsRecord], path: PathLike) -> Path:
    path = _prepare(path)
    rows = [record.csv_row() for record in records]
    fmt = [FLOAT_FORMAT] * (len(DiagnosticsRecord.CSV_COLUMNS) - 1) + ["%d"]
    data = np.array(rows, dtype=float).reshape(-1, len(DiagnosticsRecord.CSV_COLUMNS))
    np.savetxt(path, data, fmt=fmt, delimiter=",", header=",".join(DiagnosticsRecord.CSV_COLUMNS), comments="")
    return path


def read_diagnostics_csv(path: PathLike) -> np.ndarray:
    """Structured array with one field per diagnostics column."""
    return np.genfromtxt(path, delimiter=",", names=True, dtype=None)


def write_summary_json(summary: RunSummary, path: PathLike) -> Path:
    path = _prepare(path)
    path.write_text(summary.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def read_summary_json(path: PathLike) -> RunSummary:
    return RunSummary.model_validate_json(Path(path).read_text(encoding="utf-8"))


def write_plot_script(title: str, path: PathLike) -> Path:
    """Matplotlib script plotting the snapshots and diagnostics found next to ``path``."""
    path = _prepare(path)
    path.write_text(render_plot_script(title), encoding="utf-8")
    return path


def write_convergence_csv(h: Sequence[float], errors: Sequence[float], orders: Sequence[float], path: PathLike) -> Path:
    """Columns h,error,order; the coarsest row has no order and carries nan."""
    path = _prepare(path)
    order_column = np.concatenate([[np.nan], np.asarray(orders, dtype=float)])
    data = np.column_stack([np.asarray(h, dtype=float), np.asarray(errors, dtype=float), order_column])
    np.savetxt(path, data, fmt=FLOAT_FORMAT, delimiter=",", header="h,error,order", comments="")
    return path
