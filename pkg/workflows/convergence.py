"""Spatial convergence studies measured by the manifold distance to a reference curve."""

from __future__ import annotations

import asyncio
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from tools.diagnostics import convergence_order
from tools.geometry import ClosedCurve
from tools.polygon import manifold_distance
from workflows import storage
from workflows.runtime import SimulationRuntime
from workflows.schemas import SimConfig

logger = logging.getLogger(__name__)

# A reference is a fine-grid run, one curve (single requested time) or a curve CSV.
Reference = Union[SimConfig, ClosedCurve, str, Path]


@dataclass(frozen=True)
class ConvergenceTable:
    time: float
    h: List[float]
    errors: List[float]
    orders: List[float]

    def write_csv(self, path: Union[str, Path]) -> Path:
        return storage.write_convergence_csv(self.h, self.errors, self.orders, path)


def refined_config(base: SimConfig, h: float, t_end: float) -> SimConfig:
    """Copy of ``base`` with N = 1/h and the time step tau = h^2."""
    n = int(round(1.0 / h))
    if n < 8 or not np.isclose(n * h, 1.0, rtol=1e-9):
        raise ValueError(f"h={h} must be 1/N for an integer N >= 8")
    return base.model_copy(update={"N": n, "tau": h * h, "t_end": t_end, "output_dir": None})


def _check_halving(h_list: Sequence[float]) -> List[float]:
    h = [float(v) for v in h_list]
    if len(h) < 2:
        raise ValueError("a convergence study needs at least two mesh sizes")
    ratios = np.asarray(h[:-1]) / np.asarray(h[1:])
    if not np.allclose(ratios, 2.0, rtol=1e-9):
        raise ValueError(f"mesh sizes must halve strictly, got {h}")
    return h


async def run_convergence_async(
    base: SimConfig,
    h_list: Sequence[float],
    reference: Reference,
    times: Sequence[float],
    threads: Optional[int] = None,
    force: bool = False,
    out_dir: Optional[Path] = None,
) -> Dict[float, ConvergenceTable]:
    """Run every refinement (and a reference run if given a config) in parallel.

    When ``out_dir`` is set each run writes into its own ``h_<N>`` directory.
    """
    h = _check_halving(h_list)
    times = sorted(float(t) for t in times)
    if not times:
        raise ValueError("at least one comparison time is required")
    if not isinstance(reference, SimConfig) and len(times) != 1:
        raise ValueError("a fixed reference curve can only be compared at a single time")
    t_end = times[-1]
    runtime = SimulationRuntime(threads)

    cfgs = [refined_config(base, value, t_end) for value in h]
    dirs = [Path(out_dir) / f"h_{cfg.N}" if out_dir is not None else None for cfg in cfgs]
    jobs = [runtime.run_many(cfgs, force=force, capture_times=times, out_dirs=dirs)]

    if isinstance(reference, SimConfig):
        ref_cfg = reference.model_copy(update={"t_end": max(t_end, reference.tau), "output_dir": None})
        ref_dir = Path(out_dir) / "reference" if out_dir is not None else None
        jobs.append(runtime.run(ref_cfg, force=force, capture_times=times, out_dir=ref_dir))
        logger.info(f"Convergence study: {len(cfgs)} runs plus reference N={ref_cfg.N}, tau={ref_cfg.tau:g} on {runtime.threads} threads")
    else:
        logger.info(f"Convergence study: {len(cfgs)} runs against a fixed reference curve on {runtime.threads} threads")

    outcomes = await asyncio.gather(*jobs)
    results = outcomes[0]
    if isinstance(reference, SimConfig):
        ref_curves = outcomes[1].captured
    else:
        curve = reference if isinstance(reference, ClosedCurve) else storage.read_curve_csv(reference)
        ref_curves = {times[0]: curve}

    tables: Dict[float, ConvergenceTable] = {}
    for t in times:
        errors = [manifold_distance(result.captured[t], ref_curves[t]) for result in results]
        orders = convergence_order(list(zip(h, errors))).tolist() if all(e > 0 for e in errors) else [float("nan")] * (len(h) - 1)
        tables[t] = ConvergenceTable(time=t, h=h, errors=errors, orders=orders)
        logger.info(f"t={t:g}: errors {', '.join(f'{e:.3e}' for e in errors)}; orders {', '.join(f'{o:.3f}' for o in orders)}")
    return tables


def run_convergence(
    base: SimConfig,
    h_list: Sequence[float],
    reference: Reference,
    times: Sequence[float],
    threads: Optional[int] = None,
    force: bool = False,
    out_dir: Optional[Path] = None,
) -> Dict[float, ConvergenceTable]:
    return asyncio.run(run_convergence_async(base, h_list, reference, times, threads=threads, force=force, out_dir=out_dir))


def write_convergence_tables(tables: Dict[float, ConvergenceTable], out_dir: Path) -> List[Path]:
    """convergence.csv for a single time, convergence_t<time>.csv for several."""
    out_dir = Path(out_dir)
    if len(tables) == 1:
        (table,) = tables.values()
        return [table.write_csv(out_dir / "convergence.csv")]
    return [table.write_csv(out_dir / f"convergence_t{t:g}.csv") for t, table in sorted(tables.items())]
