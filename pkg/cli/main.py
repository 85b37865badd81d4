"""aniflow command line: simulate, converge, k0-table, check-gamma and distance.

Exit codes: 0 success, 2 invalid input, 3 energy-stability condition violated,
4 solver failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from pydantic import TypeAdapter, ValidationError

import config
from tools.anisotropy import check_stability_condition
from tools.errors import AniflowError, ConditionViolated, NonSimpleInput, SimulationFailed, ZeroArea
from tools.polygon import SimplePolygon, manifold_distance
from tools.stabilization import build_stabilizer_table
from workflows import storage
from workflows.convergence import run_convergence, write_convergence_tables
from workflows.schemas import AnisotropySpec, SimConfig
from workflows.simulation import build_anisotropy, run_config, write_run

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONDITION = 3
EXIT_SOLVER = 4

_ANISOTROPY_ADAPTER = TypeAdapter(AnisotropySpec)


def parse_anisotropy(text: str) -> AnisotropySpec:
    """Parse ``kind[:key=value,...]``, e.g. ``kfold:beta=0.333333,k=3`` or ``table:path=gamma.csv``."""
    kind, _, rest = text.strip().partition(":")
    payload: Dict[str, Any] = {"kind": kind.strip()}
    for item in filter(None, (part.strip() for part in rest.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"expected key=value in anisotropy spec, got '{item}'")
        payload[key.strip()] = value.strip()
    return _ANISOTROPY_ADAPTER.validate_python(payload)


def _parse_floats(text: str) -> List[float]:
    return [float(part) for part in text.split(",") if part.strip()]


# ============================================================================
# Commands
# ============================================================================

def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = SimConfig.from_json_file(args.config)
    if args.semi_implicit:
        cfg = cfg.model_copy(update={"implicit": False})
    out_dir = Path(args.output_dir) if args.output_dir else cfg.resolved_output_dir()

    result = run_config(cfg, force=args.force)
    write_run(result, out_dir)
    if args.plots:
        title = f"{cfg.flow.value}, {result.summary.anisotropy}, N={cfg.N}, tau={cfg.tau:g}"
        storage.write_plot_script(title, out_dir / "plot_run.py")

    summary = result.summary
    print(f"final area {summary.final_area:.17g}, final energy {summary.final_energy:.17g}")
    print(f"max |rel. area loss| {summary.max_abs_rel_area_loss:.3e}, monotone energy: {summary.monotone_energy}")
    print(f"outputs written to {out_dir}")
    return EXIT_OK


def cmd_converge(args: argparse.Namespace) -> int:
    cfg = SimConfig.from_json_file(args.config)
    reference_path = Path(args.reference)
    reference = storage.read_curve_csv(reference_path) if reference_path.suffix.lower() == ".csv" else SimConfig.from_json_file(reference_path)
    out_dir = Path(args.out) if args.out else cfg.resolved_output_dir() / "convergence"

    tables = run_convergence(
        cfg,
        _parse_floats(args.h),
        reference,
        _parse_floats(args.time),
        threads=args.threads,
        force=args.force,
        out_dir=out_dir if args.keep_runs else None,
    )
    for path in write_convergence_tables(tables, out_dir):
        print(f"wrote {path}")
    for t, table in sorted(tables.items()):
        for i, (h, e) in enumerate(zip(table.h, table.errors)):
            order = f"{table.orders[i - 1]:.3f}" if i else "-"
            print(f"t={t:g} h={h:g} error={e:.6e} order={order}")
    return EXIT_OK


def cmd_k0_table(args: argparse.Namespace) -> int:
    a = build_anisotropy(parse_anisotropy(args.anisotropy))
    table = build_stabilizer_table(a, M_n=args.points, grid_size_nhat=args.grid, safety=args.safety, subsamples=args.subsamples)
    path = table.to_csv(args.out)
    print(f"k0 for {a!r}: max {table.k_values.max():.10g}; wrote {path}")
    return EXIT_OK


def cmd_check_gamma(args: argparse.Namespace) -> int:
    a = build_anisotropy(parse_anisotropy(args.anisotropy))
    report = check_stability_condition(a, args.grid if args.grid is not None else config.CONDITION_GRID)
    status = "holds" if report.holds else "FAILS"
    print(f"{a!r} ({a.strength}): 3 gamma(n) > gamma(-n) {status}")
    print(f"min margin {report.worst_margin:.17g} at theta={report.worst_angle:.17g}")
    return EXIT_OK if report.holds else EXIT_CONDITION


def cmd_distance(args: argparse.Namespace) -> int:
    first = SimplePolygon.from_curve(storage.read_curve_csv(args.first))
    second = SimplePolygon.from_curve(storage.read_curve_csv(args.second))
    print(f"{manifold_distance(first, second):.17g}")
    return EXIT_OK


# ============================================================================
# Parser
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aniflow", description="Structure-preserving parametric finite elements for anisotropic curve flows")
    parser.add_argument("--log-level", default=None, help="Logging level (default: ANIFLOW_LOG_LEVEL or INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="Run one configuration and write snapshots and diagnostics")
    simulate.add_argument("--config", required=True, help="Run configuration (JSON)")
    simulate.add_argument("--output-dir", default=None, help="Overrides output_dir from the config")
    simulate.add_argument("--force", action="store_true", help="Run even if 3 gamma(n) > gamma(-n) fails")
    simulate.add_argument("--semi-implicit", action="store_true", help="Use n^m instead of the half-step normal")
    simulate.add_argument("--plots", action="store_true", help="Write a plot_run.py script next to the outputs")
    simulate.set_defaults(handler=cmd_simulate)

    converge = sub.add_parser("converge", help="Spatial convergence study with tau = h^2")
    converge.add_argument("--config", required=True, help="Base run configuration (JSON)")
    converge.add_argument("--h", required=True, help="Comma-separated halving mesh sizes, e.g. 0.125,0.0625,0.03125")
    converge.add_argument("--reference", required=True, help="Reference configuration (JSON) or reference curve (CSV)")
    converge.add_argument("--time", default="0.5", help="Comma-separated comparison times")
    converge.add_argument("--out", default=None, help="Directory for convergence.csv")
    converge.add_argument("--threads", type=int, default=None, help="Parallel runs (default: ANIFLOW_THREADS)")
    converge.add_argument("--keep-runs", action="store_true", help="Also write every run into h_<N>/ subdirectories")
    converge.add_argument("--force", action="store_true")
    converge.set_defaults(handler=cmd_converge)

    k0 = sub.add_parser("k0-table", help="Tabulate the minimal stabilizing function k0")
    k0.add_argument("--anisotropy", required=True, help="e.g. isotropic, case1, kfold:beta=0.333333,k=3")
    k0.add_argument("--points", type=int, default=None, help="Number of normals (default: ANIFLOW_K0_POINTS)")
    k0.add_argument("--grid", type=int, default=None, help="n-hat sweep resolution (default: ANIFLOW_K0_GRID)")
    k0.add_argument("--safety", type=float, default=None, help="Multiplier >= 1 (default: ANIFLOW_K0_SAFETY)")
    k0.add_argument("--subsamples", type=int, default=None, help="k0 samples per cell for the upper envelope, 0 for nodes only (default: ANIFLOW_K0_SUBSAMPLES)")
    k0.add_argument("--out", default="k0.csv")
    k0.set_defaults(handler=cmd_k0_table)

    check = sub.add_parser("check-gamma", help="Check the energy-stability condition 3 gamma(n) > gamma(-n)")
    check.add_argument("--anisotropy", required=True)
    check.add_argument("--grid", type=int, default=None, help="Angular resolution (default: ANIFLOW_CONDITION_GRID)")
    check.set_defaults(handler=cmd_check_gamma)

    distance = sub.add_parser("distance", help="Manifold distance between two curve CSVs")
    distance.add_argument("first")
    distance.add_argument("second")
    distance.set_defaults(handler=cmd_distance)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config.configure_logging(args.log_level)
    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)
    except ConditionViolated as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONDITION
    except SimulationFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValidationError, ValueError, OSError, NonSimpleInput, ZeroArea) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AniflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
