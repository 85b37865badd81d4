"""Simulation runs: build the energy, stabilizer and initial curve from a config and march in time."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

import config
from flows.assembly import compute_mu_diagnostic
from flows.stepper import StepResult, extrapolated_guess, linearized_guess, step
from tools.anisotropy import (
    Anisotropy,
    CaseOneAnisotropy,
    IsotropicAnisotropy,
    KFoldAnisotropy,
    TabulatedAnisotropy,
    check_stability_condition,
)
from tools.diagnostics import discrete_energy, relative_area_loss, weighted_mesh_ratio
from tools.errors import AniflowError, ConditionViolated, RankDeficient, SimulationFailed
from tools.geometry import ClosedCurve, circle_curve, ellipse_curve, polygon_area
from tools.stabilization import StabilizerTable, build_stabilizer_table
from workflows import storage
from workflows.schemas import (
    AnisotropySpec,
    CircleShape,
    ConstantStabilizer,
    DiagnosticsRecord,
    EllipseShape,
    FileStabilizer,
    FlowKind,
    NewtonSettings,
    RunSummary,
    ShapeSpec,
    SimConfig,
    StabilizerSpec,
)

logger = logging.getLogger(__name__)

# Relative slack on W^{m+1} <= W^m before a step counts as an energy increase
ENERGY_TOLERANCE = 1e-12


# ============================================================================
# Builders
# ============================================================================

def build_anisotropy(spec: AnisotropySpec) -> Anisotropy:
    if spec.kind == "isotropic":
        return IsotropicAnisotropy()
    if spec.kind == "case1":
        return CaseOneAnisotropy()
    if spec.kind == "kfold":
        return KFoldAnisotropy(beta=spec.beta, k=spec.k, phase=spec.phase)
    if spec.path is not None:
        data = np.loadtxt(spec.path, delimiter=",", skiprows=1, ndmin=2)
        return TabulatedAnisotropy(tuple(data[:, 0]), tuple(data[:, 1]), label=Path(spec.path).stem)
    return TabulatedAnisotropy(tuple(spec.thetas), tuple(spec.values))


def build_stabilizer(spec: StabilizerSpec, a: Anisotropy) -> StabilizerTable:
    if isinstance(spec, FileStabilizer):
        return StabilizerTable.from_csv(spec.path)
    if isinstance(spec, ConstantStabilizer):
        return StabilizerTable.constant(spec.value)
    return build_stabilizer_table(a, M_n=spec.M_n, grid_size_nhat=spec.grid, safety=spec.safety, subsamples=spec.subsamples)


def build_initial_curve(spec: ShapeSpec, n: int) -> ClosedCurve:
    if isinstance(spec, EllipseShape):
        return ellipse_curve(spec.a, spec.b, n)
    if isinstance(spec, CircleShape):
        return circle_curve(spec.r, n)
    curve = storage.read_curve_csv(spec.path)
    if curve.size != n:
        logger.warning(f"initial curve {spec.path} has {curve.size} nodes; config N={n} is ignored")
    return curve


def verify_condition(a: Anisotropy, force: bool = False) -> bool:
    """Check 3 gamma(n) > gamma(-n); returns True when a violation was overridden by ``force``."""
    report = check_stability_condition(a, config.CONDITION_GRID)
    if report.holds:
        return False
    message = f"3 gamma(n) > gamma(-n) fails for {a!r}: margin {report.worst_margin:.6g} at theta={report.worst_angle:.6g}"
    if not force:
        raise ConditionViolated(message, margin=report.worst_margin, angle=report.worst_angle)
    logger.warning(f"{message}; continuing because the run was forced")
    return True


# ============================================================================
# Run Loop
# ============================================================================

@dataclass
class RunResult:
    final_curve: ClosedCurve
    records: List[DiagnosticsRecord]
    snapshots: Dict[int, ClosedCurve]
    summary: RunSummary
    # curves at requested capture times, keyed by the requested time
    captured: Dict[float, ClosedCurve] = field(default_factory=dict)


def _initial_mu(curve: ClosedCurve, a: Anisotropy, ktable: StabilizerTable) -> np.ndarray:
    try:
        return compute_mu_diagnostic(curve, a, ktable)
    except RankDeficient as exc:
        logger.debug(f"no least-squares mu for the initial curve ({exc}); starting from zero")
        return np.zeros(curve.size)


def _record(curve: ClosedCurve, a: Anisotropy, step_index: int, t: float, area0: float, energy0: float, iters: int) -> DiagnosticsRecord:
    energy = discrete_energy(curve, a)
    return DiagnosticsRecord(
        step=step_index,
        t=t,
        area=polygon_area(curve),
        energy=energy,
        rel_area_loss=relative_area_loss(curve, area0),
        norm_energy=energy / energy0,
        mesh_ratio=weighted_mesh_ratio(curve, a),
        newton_iters=iters,
    )


def run(
    flow: FlowKind,
    initial: ClosedCurve,
    a: Anisotropy,
    ktable: StabilizerTable,
    tau: float,
    t_end: float,
    settings: Optional[NewtonSettings] = None,
    snapshot_every: Optional[int] = None,
    implicit: bool = True,
    force: bool = False,
    capture_times: Sequence[float] = (),
    on_step: Optional[Callable[[int, StepResult], None]] = None,
) -> RunResult:
    """March ``initial`` to ``t_end`` with ceil(t_end / tau) uniform steps.

    Snapshots are kept every ``snapshot_every`` steps plus the first and last.
    Step failures are re-raised as SimulationFailed carrying the step index.
    With ``settings.predictor`` each implicit step starts from the linear
    extrapolation of the last two steps; the first one starts from the
    semi-implicit solution.
    """
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if t_end < tau:
        raise ValueError(f"t_end ({t_end}) must be at least tau ({tau})")
    flow = FlowKind(flow)
    settings = settings or NewtonSettings()
    every = snapshot_every if snapshot_every is not None else config.SNAPSHOT_EVERY
    n_steps = max(1, int(np.ceil(t_end / tau - 1e-9)))
    forced = verify_condition(a, force=force)

    capture_steps: Dict[int, List[float]] = {}
    for t_cap in capture_times:
        if not 0 <= t_cap <= n_steps * tau * (1 + 1e-12):
            raise ValueError(f"capture time {t_cap} lies outside [0, {n_steps * tau}]")
        capture_steps.setdefault(int(round(t_cap / tau)), []).append(t_cap)

    curve = initial
    area0 = polygon_area(initial)
    energy0 = discrete_energy(initial, a)
    records = [_record(initial, a, 0, 0.0, area0, energy0, 0)]
    snapshots: Dict[int, ClosedCurve] = {0: initial}
    captured: Dict[float, ClosedCurve] = {t_cap: initial for t_cap in capture_steps.get(0, [])}
    monotone = True
    mu: Optional[np.ndarray] = None
    predict = settings.predictor and implicit
    previous_curve: Optional[ClosedCurve] = None
    previous_mu: Optional[np.ndarray] = _initial_mu(initial, a, ktable) if predict else None

    logger.info(f"Starting {flow.value} run: {a!r}, N={initial.size}, tau={tau:g}, {n_steps} steps, implicit={implicit}")
    for m in range(1, n_steps + 1):
        try:
            nodes_guess, mu_guess = None, mu
            if predict and previous_curve is None:
                nodes_guess, mu_guess = linearized_guess(flow, curve, a, ktable, tau)
                mu_guess = previous_mu if mu_guess is None else mu_guess
            elif predict:
                nodes_guess, mu_guess = extrapolated_guess(previous_curve, curve, previous_mu, mu)
            result = step(
                flow, curve, a, ktable, tau, settings=settings, implicit=implicit, mu_guess=mu_guess, nodes_guess=nodes_guess
            )
        except AniflowError as exc:
            raise SimulationFailed(m, tau, exc) from exc

        record = _record(result.new_curve, a, m, m * tau, area0, energy0, result.newton_iterations)
        previous = records[-1].energy
        if record.energy > previous * (1 + ENERGY_TOLERANCE):
            monotone = False
            logger.warning(f"Energy increased at step {m}: {previous:.17g} -> {record.energy:.17g}")
        elif record.energy - previous > -result.dissipation_bound + ENERGY_TOLERANCE * previous:
            logger.warning(
                f"Energy drop at step {m} ({previous - record.energy:.3e}) is below the dissipation bound {result.dissipation_bound:.3e}"
            )

        if predict:
            previous_curve, previous_mu = curve, mu if mu is not None else previous_mu
        curve, mu = result.new_curve, result.mu
        records.append(record)
        for t_cap in capture_steps.get(m, []):
            captured[t_cap] = curve
        if on_step is not None:
            on_step(m, result)
        if m % every == 0 or m == n_steps:
            snapshots[m] = curve
            logger.info(
                f"t={record.t:.6g} step {m}/{n_steps}: rel. area loss {record.rel_area_loss:.3e}, "
                f"W/W0 {record.norm_energy:.8f}, mesh ratio {record.mesh_ratio:.4f}, Newton {record.newton_iters}"
            )

    summary = RunSummary(
        flow=flow,
        anisotropy=a.label,
        N=initial.size,
        tau=tau,
        t_end=n_steps * tau,
        steps=n_steps,
        implicit=implicit,
        final_area=records[-1].area,
        final_energy=records[-1].energy,
        max_abs_rel_area_loss=max(abs(r.rel_area_loss) for r in records),
        monotone_energy=monotone,
        max_newton_iterations=max(r.newton_iters for r in records),
        condition_forced=forced,
    )
    return RunResult(final_curve=curve, records=records, snapshots=snapshots, summary=summary, captured=captured)


def run_config(cfg: SimConfig, force: bool = False, capture_times: Sequence[float] = ()) -> RunResult:
    """Build every ingredient from ``cfg`` and run it; no files are written."""
    a = build_anisotropy(cfg.anisotropy)
    # run() reports a forced violation; the table builder must not refuse first
    ktable = _forced_stabilizer(cfg.stabilizer, a) if force else build_stabilizer(cfg.stabilizer, a)
    initial = build_initial_curve(cfg.initial_shape, cfg.N)
    # the literal-normal area-conserved variant is the frozen-normal form of that flow
    implicit = cfg.implicit and not (cfg.literal_normal and cfg.flow is FlowKind.AREA_CONSERVED)
    return run(
        cfg.flow,
        initial,
        a,
        ktable,
        cfg.tau,
        cfg.t_end,
        settings=cfg.newton,
        snapshot_every=cfg.snapshot_every,
        implicit=implicit,
        force=force,
        capture_times=capture_times,
    )


def _forced_stabilizer(spec: StabilizerSpec, a: Anisotropy) -> StabilizerTable:
    if isinstance(spec, (FileStabilizer, ConstantStabilizer)):
        return build_stabilizer(spec, a)
    return build_stabilizer_table(
        a, M_n=spec.M_n, grid_size_nhat=spec.grid, safety=spec.safety, subsamples=spec.subsamples, check_condition=False
    )


def write_run(result: RunResult, out_dir: Path) -> Path:
    """Write snapshots, diagnostics.csv and summary.json into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for step_index, curve in sorted(result.snapshots.items()):
        storage.write_curve_csv(curve, out_dir / storage.snapshot_name(step_index))
    storage.write_diagnostics_csv(result.records, out_dir / "diagnostics.csv")
    storage.write_summary_json(result.summary, out_dir / "summary.json")
    logger.info(f"Wrote {len(result.snapshots)} snapshots and diagnostics to {out_dir}")
    return out_dir
