"""Newton time stepping of the coupled (X, mu) system."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from flows.assembly import FlowSystem
from tools.anisotropy import Anisotropy
from tools.errors import AniflowError, LinearSolveFailed, NewtonDiverged
from tools.geometry import ClosedCurve, mass_lumped_inner_scalar
from tools.stabilization import StabilizerTable
from workflows.schemas import FlowKind, NewtonSettings

logger = logging.getLogger(__name__)

# Below this |1 - v^T A^{-1} u| the rank-one update is treated as singular
_SHERMAN_MORRISON_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class StepResult:
    """Outcome of one time step.

    ``newton_iterations`` counts the solves needed to reach the converged
    iterate; the extra solve whose increment only certifies convergence is
    not counted, and a semi-implicit step always reports one. ``residual`` is
    the largest residual entry relative to its row scale (see
    ``FlowSystem.residual_scale``).
    """

    new_curve: ClosedCurve
    mu: np.ndarray
    newton_iterations: int
    # lambda^{m+1/2}; zero unless the flow is area conserved
    lambda_: float = 0.0
    # tau times the discrete mu-norm; the energy must drop by at least this much
    dissipation_bound: float = 0.0
    residual: float = 0.0


def lambda_half_step(mu, curve: ClosedCurve) -> float:
    """(mu, 1)^h / (1, 1)^h on ``curve``."""
    ones = np.ones(curve.size)
    return mass_lumped_inner_scalar(mu, ones, curve) / mass_lumped_inner_scalar(ones, ones, curve)


def extrapolated_guess(
    previous: ClosedCurve,
    current: ClosedCurve,
    previous_mu: np.ndarray,
    current_mu: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """Linear extrapolation (2 X^m - X^{m-1}, 2 mu^m - mu^{m-1}) of the next step.

    Falls back to (X^m, mu^m) when the extrapolated nodes would reverse an
    edge of the current curve.
    """
    nodes = 2.0 * current.nodes - previous.nodes
    mu = 2.0 * np.asarray(current_mu, dtype=float) - np.asarray(previous_mu, dtype=float)
    edges = nodes - np.roll(nodes, 1, axis=0)
    if np.any(np.sum(edges * current.edges, axis=1) <= 0.0):
        logger.debug("extrapolated guess reverses an edge; starting from the current curve")
        return np.array(current.nodes), np.asarray(current_mu, dtype=float)
    return nodes, mu


def _solve(banded: sp.csc_matrix, u: Optional[np.ndarray], v: Optional[np.ndarray], rhs: np.ndarray) -> np.ndarray:
    """Solve (A - u v^T) x = rhs by LU of A plus a Sherman-Morrison correction."""
    try:
        lu = splu(banded)
    except RuntimeError as exc:
        raise LinearSolveFailed(f"Jacobian factorization failed: {exc}") from exc
    x = lu.solve(rhs)
    if u is not None:
        z = lu.solve(u)
        denom = 1.0 - float(v @ z)
        if abs(denom) < _SHERMAN_MORRISON_FLOOR:
            raise LinearSolveFailed("rank-one corrected Jacobian is singular")
        x = x + z * (float(v @ x) / denom)
    if not np.all(np.isfinite(x)):
        raise LinearSolveFailed("linear solve produced non-finite values")
    return x


def _relative_increment(delta: np.ndarray, unknowns: np.ndarray, split: int) -> float:
    return max(
        float(np.max(np.abs(delta[:split]))) / max(1.0, float(np.max(np.abs(unknowns[:split])))),
        float(np.max(np.abs(delta[split:]))) / max(1.0, float(np.max(np.abs(unknowns[split:])))),
    )


def _newton(system: FlowSystem, unknowns: np.ndarray, settings: NewtonSettings) -> Tuple[np.ndarray, int, float]:
    """Plain Newton on the max-norm of the increment with a row-scaled residual guard.

    The node and mu increments are each measured against max(1, largest entry
    of their block), so a mu far above one converges to its own rounding level.
    Returns (solution, iterations, scaled residual).
    """
    if not system.implicit:
        banded, u, v = system.jacobian_parts(unknowns)
        unknowns = unknowns + _solve(banded, u, v, -system.residual(unknowns))
        return unknowns, 1, system.scaled_residual(unknowns)

    increment = residual = float("inf")
    for solves in range(1, settings.max_iterations + 1):
        banded, u, v = system.jacobian_parts(unknowns)
        delta = _solve(banded, u, v, -system.residual(unknowns))
        unknowns = unknowns + delta
        increment = _relative_increment(delta, unknowns, 2 * system.size)
        residual = system.scaled_residual(unknowns)
        logger.debug(f"Newton iteration {solves}: increment {increment:.3e}, scaled residual {residual:.3e}")
        if increment <= settings.tolerance and residual <= settings.residual_tolerance:
            return unknowns, max(1, solves - 1), residual
    raise NewtonDiverged(settings.max_iterations, increment, residual)


def step(
    flow: FlowKind,
    curve: ClosedCurve,
    a: Anisotropy,
    ktable: StabilizerTable,
    tau: float,
    settings: Optional[NewtonSettings] = None,
    implicit: bool = True,
    mu_guess: Optional[np.ndarray] = None,
    nodes_guess: Optional[np.ndarray] = None,
) -> StepResult:
    """Advance ``curve`` by one time step of ``flow``.

    The Newton iterate starts at (X^m, mu_guess), with mu_guess the previous
    step's chemical potential or zero; ``nodes_guess`` replaces X^m as the
    starting nodes (see ``extrapolated_guess``). With ``implicit=False`` the
    half-step normal is frozen to n^m and the system is linear.
    """
    settings = settings or NewtonSettings()
    flow = FlowKind(flow)
    system = FlowSystem(flow, curve, a, ktable, tau, implicit=implicit)
    mu0 = np.zeros(curve.size) if mu_guess is None else np.asarray(mu_guess, dtype=float)
    nodes0 = curve.nodes if nodes_guess is None else np.asarray(nodes_guess, dtype=float)
    if nodes0.shape != curve.nodes.shape:
        raise ValueError(f"nodes_guess has shape {nodes0.shape}, expected {curve.nodes.shape}")
    unknowns, iterations, residual = _newton(system, FlowSystem.pack(nodes0, mu0), settings)

    nodes, mu = system.split(unknowns)
    new_curve = ClosedCurve(nodes)
    new_curve.check_edges()
    lam = system.lagrange_multiplier(mu) if flow is FlowKind.AREA_CONSERVED else 0.0
    return StepResult(
        new_curve=new_curve,
        mu=mu,
        newton_iterations=iterations,
        lambda_=lam,
        dissipation_bound=system.dissipation(mu),
        residual=residual,
    )


def linearized_guess(
    flow: FlowKind, curve: ClosedCurve, a: Anisotropy, ktable: StabilizerTable, tau: float
) -> Tuple[Optional[np.ndarray], Optional[np.ndarray]]:
    """Starting iterate from the semi-implicit step, or (None, None) if that step fails."""
    try:
        linear = step(flow, curve, a, ktable, tau, implicit=False)
    except AniflowError as exc:
        logger.debug(f"no semi-implicit guess: {exc}")
        return None, None
    return np.array(linear.new_curve.nodes), linear.mu
