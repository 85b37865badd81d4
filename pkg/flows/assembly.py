"""Surface energy matrix G_k(n) and the coupled (X, mu) residual/Jacobian for all three flows.

Unknowns are ordered [x_0..x_{N-1}, y_0..y_{N-1}, mu_0..mu_{N-1}]. Rows 0..N-1
test the kinematic equation against the nodal hat functions, rows N..3N-1 test
the weighted-curvature equation against the x- and y-coordinate hat functions.
Every inner product and G_k(n^m) is evaluated on the old curve.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp

from tools.anisotropy import Anisotropy
from tools.errors import RankDeficient
from tools.geometry import DEGENERACY_RATIO, ClosedCurve, edge_frames, perp
from tools.stabilization import StabilizerTable
from workflows.schemas import FlowKind

logger = logging.getLogger(__name__)

# d perp(v) / dv for perp(x, y) = (y, -x)
_PERP_JACOBIAN = np.array([[0.0, 1.0], [-1.0, 0.0]])


# ============================================================================
# Surface Energy Matrix
# ============================================================================

def g_split(a: Anisotropy, k, n) -> Tuple[np.ndarray, np.ndarray]:
    """Symmetric part gamma I + k n n^T and anti-symmetric part xi n^T - n xi^T, shape (..., 2, 2)."""
    n = np.asarray(n, dtype=float)
    gamma = np.asarray(a.gamma(n), dtype=float)
    xi = np.asarray(a.xi(n), dtype=float)
    k = np.broadcast_to(np.asarray(k, dtype=float), gamma.shape)
    if np.any(k < 0):
        raise ValueError("stabilizing function must be nonnegative")
    nn = n[..., :, None] * n[..., None, :]
    sym = gamma[..., None, None] * np.eye(2) + k[..., None, None] * nn
    anti = xi[..., :, None] * n[..., None, :] - n[..., :, None] * xi[..., None, :]
    return sym, anti


def g_matrix(a: Anisotropy, k, n) -> np.ndarray:
    """G_k(n) = gamma(n) I - n xi^T + xi n^T + k(n) n n^T."""
    sym, anti = g_split(a, k, n)
    return sym + anti


def g_times_tangent_identity_check(a: Anisotropy, k, n) -> float:
    """Largest |G_k(n) tau - (gamma tau - (xi . tau) n)| over the given normals."""
    n = np.asarray(n, dtype=float)
    tau = perp(n)
    lhs = np.einsum("...cd,...d->...c", g_matrix(a, k, n), tau)
    xi_tau = np.sum(a.xi(n) * tau, axis=-1)
    rhs = a.gamma(n)[..., None] * tau - xi_tau[..., None] * n
    return float(np.max(np.linalg.norm(lhs - rhs, axis=-1)))


# ============================================================================
# Lagged Operators
# ============================================================================

@dataclass(frozen=True, eq=False)
class LaggedOperators:
    """Everything a step needs from the old curve Gamma^m."""

    nodes: np.ndarray
    lengths: np.ndarray
    # M_i = (|h_i| + |h_{i+1}|) / 2, the lumped mass at node i
    mass: np.ndarray
    perimeter: float
    # G_k(n^m_j) / |h^m_j|, shape (N, 2, 2)
    g_over_len: np.ndarray
    # -(X_{i+1} - X_{i-1})^perp = |h_i| n_i + |h_{i+1}| n_{i+1}
    frozen_normal_sum: np.ndarray

    @property
    def size(self) -> int:
        return int(self.lengths.shape[0])

    @classmethod
    def from_curve(cls, curve: ClosedCurve, a: Anisotropy, ktable: StabilizerTable) -> "LaggedOperators":
        frames = edge_frames(curve)
        lengths = frames.length
        g = g_matrix(a, ktable(frames.normal), frames.normal)
        nodes = np.array(curve.nodes)
        return cls(
            nodes=nodes,
            lengths=lengths,
            mass=0.5 * (lengths + np.roll(lengths, -1)),
            perimeter=float(lengths.sum()),
            g_over_len=g / lengths[:, None, None],
            frozen_normal_sum=-perp(np.roll(nodes, -1, axis=0) - np.roll(nodes, 1, axis=0)),
        )

    def stiffness_action(self, nodes: np.ndarray) -> np.ndarray:
        """(G_k(n^m) d_s X, d_s omega_i)^h per node, shape (N, 2)."""
        h = nodes - np.roll(nodes, 1, axis=0)
        q = np.einsum("jcd,jd->jc", self.g_over_len, h)
        return q - np.roll(q, -1, axis=0)


# ============================================================================
# Coupled System
# ============================================================================

class FlowSystem:
    """Residual and Jacobian of one time step of a flow, as functions of the 3N unknowns."""

    def __init__(
        self,
        flow: FlowKind,
        old: ClosedCurve,
        a: Anisotropy,
        ktable: StabilizerTable,
        tau: float,
        implicit: bool = True,
    ) -> None:
        if not tau > 0:
            raise ValueError(f"tau must be positive, got {tau}")
        self.flow = FlowKind(flow)
        self.tau = float(tau)
        self.implicit = implicit
        self.ops = LaggedOperators.from_curve(old, a, ktable)

    @property
    def size(self) -> int:
        return self.ops.size

    def split(self, unknowns: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        n = self.size
        u = np.asarray(unknowns, dtype=float)
        if u.shape != (3 * n,):
            raise ValueError(f"expected {3 * n} unknowns, got shape {u.shape}")
        return np.column_stack([u[:n], u[n:2 * n]]), u[2 * n:]

    @staticmethod
    def pack(nodes: np.ndarray, mu: np.ndarray) -> np.ndarray:
        nodes = np.asarray(nodes, dtype=float)
        return np.concatenate([nodes[:, 0], nodes[:, 1], np.asarray(mu, dtype=float)])

    def normal_sum(self, nodes: np.ndarray) -> np.ndarray:
        """S_i = |h_i| n_i + |h_{i+1}| n_{i+1} for the normal used at node i."""
        if not self.implicit:
            return self.ops.frozen_normal_sum
        span = np.roll(nodes, -1, axis=0) - np.roll(nodes, 1, axis=0)
        return 0.5 * self.ops.frozen_normal_sum - 0.5 * perp(span)

    def lagrange_multiplier(self, mu: np.ndarray) -> float:
        """(mu, 1)^h / (1, 1)^h on the old curve."""
        return float(np.dot(self.ops.mass, mu)) / self.ops.perimeter

    def residual(self, unknowns: np.ndarray) -> np.ndarray:
        ops, tau = self.ops, self.tau
        nodes, mu = self.split(unknowns)
        normal_sum = self.normal_sum(nodes)
        kinematic = np.sum(normal_sum * (nodes - ops.nodes), axis=1) / (2.0 * tau)

        if self.flow is FlowKind.SURFACE_DIFFUSION:
            ds_mu = (mu - np.roll(mu, 1)) / ops.lengths
            kinematic = kinematic + ds_mu - np.roll(ds_mu, -1)
        elif self.flow is FlowKind.CURVATURE_FLOW:
            kinematic = kinematic + ops.mass * mu
        else:
            kinematic = kinematic + ops.mass * (mu - self.lagrange_multiplier(mu))

        curvature = 0.5 * normal_sum * mu[:, None] - ops.stiffness_action(nodes)
        return np.concatenate([kinematic, curvature[:, 0], curvature[:, 1]])

    def residual_scale(self, unknowns: np.ndarray) -> np.ndarray:
        """Per-row sum of the magnitudes of the terms entering ``residual``.

        Rounding in a row is bounded by machine epsilon times this sum, so
        ``|residual| / residual_scale`` is comparable across rows whatever the
        time step or the edge lengths.
        """
        ops, tau = self.ops, self.tau
        nodes, mu = self.split(unknowns)
        normal_sum = np.abs(self.normal_sum(nodes))
        magnitude = np.abs(nodes) + np.abs(ops.nodes)
        kinematic = np.sum(normal_sum * magnitude, axis=1) / (2.0 * tau)

        abs_mu = np.abs(mu)
        if self.flow is FlowKind.SURFACE_DIFFUSION:
            ds_mu = (abs_mu + np.roll(abs_mu, 1)) / ops.lengths
            kinematic = kinematic + ds_mu + np.roll(ds_mu, -1)
        elif self.flow is FlowKind.CURVATURE_FLOW:
            kinematic = kinematic + ops.mass * abs_mu
        else:
            kinematic = kinematic + ops.mass * (abs_mu + abs(self.lagrange_multiplier(mu)))

        edge_magnitude = np.abs(nodes) + np.abs(np.roll(nodes, 1, axis=0))
        q = np.einsum("jcd,jd->jc", np.abs(ops.g_over_len), edge_magnitude)
        curvature = 0.5 * normal_sum * abs_mu[:, None] + q + np.roll(q, -1, axis=0)
        return np.concatenate([kinematic, curvature[:, 0], curvature[:, 1]])

    def scaled_residual(self, unknowns: np.ndarray) -> float:
        """Largest |residual| relative to its row scale."""
        scale = np.maximum(self.residual_scale(unknowns), np.finfo(float).tiny)
        return float(np.max(np.abs(self.residual(unknowns)) / scale))

    def jacobian_parts(self, unknowns: np.ndarray) -> Tuple[sp.csc_matrix, Optional[np.ndarray], Optional[np.ndarray]]:
        """Banded part A and, for the area-conserved flow, vectors u, v with J = A - u v^T."""
        ops, tau, n = self.ops, self.tau, self.size
        nodes, mu = self.split(unknowns)
        normal_sum = self.normal_sum(nodes)
        idx = np.arange(n)
        nxt = np.roll(idx, -1)
        prv = np.roll(idx, 1)
        mu_col = 2 * n

        rows, cols, vals = [], [], []

        def add(r, c, v):
            rows.append(r)
            cols.append(c)
            vals.append(np.broadcast_to(np.asarray(v, dtype=float), r.shape))

        # kinematic rows
        add(idx, idx, normal_sum[:, 0] / (2.0 * tau))
        add(idx, n + idx, normal_sum[:, 1] / (2.0 * tau))
        if self.implicit:
            disp = nodes - ops.nodes
            add(idx, nxt, disp[:, 1] / (4.0 * tau))
            add(idx, n + nxt, -disp[:, 0] / (4.0 * tau))
            add(idx, prv, -disp[:, 1] / (4.0 * tau))
            add(idx, n + prv, disp[:, 0] / (4.0 * tau))

        next_lengths = np.roll(ops.lengths, -1)
        if self.flow is FlowKind.SURFACE_DIFFUSION:
            add(idx, mu_col + idx, 1.0 / ops.lengths + 1.0 / next_lengths)
            add(idx, mu_col + prv, -1.0 / ops.lengths)
            add(idx, mu_col + nxt, -1.0 / next_lengths)
        else:
            add(idx, mu_col + idx, ops.mass)

        # curvature rows, component c
        g_here = ops.g_over_len
        g_next = np.roll(g_here, -1, axis=0)
        for c in range(2):
            r = (1 + c) * n + idx
            add(r, mu_col + idx, 0.5 * normal_sum[:, c])
            for d in range(2):
                col = d * n
                add(r, col + idx, -(g_here[:, c, d] + g_next[:, c, d]))
                add(r, col + prv, g_here[:, c, d])
                add(r, col + nxt, g_next[:, c, d])
                if self.implicit and _PERP_JACOBIAN[c, d] != 0.0:
                    add(r, col + nxt, -0.25 * mu * _PERP_JACOBIAN[c, d])
                    add(r, col + prv, 0.25 * mu * _PERP_JACOBIAN[c, d])

        banded = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(3 * n, 3 * n),
        ).tocsc()

        if self.flow is not FlowKind.AREA_CONSERVED:
            return banded, None, None
        u = np.zeros(3 * n)
        v = np.zeros(3 * n)
        u[:n] = ops.mass / ops.perimeter
        v[mu_col:] = ops.mass
        return banded, u, v

    def jacobian(self, unknowns: np.ndarray) -> sp.csc_matrix:
        banded, u, v = self.jacobian_parts(unknowns)
        if u is None:
            return banded
        correction = sp.csc_matrix(u[:, None]) @ sp.csc_matrix(v[None, :])
        return (banded - correction).tocsc()

    def dissipation(self, mu: np.ndarray) -> float:
        """tau times the mu-norm the flow dissipates: W^{m+1} - W^m <= -dissipation."""
        ops = self.ops
        mu = np.asarray(mu, dtype=float)
        if self.flow is FlowKind.SURFACE_DIFFUSION:
            ds_mu = (mu - np.roll(mu, 1)) / ops.lengths
            value = np.sum(ops.lengths * ds_mu ** 2)
        elif self.flow is FlowKind.CURVATURE_FLOW:
            value = np.sum(ops.mass * mu ** 2)
        else:
            lam = self.lagrange_multiplier(mu)
            value = np.sum(ops.mass * (mu - lam) * mu)
        return self.tau * float(value)


# ============================================================================
# Functional Entry Points
# ============================================================================

def assemble_residual(
    flow: FlowKind,
    old: ClosedCurve,
    guess: Tuple[np.ndarray, np.ndarray],
    a: Anisotropy,
    ktable: StabilizerTable,
    tau: float,
    implicit: bool = True,
) -> np.ndarray:
    system = FlowSystem(flow, old, a, ktable, tau, implicit=implicit)
    return system.residual(FlowSystem.pack(*guess))


def assemble_jacobian(
    flow: FlowKind,
    old: ClosedCurve,
    guess: Tuple[np.ndarray, np.ndarray],
    a: Anisotropy,
    ktable: StabilizerTable,
    tau: float,
    implicit: bool = True,
) -> sp.csc_matrix:
    system = FlowSystem(flow, old, a, ktable, tau, implicit=implicit)
    return system.jacobian(FlowSystem.pack(*guess))


def compute_mu_diagnostic(curve: ClosedCurve, a: Anisotropy, ktable: StabilizerTable) -> np.ndarray:
    """Least-squares mu with (mu n^m, omega)^h = (G_k(n^m) d_s X, d_s omega)^h on a fixed curve.

    The 2N x N system is block diagonal (one 2x1 block per node), so the normal
    equations decouple into mu_i = (s_i . r_i) / |s_i|^2.
    """
    ops = LaggedOperators.from_curve(curve, a, ktable)
    s = 0.5 * ops.frozen_normal_sum
    r = ops.stiffness_action(ops.nodes)
    s2 = np.sum(s * s, axis=1)
    floor = (DEGENERACY_RATIO * curve.diameter) ** 2
    bad = np.flatnonzero(s2 <= floor)
    if bad.size:
        raise RankDeficient(f"normal equation at node {int(bad[0])} is singular (X_(i-1) = X_(i+1))")
    return np.sum(s * r, axis=1) / s2
