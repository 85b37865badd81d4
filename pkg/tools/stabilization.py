"""Auxiliary functions P_alpha and Q, the minimal stabilizing function k0 and its angular table."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.optimize import minimize_scalar

import config
from tools.anisotropy import Anisotropy, check_stability_condition, normal_of, theta_of
from tools.errors import ConditionViolated
from tools.geometry import perp

logger = logging.getLogger(__name__)

T2_THRESHOLD = 1e-14
# Relative slack when deciding Q > 2 gamma(n) in the t = 0 branch
Q_SLACK = 1e-10
# Smallest relative angle between n and n-hat used when refining the supremum
MIN_OFFSET = 1e-3
REFINE_CANDIDATES = 3


def p_alpha(gamma_n, t, alpha):
    """P_alpha = 2 sqrt((gamma(n) + alpha t^2) gamma(n)) with t = n-hat . n^perp."""
    gamma_n = np.asarray(gamma_n, dtype=float)
    return 2.0 * np.sqrt((gamma_n + np.asarray(alpha) * np.asarray(t) ** 2) * gamma_n)


def q_fn(a: Anisotropy, n, nhat) -> np.ndarray:
    """Q = gamma(n-hat) + gamma(n)(n . n-hat) - (xi . n^perp)(n-hat . n^perp)."""
    n = np.asarray(n, dtype=float)
    nhat = np.asarray(nhat, dtype=float)
    tau = perp(n)
    xi_tau = np.sum(a.xi(n) * tau, axis=-1)
    return a.gamma(nhat) + a.gamma(n) * np.sum(n * nhat, axis=-1) - xi_tau * np.sum(nhat * tau, axis=-1)


def _alpha_from(gamma_n, q, t, strict: bool = True):
    """Smallest alpha >= 0 with P_alpha >= Q, elementwise.

    Directions n-hat = -n where no alpha helps raise ConditionViolated, or are
    skipped (alpha 0) when ``strict`` is False.
    """
    gamma_n, q, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (gamma_n, q, t)))
    t2 = t ** 2
    needs = q > 2.0 * gamma_n
    flat = t2 < T2_THRESHOLD
    violated = needs & flat & (q > 2.0 * gamma_n * (1.0 + Q_SLACK))
    if strict and np.any(violated):
        raise ConditionViolated(
            "P_alpha cannot dominate Q at n-hat = -n: 3 gamma(n) <= gamma(-n)",
        )
    safe_t2 = np.where(flat, 1.0, t2)
    alpha = (q ** 2 / (4.0 * gamma_n) - gamma_n) / safe_t2
    return np.where(needs & ~flat, np.maximum(alpha, 0.0), 0.0)


def min_alpha_for_direction(a: Anisotropy, n, nhat):
    n = np.asarray(n, dtype=float)
    nhat = np.asarray(nhat, dtype=float)
    t = np.sum(nhat * perp(n), axis=-1)
    alpha = _alpha_from(a.gamma(n), q_fn(a, n, nhat), t)
    return float(alpha) if np.ndim(alpha) == 0 else alpha


def _rotated(n: np.ndarray, phi):
    """n-hat = cos(phi) n + sin(phi) n^perp, so that n-hat . n^perp = sin(phi)."""
    phi = np.asarray(phi, dtype=float)
    return np.cos(phi)[..., None] * n + np.sin(phi)[..., None] * perp(n)


def k0_at(a: Anisotropy, n, grid_size_nhat: Optional[int] = None, refine: bool = True, strict: bool = True) -> float:
    """Supremum over n-hat of the per-direction minimal alpha.

    The sweep is a uniform grid of relative angles phi between n and n-hat; the
    best local maxima are then polished with a bounded scalar search. With
    ``strict=False`` (forced runs under a violated stability condition) the
    hopeless direction n-hat = -n is skipped and the grid value is returned
    unpolished, since the supremum is unbounded there.
    """
    grid = grid_size_nhat if grid_size_nhat is not None else config.K0_GRID
    if grid < 64:
        raise ValueError(f"grid_size_nhat must be at least 64, got {grid}")
    n = np.asarray(n, dtype=float)
    gamma_n = float(a.gamma(n))
    xi_tau = float(np.dot(a.xi(n), perp(n)))

    def alpha_of(phi):
        nhat = _rotated(n, phi)
        t = np.sin(phi)
        q = a.gamma(nhat) + gamma_n * np.cos(phi) - xi_tau * t
        return _alpha_from(gamma_n, q, t, strict=strict)

    phis = 2 * np.pi * np.arange(grid) / grid
    values = alpha_of(phis)
    best = float(values.max())
    if not (refine and strict) or best <= 0.0:
        return best

    step = 2 * np.pi / grid
    is_peak = (values >= np.roll(values, 1)) & (values >= np.roll(values, -1)) & (values > 0)
    peaks = np.flatnonzero(is_peak)
    peaks = peaks[np.argsort(values[peaks])[::-1][:REFINE_CANDIDATES]]
    for idx in peaks:
        lo = max(phis[idx] - step, MIN_OFFSET)
        hi = min(phis[idx] + step, 2 * np.pi - MIN_OFFSET)
        if hi <= lo:
            continue
        res = minimize_scalar(
            lambda phi: -float(alpha_of(np.array(phi))),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-12},
        )
        best = max(best, -float(res.fun))
    return best


@dataclass(frozen=True, eq=False)
class StabilizerTable:
    """k(n) tabulated at angles theta_i and interpolated linearly and periodically in theta."""

    angles: np.ndarray
    k_values: np.ndarray

    def __post_init__(self) -> None:
        angles = np.array(self.angles, dtype=float)
        values = np.array(self.k_values, dtype=float)
        if angles.ndim != 1 or angles.shape != values.shape or angles.size < 1:
            raise ValueError("stabilizer table needs matching 1-D angle and value arrays")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("stabilizer values must be finite and nonnegative")
        angles.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "k_values", values)

    def __call__(self, normals) -> np.ndarray:
        return self.at_theta(theta_of(normals))

    def at_theta(self, theta) -> np.ndarray:
        if self.angles.size == 1:
            return np.full(np.shape(theta), self.k_values[0])
        return np.interp(theta, self.angles, self.k_values, period=2 * np.pi)

    def scaled(self, factor: float) -> "StabilizerTable":
        return StabilizerTable(self.angles, factor * self.k_values)

    @classmethod
    def constant(cls, value: float) -> "StabilizerTable":
        return cls(np.array([0.0]), np.array([float(value)]))

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savetxt(path, np.column_stack([self.angles, self.k_values]), fmt="%.17g", delimiter=",", header="theta,k0", comments="")
        return path

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "StabilizerTable":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1])


def _envelope(values: np.ndarray, points: int, subsamples: int) -> np.ndarray:
    """Node values whose periodic linear interpolant stays above the sampled function.

    ``values`` holds k0 at points * subsamples uniform angles. Each sub-interval
    is bounded by its larger endpoint plus half its width times the steepest
    neighbouring slope; a node takes the largest bound over its two cells.
    """
    spacing = 2 * np.pi / values.size
    slope = np.abs(np.roll(values, -1) - values) / spacing
    local_slope = np.maximum(np.maximum(np.roll(slope, 1), slope), np.roll(slope, -1))
    bound = np.maximum(values, np.roll(values, -1)) + 0.5 * spacing * local_slope
    cells = bound.reshape(points, subsamples).max(axis=1)
    return np.maximum(cells, np.roll(cells, 1))


def build_stabilizer_table(
    a: Anisotropy,
    M_n: Optional[int] = None,
    grid_size_nhat: Optional[int] = None,
    safety: Optional[float] = None,
    check_condition: bool = True,
    subsamples: Optional[int] = None,
) -> StabilizerTable:
    """Tabulate safety * k at M_n uniformly spaced normals.

    With ``subsamples >= 1`` k0 is sampled that many times per cell and the
    node values are lifted so that the interpolated table bounds k0 from above
    between the nodes as well. ``subsamples=0`` tabulates k0 at the nodes
    only, whose interpolant can dip below k0 inside a cell.
    """
    points = M_n if M_n is not None else config.K0_POINTS
    grid = grid_size_nhat if grid_size_nhat is not None else config.K0_GRID
    factor = safety if safety is not None else config.K0_SAFETY
    per_cell = subsamples if subsamples is not None else config.K0_SUBSAMPLES
    if points < 1:
        raise ValueError(f"M_n must be positive, got {points}")
    if factor < 1:
        raise ValueError(f"safety factor must be >= 1, got {factor}")
    if per_cell < 0:
        raise ValueError(f"subsamples must be nonnegative, got {per_cell}")

    report = check_stability_condition(a, config.CONDITION_GRID)
    if check_condition and not report.holds:
        raise ConditionViolated(
            f"3 gamma(n) > gamma(-n) fails for {a!r}: margin {report.worst_margin:.6g} at theta={report.worst_angle:.6g}",
            margin=report.worst_margin,
            angle=report.worst_angle,
        )

    angles = 2 * np.pi * np.arange(points) / points
    samples = points * max(per_cell, 1)
    dense = normal_of(2 * np.pi * np.arange(samples) / samples)
    k0 = np.array([k0_at(a, n, grid, strict=check_condition) for n in dense])
    values = _envelope(k0, points, per_cell) if per_cell else k0
    logger.debug(
        f"k table for {a!r}: k0 in [{k0.min():.6g}, {k0.max():.6g}] over {samples} normals, "
        f"tabulated values in [{values.min():.6g}, {values.max():.6g}]"
    )
    return StabilizerTable(angles, factor * values)
