"""Discrete closed curves: edge frames, area, mass-lumped products and arc-length derivatives.

A curve stores N distinct nodes; node indices wrap around modulo N, so edge j
always joins node j-1 to node j and edge 0 closes the polygon. Normals follow
n = -h^perp/|h| with perp the clockwise rotation (x, y) -> (y, -x), which points
outward for clockwise traversal.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from tools.errors import DegenerateEdge, ZeroArea

# Relative edge length (w.r.t. the bounding-box diagonal) below which an edge is degenerate
DEGENERACY_RATIO = 1e-14
ZERO_AREA = 1e-14


def perp(v: np.ndarray) -> np.ndarray:
    """Clockwise rotation by pi/2 of the trailing 2-vectors of ``v``."""
    v = np.asarray(v, dtype=float)
    return np.stack([v[..., 1], -v[..., 0]], axis=-1)


@dataclass(frozen=True, eq=False)
class ClosedCurve:
    """Periodic polyline with N >= 3 distinct nodes."""

    nodes: np.ndarray

    def __post_init__(self) -> None:
        nodes = np.array(self.nodes, dtype=float, copy=True)
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise ValueError(f"nodes must have shape (N, 2), got {nodes.shape}")
        if nodes.shape[0] < 3:
            raise ValueError(f"a closed curve needs at least 3 nodes, got {nodes.shape[0]}")
        if not np.all(np.isfinite(nodes)):
            raise ValueError("curve nodes must be finite")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def size(self) -> int:
        return int(self.nodes.shape[0])

    @cached_property
    def edges(self) -> np.ndarray:
        """Edge vectors h_j = X_j - X_{j-1}, shape (N, 2)."""
        h = self.nodes - np.roll(self.nodes, 1, axis=0)
        h.setflags(write=False)
        return h

    @cached_property
    def lengths(self) -> np.ndarray:
        lengths = np.hypot(self.edges[:, 0], self.edges[:, 1])
        lengths.setflags(write=False)
        return lengths

    @cached_property
    def diameter(self) -> float:
        """Bounding-box diagonal."""
        extent = self.nodes.max(axis=0) - self.nodes.min(axis=0)
        return float(np.hypot(extent[0], extent[1]))

    def check_edges(self) -> np.ndarray:
        """Return the edge lengths, raising DegenerateEdge for any collapsed edge."""
        threshold = DEGENERACY_RATIO * max(self.diameter, np.finfo(float).tiny)
        bad = np.flatnonzero(self.lengths < threshold)
        if bad.size:
            j = int(bad[0])
            raise DegenerateEdge(j, float(self.lengths[j]))
        return self.lengths

    def reversed(self) -> "ClosedCurve":
        return ClosedCurve(self.nodes[::-1])

    def translated(self, offset) -> "ClosedCurve":
        return ClosedCurve(self.nodes + np.asarray(offset, dtype=float))

    def scaled(self, factor: float, center=None) -> "ClosedCurve":
        c = self.nodes.mean(axis=0) if center is None else np.asarray(center, dtype=float)
        return ClosedCurve(c + factor * (self.nodes - c))

    def rotated(self, angle: float) -> "ClosedCurve":
        c, s = np.cos(angle), np.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        return ClosedCurve(self.nodes @ rot.T)


@dataclass(frozen=True, eq=False)
class EdgeFrames:
    """Per-edge vectors, lengths, outward normals and tangents (struct of arrays)."""

    h: np.ndarray
    length: np.ndarray
    normal: np.ndarray
    tangent: np.ndarray

    def __len__(self) -> int:
        return int(self.length.shape[0])


def edge_frames(curve: ClosedCurve) -> EdgeFrames:
    lengths = curve.check_edges()
    h = np.array(curve.edges)
    normal = -perp(h) / lengths[:, None]
    return EdgeFrames(h=h, length=np.array(lengths), normal=normal, tangent=perp(normal))


def polygon_area(curve: ClosedCurve) -> float:
    """Signed area, positive for clockwise traversal."""
    x, y = curve.nodes[:, 0], curve.nodes[:, 1]
    return 0.5 * float(np.sum((x - np.roll(x, 1)) * (y + np.roll(y, 1))))


def ensure_clockwise(curve: ClosedCurve) -> ClosedCurve:
    area = polygon_area(curve)
    if abs(area) < ZERO_AREA:
        raise ZeroArea(f"curve encloses no area (A = {area:.3e}); orientation is undefined")
    return curve if area > 0 else curve.reversed()


def _check_nodal(values: np.ndarray, curve: ClosedCurve) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape[0] != curve.size:
        raise ValueError(f"expected {curve.size} values, got {values.shape[0]}")
    return values


def _pointwise(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Dot product over trailing vector axes (identity for scalars)."""
    prod = u * v
    return prod.reshape(prod.shape[0], -1).sum(axis=1)


def mass_lumped_inner_scalar(u, v, curve: ClosedCurve) -> float:
    """(u, v)^h for continuous piecewise-linear (scalar or vector) nodal functions."""
    u, v = _check_nodal(u, curve), _check_nodal(v, curve)
    lengths = curve.check_edges()
    uv = _pointwise(u, v)
    return 0.5 * float(np.sum(lengths * (np.roll(uv, 1) + uv)))


def mass_lumped_inner_edgewise(p, q, curve: ClosedCurve) -> float:
    """(p, q)^h for piecewise-constant functions; both one-sided limits equal the edge value."""
    p, q = _check_nodal(p, curve), _check_nodal(q, curve)
    lengths = curve.check_edges()
    return float(np.sum(lengths * _pointwise(p, q)))


def mass_lumped_inner_mixed(nodal, edgewise, curve: ClosedCurve) -> float:
    """(u, p)^h with u nodal (piecewise linear) and p constant on each edge."""
    u, p = _check_nodal(nodal, curve), _check_nodal(edgewise, curve)
    lengths = curve.check_edges()
    return 0.5 * float(np.sum(lengths * (_pointwise(np.roll(u, 1, axis=0), p) + _pointwise(u, p))))


def discrete_ds(f, curve: ClosedCurve) -> np.ndarray:
    """Edgewise arc-length derivative (f_j - f_{j-1}) / |h_j|."""
    f = _check_nodal(f, curve)
    lengths = curve.check_edges()
    df = f - np.roll(f, 1, axis=0)
    return df / lengths.reshape((-1,) + (1,) * (df.ndim - 1))


def half_step_normal(old: ClosedCurve, new: ClosedCurve) -> np.ndarray:
    """n^{m+1/2}_j = -(h^m_j + h^{m+1}_j)^perp / (2 |h^m_j|); deliberately not unit length."""
    if old.size != new.size:
        raise ValueError(f"curves differ in size: {old.size} vs {new.size}")
    lengths = old.check_edges()
    return -0.5 * perp(old.edges + new.edges) / lengths[:, None]


def ellipse_curve(a: float, b: float, n: int) -> ClosedCurve:
    """Clockwise ellipse X(rho) = (a cos 2 pi rho, -b sin 2 pi rho) sampled at rho_j = j/n."""
    rho = np.arange(n) / n
    return ClosedCurve(np.column_stack([a * np.cos(2 * np.pi * rho), -b * np.sin(2 * np.pi * rho)]))


def circle_curve(radius: float, n: int) -> ClosedCurve:
    return ellipse_curve(radius, radius, n)
