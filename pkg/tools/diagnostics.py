"""Energy, mesh quality and convergence indicators for discrete curves."""

from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

from tools.anisotropy import Anisotropy
from tools.errors import NonPositiveError
from tools.geometry import ClosedCurve, edge_frames, polygon_area


def weighted_lengths(curve: ClosedCurve, a: Anisotropy) -> np.ndarray:
    """|h_j| gamma(n_j) per edge."""
    frames = edge_frames(curve)
    return frames.length * a.gamma(frames.normal)


def discrete_energy(curve: ClosedCurve, a: Anisotropy) -> float:
    """W = sum_j |h_j| gamma(n_j)."""
    return float(np.sum(weighted_lengths(curve, a)))


def weighted_mesh_ratio(curve: ClosedCurve, a: Anisotropy) -> float:
    w = weighted_lengths(curve, a)
    return float(w.max() / w.min())


def relative_area_loss(curve: ClosedCurve, initial_area: float) -> float:
    """(A^m - A^0) / A^0 with signed areas of clockwise curves."""
    return (polygon_area(curve) - initial_area) / initial_area


def convergence_order(errors: Sequence[Tuple[float, float]]) -> np.ndarray:
    """Observed orders log2(e(2h) / e(h)) for a ratio-2 refinement sequence.

    ``errors`` holds (h, e) pairs ordered from coarse to fine; the same helper
    serves time refinement when h is read as tau. Returns one order per
    consecutive pair.
    """
    data = np.asarray(errors, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 2:
        raise ValueError("convergence_order needs at least two (h, error) pairs")
    h, e = data[:, 0], data[:, 1]
    if np.any(e <= 0):
        raise NonPositiveError(f"errors must be positive, got {e.tolist()}")
    ratios = h[:-1] / h[1:]
    if not np.allclose(ratios, 2.0, rtol=1e-6):
        raise ValueError(f"mesh sizes must halve from one entry to the next, got ratios {ratios.tolist()}")
    return np.log2(e[:-1] / e[1:])
