"""Curve builders shared by the test modules."""

from __future__ import annotations

import numpy as np

from tools.geometry import ClosedCurve


def star_polygon(n: int, seed: int = 0, jitter: float = 0.2) -> ClosedCurve:
    """Clockwise star-shaped polygon with randomized radii and angle offsets."""
    rng = np.random.default_rng(seed)
    base = -2 * np.pi * np.arange(n) / n
    angles = base - rng.uniform(0, jitter, n) * 2 * np.pi / n
    radii = 1.0 + rng.uniform(-jitter, jitter, n)
    return ClosedCurve(np.column_stack([radii * np.cos(angles), radii * np.sin(angles)]))


def square(x0: float = 0.0, y0: float = 0.0, side: float = 1.0) -> ClosedCurve:
    """Clockwise axis-aligned square with lower-left corner (x0, y0)."""
    return ClosedCurve([[x0, y0], [x0, y0 + side], [x0 + side, y0 + side], [x0 + side, y0]])


def random_convex_polygon(rng: np.random.Generator, n: int = 6) -> ClosedCurve:
    """Clockwise convex polygon inscribed in a randomly placed ellipse."""
    angles = -np.sort(rng.uniform(0, 2 * np.pi, n))
    a, b = rng.uniform(0.5, 1.5, 2)
    center = rng.uniform(-0.5, 0.5, 2)
    return ClosedCurve(np.column_stack([center[0] + a * np.cos(angles), center[1] + b * np.sin(angles)]))
