"""Simple polygons and the manifold distance between the regions two closed curves enclose."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np
from shapely.geometry import Polygon
from shapely.validation import explain_validity

from tools.errors import NonSimpleInput
from tools.geometry import ClosedCurve


@dataclass(frozen=True, eq=False)
class SimplePolygon:
    """Non-self-intersecting closed polygon; simplicity is checked on construction."""

    vertices: np.ndarray

    def __post_init__(self) -> None:
        vertices = np.array(self.vertices, dtype=float, copy=True)
        if vertices.ndim != 2 or vertices.shape[1] != 2 or vertices.shape[0] < 3:
            raise ValueError(f"a polygon needs at least 3 vertices of shape (N, 2), got {vertices.shape}")
        vertices.setflags(write=False)
        object.__setattr__(self, "vertices", vertices)
        if not self.shape.is_valid:
            raise NonSimpleInput(f"polygon is not simple: {explain_validity(self.shape)}")

    @cached_property
    def shape(self) -> Polygon:
        return Polygon(self.vertices)

    @property
    def area(self) -> float:
        """Unsigned enclosed area."""
        return float(self.shape.area)

    @classmethod
    def from_curve(cls, curve: ClosedCurve) -> "SimplePolygon":
        return cls(curve.nodes)


PolygonLike = Union[SimplePolygon, ClosedCurve]


def _as_polygon(p: PolygonLike) -> SimplePolygon:
    return SimplePolygon.from_curve(p) if isinstance(p, ClosedCurve) else p


def manifold_distance(p1: PolygonLike, p2: PolygonLike) -> float:
    """2 |Omega_1 u Omega_2| - |Omega_1| - |Omega_2|.

    Evaluated as the area of the symmetric difference, exactly zero for
    identical regions.
    """
    a, b = _as_polygon(p1), _as_polygon(p2)
    return float(a.shape.symmetric_difference(b.shape).area)
