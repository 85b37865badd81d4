"""Anisotropic surface energies gamma(n), their one-homogeneous extensions and Cahn-Hoffman xi-vectors.

All evaluators are vectorized over the trailing axis: ``normals`` has shape
``(..., 2)`` and results have shape ``(...)`` for gamma and ``(..., 2)`` for xi.
Angles follow n = (sin theta, -cos theta).
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from tools.errors import NonFinite
from tools.geometry import perp

FD_STEP = 1e-6


def theta_of(normals) -> np.ndarray:
    """Angle theta in [0, 2 pi) with n = (sin theta, -cos theta)."""
    n = np.asarray(normals, dtype=float)
    return np.mod(np.arctan2(n[..., 0], -n[..., 1]), 2 * np.pi)


def normal_of(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.sin(theta), -np.cos(theta)], axis=-1)


class Anisotropy(ABC):
    """Evaluator bundle for gamma(n), gamma(p) and xi(n)."""

    label: str = "anisotropy"

    @abstractmethod
    def gamma(self, normals) -> np.ndarray:
        """gamma at unit normals."""

    def xi(self, normals) -> np.ndarray:
        """Cahn-Hoffman vector; subclasses with closed forms override this."""
        return xi_numeric(self, normals)

    def gamma_extension(self, p) -> np.ndarray:
        """|p| gamma(p/|p|), and 0 at p = 0."""
        p = np.asarray(p, dtype=float)
        r = np.hypot(p[..., 0], p[..., 1])
        safe = np.where(r > 0, r, 1.0)
        unit = p / safe[..., None]
        unit = np.where((r > 0)[..., None], unit, np.array([0.0, -1.0]))
        return np.where(r > 0, r * self.gamma(unit), 0.0)

    @property
    def strength(self) -> str:
        return "unknown"

    def scaled(self, factor: float) -> "Anisotropy":
        if factor <= 0:
            raise ValueError(f"scale factor must be positive, got {factor}")
        return ScaledAnisotropy(self, float(factor))

    def __add__(self, other: "Anisotropy") -> "Anisotropy":
        if not isinstance(other, Anisotropy):
            return NotImplemented
        return SumAnisotropy(self, other)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.label})"


@dataclass(frozen=True, repr=False)
class IsotropicAnisotropy(Anisotropy):
    label: str = "isotropic"

    def gamma(self, normals) -> np.ndarray:
        return np.ones(np.shape(normals)[:-1])

    def xi(self, normals) -> np.ndarray:
        return np.array(normals, dtype=float)

    @property
    def strength(self) -> str:
        return "isotropic"


def _case1_coefficient(n1: np.ndarray) -> np.ndarray:
    # sgn(0) := 0, the gradient is continuous across n1 = 0 anyway
    return 2.5 + 1.5 * np.sign(n1)


@dataclass(frozen=True, repr=False)
class CaseOneAnisotropy(Anisotropy):
    """gamma(n) = sqrt((5/2 + 3/2 sgn(n1)) n1^2 + n2^2), piecewise C^2."""

    label: str = "case1"

    def gamma(self, normals) -> np.ndarray:
        n = np.asarray(normals, dtype=float)
        return np.sqrt(_case1_coefficient(n[..., 0]) * n[..., 0] ** 2 + n[..., 1] ** 2)

    def xi(self, normals) -> np.ndarray:
        return xi_case1(normals)


@dataclass(frozen=True, repr=False)
class KFoldAnisotropy(Anisotropy):
    """gamma(theta) = 1 + beta cos(k theta + phase); Case II is k = 3, phase = 0."""

    beta: float
    k: int = 3
    phase: float = 0.0
    label: str = "kfold"

    def __post_init__(self) -> None:
        if not abs(self.beta) < 1:
            raise ValueError(f"k-fold anisotropy requires |beta| < 1, got {self.beta}")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")

    def gamma(self, normals) -> np.ndarray:
        return 1.0 + self.beta * np.cos(self.k * theta_of(normals) + self.phase)

    def xi(self, normals) -> np.ndarray:
        return xi_kfold(self, normals)

    @property
    def strength(self) -> str:
        if self.beta == 0:
            return "isotropic"
        # gamma + gamma'' > 0 everywhere iff |beta| (k^2 - 1) < 1
        return "weak" if abs(self.beta) * (self.k ** 2 - 1) < 1 else "strong"


@dataclass(frozen=True, repr=False)
class TabulatedAnisotropy(Anisotropy):
    """gamma given on an angular grid, periodic piecewise-linear in theta; xi by finite differences."""

    thetas: Tuple[float, ...]
    values: Tuple[float, ...]
    label: str = "table"

    def __post_init__(self) -> None:
        thetas = np.asarray(self.thetas, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if thetas.shape != values.shape or thetas.size < 3:
            raise ValueError("gamma table needs matching theta/gamma columns with at least 3 rows")
        if np.any(values <= 0) or not np.all(np.isfinite(values)):
            raise ValueError("tabulated gamma must be finite and positive")

    def gamma(self, normals) -> np.ndarray:
        return np.interp(theta_of(normals), np.asarray(self.thetas), np.asarray(self.values), period=2 * np.pi)


@dataclass(frozen=True, repr=False)
class ScaledAnisotropy(Anisotropy):
    base: Anisotropy
    factor: float

    @property
    def label(self) -> str:  # type: ignore[override]
        return f"{self.factor:g}*{self.base.label}"

    def gamma(self, normals) -> np.ndarray:
        return self.factor * self.base.gamma(normals)

    def xi(self, normals) -> np.ndarray:
        return self.factor * self.base.xi(normals)

    @property
    def strength(self) -> str:
        return self.base.strength


@dataclass(frozen=True, repr=False)
class SumAnisotropy(Anisotropy):
    first: Anisotropy
    second: Anisotropy

    @property
    def label(self) -> str:  # type: ignore[override]
        return f"{self.first.label}+{self.second.label}"

    def gamma(self, normals) -> np.ndarray:
        return self.first.gamma(normals) + self.second.gamma(normals)

    def xi(self, normals) -> np.ndarray:
        return self.first.xi(normals) + self.second.xi(normals)


def gamma_extension(a: Anisotropy, p) -> np.ndarray:
    return a.gamma_extension(p)


def xi_case1(normals) -> np.ndarray:
    n = np.asarray(normals, dtype=float)
    coeff = _case1_coefficient(n[..., 0])
    g = np.sqrt(coeff * n[..., 0] ** 2 + n[..., 1] ** 2)
    return np.stack([coeff * n[..., 0], n[..., 1]], axis=-1) / g[..., None]


def xi_kfold(params: KFoldAnisotropy, normals) -> np.ndarray:
    """xi = gamma n + k beta sin(k theta + phase) tau with tau = n^perp."""
    n = np.asarray(normals, dtype=float)
    angle = params.k * theta_of(n) + params.phase
    g = 1.0 + params.beta * np.cos(angle)
    tangential = params.k * params.beta * np.sin(angle)
    return g[..., None] * n + tangential[..., None] * perp(n)


def xi_numeric(a: Anisotropy, normals, step: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient of gamma(p) at p = n with the normal part reset to gamma(n)."""
    n = np.asarray(normals, dtype=float)
    ex = np.array([step, 0.0])
    ey = np.array([0.0, step])
    dx = (a.gamma_extension(n + ex) - a.gamma_extension(n - ex)) / (2 * step)
    dy = (a.gamma_extension(n + ey) - a.gamma_extension(n - ey)) / (2 * step)
    g = a.gamma(n)
    if not (np.all(np.isfinite(dx)) and np.all(np.isfinite(dy)) and np.all(np.isfinite(g))):
        raise NonFinite(f"non-finite gamma evaluation for {a!r}")
    tau = perp(n)
    tangential = dx * tau[..., 0] + dy * tau[..., 1]
    return g[..., None] * n + tangential[..., None] * tau


@dataclass(frozen=True)
class StabilityReport:
    holds: bool
    worst_margin: float
    worst_angle: float


def check_stability_condition(a: Anisotropy, grid_size: int) -> StabilityReport:
    """Evaluate m(n) = 3 gamma(n) - gamma(-n) on a uniform angular grid."""
    if grid_size < 16:
        raise ValueError(f"grid_size must be at least 16, got {grid_size}")
    thetas = 2 * np.pi * np.arange(grid_size) / grid_size
    normals = normal_of(thetas)
    margin = 3 * a.gamma(normals) - a.gamma(-normals)
    worst = int(np.argmin(margin))
    return StabilityReport(
        holds=bool(margin[worst] > 0),
        worst_margin=float(margin[worst]),
        worst_angle=float(thetas[worst]),
    )
