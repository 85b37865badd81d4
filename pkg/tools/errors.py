"""Exception types raised by the aniflow library."""

from __future__ import annotations

from typing import Optional


class AniflowError(Exception):
    """Base class for all aniflow failures."""


class DegenerateEdge(AniflowError):
    """An edge of the polygonal curve has (numerically) zero length."""

    def __init__(self, edge: int, length: float) -> None:
        super().__init__(f"Degenerate edge {edge}: |h| = {length:.3e}")
        self.edge = edge
        self.length = length


class ZeroArea(AniflowError):
    """Orientation cannot be decided because the enclosed area vanishes."""


class NonFinite(AniflowError):
    """A surface energy evaluation produced NaN or infinity."""


class ConditionViolated(AniflowError):
    """The energy-stability condition 3*gamma(n) > gamma(-n) fails."""

    def __init__(self, message: str, margin: Optional[float] = None, angle: Optional[float] = None) -> None:
        super().__init__(message)
        self.margin = margin
        self.angle = angle


class RankDeficient(AniflowError):
    """A least-squares normal matrix is singular."""


class NewtonDiverged(AniflowError):
    """Newton's method did not reach the tolerance within the iteration budget."""

    def __init__(self, iterations: int, increment: float, residual: float) -> None:
        super().__init__(
            f"Newton did not converge in {iterations} iterations "
            f"(last increment {increment:.3e}, residual {residual:.3e})"
        )
        self.iterations = iterations
        self.increment = increment
        self.residual = residual


class LinearSolveFailed(AniflowError):
    """The Newton Jacobian could not be factorized."""


class NonSimpleInput(AniflowError):
    """A polygon given to a boolean operation is self-intersecting."""


class NonPositiveError(AniflowError):
    """An error sequence contains a non-positive entry."""


class SimulationFailed(AniflowError):
    """A time step failed inside the run loop."""

    def __init__(self, step: int, tau: float, cause: AniflowError) -> None:
        super().__init__(
            f"Step {step} failed: {cause}. Try a smaller time step, e.g. tau={tau / 2:.6g}"
        )
        self.step = step
        self.suggested_tau = tau / 2
        self.cause = cause
