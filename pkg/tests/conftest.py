"""Shared fixtures: small curves, the builtin anisotropies and cheap stabilizer tables."""

from __future__ import annotations

import os

import pytest

# Keep library defaults independent of a developer's .env.
os.environ.setdefault("ANIFLOW_LOG_LEVEL", "WARNING")

from tests.helpers import square, star_polygon  # noqa: E402
from tools.anisotropy import CaseOneAnisotropy, IsotropicAnisotropy, KFoldAnisotropy  # noqa: E402
from tools.geometry import ClosedCurve, circle_curve, ellipse_curve  # noqa: E402
from tools.stabilization import StabilizerTable, build_stabilizer_table  # noqa: E402


@pytest.fixture
def unit_square() -> ClosedCurve:
    return square()


@pytest.fixture
def random_octagon() -> ClosedCurve:
    return star_polygon(8, seed=3)


@pytest.fixture
def small_ellipse() -> ClosedCurve:
    return ellipse_curve(2.0, 0.5, 32)


@pytest.fixture
def unit_circle_64() -> ClosedCurve:
    return circle_curve(1.0, 64)


@pytest.fixture
def isotropic():
    return IsotropicAnisotropy()


@pytest.fixture
def case_one():
    return CaseOneAnisotropy()


@pytest.fixture
def threefold():
    return KFoldAnisotropy(beta=1.0 / 3.0, k=3)


@pytest.fixture(params=["isotropic", "case1", "kfold"])
def builtin_anisotropy(request):
    return {
        "isotropic": IsotropicAnisotropy(),
        "case1": CaseOneAnisotropy(),
        "kfold": KFoldAnisotropy(beta=1.0 / 3.0, k=3),
    }[request.param]


@pytest.fixture
def zero_table() -> StabilizerTable:
    return StabilizerTable.constant(0.0)


@pytest.fixture
def coarse_k0_table():
    """Factory for a cheap k0 table (20 normals, 256-point sweep)."""

    def _factory(a):
        return build_stabilizer_table(a, M_n=20, grid_size_nhat=256)

    return _factory
