"""Tests for discrete energy, mesh ratio, area loss and observed convergence orders."""

from __future__ import annotations

import numpy as np
import pytest

from tests.helpers import square, star_polygon
from tools.anisotropy import CaseOneAnisotropy, IsotropicAnisotropy, KFoldAnisotropy
from tools.diagnostics import (
    convergence_order,
    discrete_energy,
    relative_area_loss,
    weighted_lengths,
    weighted_mesh_ratio,
)
from tools.errors import NonPositiveError
from tools.geometry import ClosedCurve, circle_curve, ellipse_curve, polygon_area


def test_isotropic_energy_is_perimeter(random_octagon):
    assert discrete_energy(random_octagon, IsotropicAnisotropy()) == pytest.approx(random_octagon.lengths.sum())


def test_case_one_energy_on_unit_square(unit_square):
    # normals: bottom (0,-1), left (-1,0), top (0,1), right (1,0)
    weights = weighted_lengths(unit_square, CaseOneAnisotropy())
    np.testing.assert_allclose(weights, [1.0, 1.0, 1.0, 2.0])
    assert discrete_energy(unit_square, CaseOneAnisotropy()) == pytest.approx(5.0)


def test_energy_scales_linearly(builtin_anisotropy):
    curve = star_polygon(12, seed=4)
    base = discrete_energy(curve, builtin_anisotropy)
    assert discrete_energy(curve.scaled(3.0), builtin_anisotropy) == pytest.approx(3.0 * base)
    assert discrete_energy(curve.translated([5.0, -1.0]), builtin_anisotropy) == pytest.approx(base)


def test_energy_is_rotation_invariant_only_for_isotropic(random_octagon):
    iso = IsotropicAnisotropy()
    assert discrete_energy(random_octagon.rotated(0.4), iso) == pytest.approx(discrete_energy(random_octagon, iso))
    threefold = KFoldAnisotropy(beta=1.0 / 3.0)
    turned = random_octagon.rotated(2 * np.pi / 3)
    assert discrete_energy(turned, threefold) == pytest.approx(discrete_energy(random_octagon, threefold))


def test_mesh_ratio_examples(unit_square):
    assert weighted_mesh_ratio(unit_square, IsotropicAnisotropy()) == pytest.approx(1.0)
    rectangle = ClosedCurve([[0.0, 0.0], [0.0, 1.0], [2.0, 1.0], [2.0, 0.0]])
    assert weighted_mesh_ratio(rectangle, IsotropicAnisotropy()) == pytest.approx(2.0)
    assert weighted_mesh_ratio(unit_square, CaseOneAnisotropy()) == pytest.approx(2.0)
    assert weighted_mesh_ratio(circle_curve(1.0, 64), IsotropicAnisotropy()) == pytest.approx(1.0)


def test_relative_area_loss():
    curve = square(side=2.0)
    assert relative_area_loss(curve, 4.0) == 0.0
    assert relative_area_loss(curve, 5.0) == pytest.approx(-0.2)
    ellipse = ellipse_curve(2.0, 0.5, 64)
    assert relative_area_loss(ellipse, polygon_area(ellipse)) == 0.0


def test_convergence_order_second_order():
    errors = [(0.5, 4e-2), (0.25, 1e-2), (0.125, 2.5e-3)]
    np.testing.assert_allclose(convergence_order(errors), [2.0, 2.0])


def test_convergence_order_mixed():
    orders = convergence_order([(2 ** -5, 1e-3), (2 ** -6, 2.6e-4), (2 ** -7, 6.4e-5)])
    assert orders.shape == (2,)
    assert orders[0] == pytest.approx(np.log2(1e-3 / 2.6e-4))
    assert orders[1] == pytest.approx(np.log2(2.6e-4 / 6.4e-5))


def test_convergence_order_rejects_bad_input():
    with pytest.raises(NonPositiveError):
        convergence_order([(0.5, 1e-2), (0.25, 0.0)])
    with pytest.raises(ValueError):
        convergence_order([(0.5, 1e-2)])
    with pytest.raises(ValueError):
        convergence_order([(0.5, 1e-2), (0.2, 1e-3)])
