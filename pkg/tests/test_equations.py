"""Equation families: residual closure, linearization, cone machinery."""

import math

import numpy as np
import pytest

from ma_lab.continuity import manufacture
from ma_lab.equations import (
    ConeCheck,
    EquationSpec,
    compatibility_residual,
    compute_constant_c,
    cone_preservation_check,
    linearization_coeff,
    phi_concavity_probe,
    phi_operator,
    residual,
    twist_lower_bound,
)
from ma_lab.errors import ConfigError, EllipticityError, PositivityError
from ma_lab.torus_grid import (
    HermitianFormField,
    PotentialField,
    ddbar,
    field_from_modes,
    form_plus_ddbar,
    make_grid,
)


def _setup(family, n=2, points=12):
    grid = make_grid(n, points)
    omega0 = HermitianFormField.identity(grid)
    chi_pot = field_from_modes(grid, [("cos", (0, 1) + (0,) * (2 * n - 2), 0.01)])
    chi = form_plus_ddbar(omega0, chi_pot)
    # the j twist scales like (2 pi)^2 amp and must clear its -1/(2nc) floor
    amp = 0.003 if family == "j" else 0.02
    star = field_from_modes(grid, [("cos", (1,) + (0,) * (2 * n - 1), amp)])
    coeffs = (0.4,) * (n - 1) if family == "gma" else None
    spec = manufacture(family, omega0, chi, star, coeffs=coeffs)
    return grid, omega0, spec, star


def test_equation_spec_validation():
    grid = make_grid(2, 8)
    f = PotentialField(grid, np.zeros(grid.shape))
    eye = HermitianFormField.identity(grid)
    with pytest.raises(ConfigError):
        EquationSpec("j", eye, f, c=0.0)  # j constant must be positive
    with pytest.raises(ConfigError):
        EquationSpec("gma", eye, f, coeffs=(0.2, 0.3))  # n=2 takes one coefficient
    with pytest.raises(ConfigError):
        EquationSpec("gma", eye, f, coeffs=(-0.1,))
    with pytest.raises(ConfigError):
        EquationSpec("gma", eye, f, coeffs=(0.0,), c0=0.0)  # fully degenerate
    with pytest.raises(ConfigError):
        EquationSpec("heat", eye, f)
    with pytest.raises(ConfigError):
        EquationSpec("cma", HermitianFormField.identity(grid, scale=-1.0), f)


def test_twist_lower_bound_closed_form():
    assert twist_lower_bound(2.0, 2) == pytest.approx(-0.125)
    assert twist_lower_bound(1.0, 3) == pytest.approx(-1.0 / 6.0)
    assert twist_lower_bound(3.0, 2) == pytest.approx(-(1.0 / 4.0) * (1.0 / 3.0))


def test_compute_constant_c_identity_pencil():
    grid = make_grid(2, 8)
    eye = HermitianFormField.identity(grid)
    assert compute_constant_c(eye, eye) == pytest.approx(2.0, abs=1e-13)


@pytest.mark.parametrize("family", ["cma", "j", "gma"])
def test_residual_closes_at_manufactured_solution(family):
    _, omega0, spec, star = _setup(family)
    res = residual(spec, star, omega0)
    assert np.abs(res.values).max() < 1e-11
    assert abs(compatibility_residual(spec, omega0)) < 1e-11


def test_residual_of_zero_potential_is_minus_twist_for_cma():
    grid, omega0, spec, _ = _setup("cma")
    zero = PotentialField(grid, np.zeros(grid.shape))
    res = residual(spec, zero, omega0)
    assert np.abs(res.values + spec.f.values).max() < 1e-13


@pytest.mark.parametrize("family", ["cma", "j", "gma"])
def test_linearization_matches_directional_derivative(family):
    grid, omega0, spec, star = _setup(family)
    coeff = linearization_coeff(spec, star, omega0)
    direction = field_from_modes(grid, [("sin", (0, 0, 1, 0), 1.0)])
    hess_u = ddbar(direction).matrices
    predicted = np.einsum("...ij,...ji->...", coeff.matrices, hess_u).real
    h = 1e-5
    plus = residual(spec, PotentialField(grid, star.values + h * direction.values), omega0)
    minus = residual(spec, PotentialField(grid, star.values - h * direction.values), omega0)
    fd = (plus.values - minus.values) / (2.0 * h)
    # h^2 difference error against pointwise values of order ten
    assert np.abs(fd - predicted).max() < 1e-6


def test_linearization_is_positive_definite_inside_cone():
    for family in ("cma", "j", "gma"):
        _, omega0, spec, star = _setup(family)
        coeff = linearization_coeff(spec, star, omega0)
        eigs = np.linalg.eigvalsh(coeff.matrices)
        assert eigs.min() > 0.0


def test_linearization_raises_outside_cone():
    grid, omega0, spec, _ = _setup("j")
    # a potential large enough that omega_phi leaves the j cone
    big = field_from_modes(grid, [("cos", (1, 0, 0, 0), 0.2)])
    with pytest.raises((EllipticityError, PositivityError)):
        linearization_coeff(spec, big, omega0)


def _on_equation_tuple():
    lam = np.array([0.8, 1.4, 2.0])
    c = 3.0
    f = (c - (1.0 / lam).sum()) * lam.prod()
    return lam, f, c


def test_cone_preservation_check_branches():
    lam, f, c = _on_equation_tuple()
    assert cone_preservation_check(lam, f, c).status == ConeCheck.HOLDS
    assert bool(cone_preservation_check(lam, f, c))
    # below the admissible twist floor: the slack guarantee does not apply
    assert cone_preservation_check(lam, -10.0, c).status == ConeCheck.INAPPLICABLE
    # off the equation: also inapplicable
    assert cone_preservation_check(lam, f + 0.1, c).status == ConeCheck.INAPPLICABLE
    # loosened equation tolerance admits a tuple whose slack no longer
    # matches the closed-form identity, which must be flagged
    assert (
        cone_preservation_check(lam, f, c + 1e-4, equation_tol=1e-3).status
        == ConeCheck.FAILS
    )
    with pytest.raises(ConfigError):
        cone_preservation_check(np.array([-1.0, 2.0]), f, c)


def test_phi_operator_values():
    assert phi_operator("cma", [2.0, 4.0]) == pytest.approx(math.log(8.0))
    assert phi_operator("j", [2.0, 4.0], f_val=0.8) == pytest.approx(-0.85)
    lam = np.array([1.4, 0.9])
    expected = math.log(1.4 * 0.9 - 0.6 * (1.4 + 0.9) / 2.0)
    assert phi_operator("gma", lam, coeffs=(0.6,)) == pytest.approx(expected)
    with pytest.raises(ConfigError):
        phi_operator("cma", [1.0, -1.0])
    with pytest.raises(ConfigError):
        phi_operator("gma", [0.2, 0.2], coeffs=(1.0,))  # outside the cone
    with pytest.raises(ConfigError):
        phi_operator("heat", [1.0, 1.0])


def test_phi_concavity_probe_contract():
    with pytest.raises(ConfigError):
        phi_concavity_probe("cma", [1.0, 2.0], [2.0, 1.0], 1.5)
    with pytest.raises(ConfigError):
        phi_concavity_probe("cma", [1.0, -2.0], [2.0, 1.0], 0.5)
    # spectra are lifted to diagonal matrices; defect of a concave operator
    # along any Hermitian segment is non-negative
    assert phi_concavity_probe("cma", [1.0, 3.0], [3.0, 1.0], 0.5) >= 0.0
    assert phi_concavity_probe("j", [1.0, 3.0], [2.0, 2.0], 0.3, f_val=0.5) >= 0.0
    assert phi_concavity_probe("gma", [2.0, 2.5], [3.0, 2.0], 0.7, coeffs=(0.5,)) >= 0.0


def test_manufacture_rejects_oversized_solutions():
    grid = make_grid(2, 12)
    omega0 = HermitianFormField.identity(grid)
    big = field_from_modes(grid, [("cos", (1, 0, 0, 0), 0.5)])
    with pytest.raises(ConfigError):
        manufacture("cma", omega0, omega0, big)  # omega_phi leaves the cone
