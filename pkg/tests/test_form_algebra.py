"""Pointwise pencil algebra: spectra, symmetric functions, cone margins."""

import numpy as np
import pytest

from ma_lab.errors import ConfigError, PositivityError
from ma_lab.form_algebra import (
    elementary_symmetric,
    gma_cone_margin,
    gma_margin_components,
    j_cone_margin,
    positivity_margin,
    relative_eigenvalues,
    wedge_density,
)
from ma_lab.oracles import wedge_density_oracle


def _random_pair(rng, n, chi_shift=0.5, omega_shift=0.0):
    w = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    chi = w @ w.conj().T / n + chi_shift * np.eye(n)
    w = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    omega = w @ w.conj().T / n + omega_shift * np.eye(n)
    return chi, omega


def test_relative_eigenvalues_trivial_cases():
    assert np.allclose(relative_eigenvalues(np.eye(2), np.diag([2.0, 3.0])), [2.0, 3.0])
    assert np.allclose(relative_eigenvalues(2.0 * np.eye(2), np.eye(2)), [0.5, 0.5])


def test_relative_eigenvalues_solve_characteristic_polynomial():
    rng = np.random.default_rng(11)
    for n in (2, 3):
        for _ in range(50):
            chi, omega = _random_pair(rng, n)
            lam = relative_eigenvalues(chi, omega)
            scale = max(1.0, abs(np.linalg.det(omega)))
            for value in lam:
                defect = abs(np.linalg.det(omega - value * chi))
                assert defect < 1e-10 * scale


def test_relative_eigenvalues_congruence_invariant():
    rng = np.random.default_rng(12)
    chi, omega = _random_pair(rng, 3)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    lam = relative_eigenvalues(chi, omega)
    lam_t = relative_eigenvalues(a.conj().T @ chi @ a, a.conj().T @ omega @ a)
    assert np.abs(lam - lam_t).max() < 1e-9


def test_relative_eigenvalues_need_positive_base():
    with pytest.raises((PositivityError, ValueError)):
        relative_eigenvalues(np.diag([1.0, -1.0]), np.eye(2))


def test_elementary_symmetric_values():
    lam = np.array([1.0, 2.0, 3.0])
    assert elementary_symmetric(lam, 0) == 1.0
    assert elementary_symmetric(lam, 1) == 6.0
    assert elementary_symmetric(lam, 2) == 11.0
    assert elementary_symmetric(lam, 3) == 6.0
    with pytest.raises(ConfigError):
        elementary_symmetric(lam, 4)


def test_wedge_density_edge_orders():
    rng = np.random.default_rng(13)
    chi, omega = _random_pair(rng, 3)
    # k = 0 is the constant 1; k = n is the determinant ratio
    assert abs(float(wedge_density(chi, omega, 0)) - 1.0) < 1e-14
    det_ratio = np.linalg.det(omega).real / np.linalg.det(chi).real
    assert abs(float(wedge_density(chi, omega, 3)) - det_ratio) < 1e-10
    with pytest.raises(ConfigError):
        wedge_density(chi, omega, 4)


def test_wedge_density_matches_exterior_algebra_oracle():
    rng = np.random.default_rng(14)
    for n in (2, 3):
        for _ in range(25):
            chi, omega = _random_pair(rng, n, omega_shift=float(rng.uniform(-0.3, 0.4)))
            for k in range(n + 1):
                fast = float(wedge_density(chi, omega, k))
                slow = float(wedge_density_oracle(chi, omega, k))
                assert abs(fast - slow) < 1e-9


def test_j_cone_margin_signs():
    # identity pencil: sum_{i != k} 1/lam = n - 1, so margin = c - (n - 1)
    n = 3
    chi = np.eye(n)
    omega = np.eye(n)
    assert abs(j_cone_margin(chi, omega, 3.0) - 1.0) < 1e-12
    assert j_cone_margin(chi, omega, 1.5) < 0.0
    with pytest.raises(PositivityError):
        j_cone_margin(chi, np.diag([1.0, 1.0, -0.5]), 3.0)


def test_gma_margin_components_closed_form():
    lam = np.array([2.0, 3.0])
    # d/d lam_j of lam1 lam2 - c1 (lam1 + lam2)/2
    comps = gma_margin_components(lam, (0.6,))
    assert np.allclose(comps, [3.0 - 0.3, 2.0 - 0.3])
    with pytest.raises(ConfigError):
        gma_margin_components(lam, (0.6, 0.1))  # wrong count


def test_gma_cone_margin_sign_flip():
    chi = np.eye(2)
    inside = np.diag([2.0, 3.0])
    outside = np.diag([0.1, 5.0])  # small eigenvalue drags a component negative
    assert gma_cone_margin(chi, inside, (0.6,)) > 0.0
    assert gma_cone_margin(chi, outside, (0.6,)) < 0.0


def test_positivity_margin_is_min_eigenvalue():
    mats = np.stack([np.diag([1.0, 4.0]), np.diag([0.2, 9.0])]).astype(complex)
    assert positivity_margin(mats) == pytest.approx(0.2)
