"""Grid construction, spectral derivatives, and field validation."""

import numpy as np
import pytest

from ma_lab.errors import ConfigError
from ma_lab.oracles import fd_complex_hessian
from ma_lab.torus_grid import (
    HermitianFormField,
    PotentialField,
    ddbar,
    field_from_function,
    field_from_modes,
    form_plus_ddbar,
    gradient,
    integrate,
    make_grid,
    third_derivatives,
)


def test_make_grid_rejects_bad_shapes():
    with pytest.raises(ConfigError):
        make_grid(2, 15)  # odd
    with pytest.raises(ConfigError):
        make_grid(2, 6)  # too coarse
    with pytest.raises(ConfigError):
        make_grid(4, 16)  # unsupported dimension


def test_grid_geometry():
    grid = make_grid(2, 16)
    assert grid.shape == (16, 16, 16, 16)
    assert grid.num_points == 16**4
    assert grid.spacing == 1.0 / 16
    x = grid.axis_coordinates()
    assert x[0] == 0.0 and x[-1] == 1.0 - 1.0 / 16


def test_potential_field_validation():
    grid = make_grid(1, 16)
    with pytest.raises(ConfigError):
        PotentialField(grid, np.zeros((8, 8)))
    bad = np.zeros(grid.shape)
    bad[0, 0] = np.inf
    with pytest.raises(ConfigError):
        PotentialField(grid, bad)
    with pytest.raises(ConfigError):
        PotentialField(grid, np.ones(grid.shape), "mean-zero")
    tagged = PotentialField(grid, np.ones(grid.shape)).mean_zero()
    assert tagged.values.mean() == 0.0
    supn = PotentialField(grid, np.ones(grid.shape)).sup_normalized()
    assert supn.sup() == -1.0


def test_hermitian_field_validation():
    grid = make_grid(2, 8)
    m = np.zeros(grid.shape + (2, 2), dtype=complex)
    m[..., 0, 1] = 1.0j  # not Hermitian without the conjugate mirror
    with pytest.raises(ConfigError):
        HermitianFormField(grid, m)
    eye = HermitianFormField.identity(grid, scale=2.0)
    assert np.allclose(eye.matrices[..., 0, 0], 2.0)


def test_integrate_is_exact_on_modes():
    grid = make_grid(1, 16)
    mode = field_from_modes(grid, [("cos", (1, 0), 0.3)])
    assert abs(integrate(grid, mode.values)) < 1e-15
    assert integrate(grid, np.full(grid.shape, 2.5)) == 2.5


def test_mode_band_limit_rejected():
    grid = make_grid(1, 16)
    with pytest.raises(ConfigError):
        field_from_modes(grid, [("cos", (8, 0), 0.1)])  # at Nyquist
    with pytest.raises(ConfigError):
        field_from_modes(grid, [("cos", (1, 0, 0, 0), 0.1)])  # wrong length
    with pytest.raises(ConfigError):
        field_from_modes(grid, [("tan", (1, 0), 0.1)])


def test_gradient_exact_on_band_limited_fields():
    grid = make_grid(1, 32)
    phi = field_from_modes(grid, [("cos", (2, 0), 0.5)])
    grads = gradient(phi)
    x = grid.coordinates()
    expected = -0.5 * 4.0 * np.pi * np.sin(4.0 * np.pi * np.broadcast_to(x[0], grid.shape))
    assert np.abs(grads[0] - expected).max() < 1e-12
    assert np.abs(grads[1]).max() < 1e-12


def test_ddbar_matches_mode_closed_form():
    # for phi = a cos(2 pi k.x) the +-k symbol pair combines to the complex
    # constant -a m_j conj(m_l) times cos(2 pi k.x), m_j = pi (k_{2j+1} + i k_{2j})
    grid = make_grid(2, 16)
    kvec = (1, 2, 0, -1)
    amp = 0.07
    phi = field_from_modes(grid, [("cos", kvec, amp)])
    hess = ddbar(phi).matrices
    x = grid.coordinates()
    theta = 2.0 * np.pi * sum(k * xi for k, xi in zip(kvec, x))
    cos_theta = np.cos(np.broadcast_to(theta, grid.shape))
    m = [np.pi * (kvec[2 * j + 1] + 1j * kvec[2 * j]) for j in range(2)]
    for j in range(2):
        for l in range(2):
            expected = -amp * m[j] * np.conj(m[l]) * cos_theta
            assert np.abs(hess[..., j, l] - expected).max() < 1e-12


def test_ddbar_cross_checks_finite_differences():
    # fourth-order stencil error ~ (2 pi)^6 amp h^4 / 30 ~ 2e-4 at 32/axis
    grid = make_grid(2, 32)
    phi = field_from_modes(
        grid,
        [("cos", (1, 0, 0, 1), 0.11), ("sin", (0, 1, -1, 0), 0.09)],
    )
    spectral = ddbar(phi).matrices
    fd = fd_complex_hessian(grid, phi.values)
    assert np.abs(spectral - fd).max() < 3e-3


def test_ddbar_diagonal_mean_vanishes():
    grid = make_grid(2, 16)
    phi = field_from_modes(grid, [("cos", (1, 0, 2, 0), 0.2), ("sin", (0, 3, 0, 1), 0.1)])
    hess = ddbar(phi).matrices
    for j in range(grid.n):
        assert abs(integrate(grid, hess[..., j, j].real)) < 1e-14


def test_form_plus_ddbar_and_third_derivatives_symmetry():
    grid = make_grid(2, 16)
    phi = field_from_modes(grid, [("cos", (1, 1, 0, 0), 0.03)])
    omega = form_plus_ddbar(HermitianFormField.identity(grid), phi)
    assert omega.hermitian_defect() < 1e-13
    third = third_derivatives(phi)
    # symmetric in the two unbarred slots
    assert np.abs(third[..., 0, 1, 1] - third[..., 1, 1, 0]).max() < 1e-12


def test_field_from_function_round_trips_modes():
    grid = make_grid(1, 16)

    def fn(x0, x1):
        return 0.2 * np.cos(2 * np.pi * (x0 + x1))

    phi = field_from_function(grid, fn)
    direct = field_from_modes(grid, [("cos", (1, 1), 0.2)])
    assert np.abs(phi.values - direct.values).max() < 1e-14

    with pytest.raises(ConfigError):
        field_from_function(grid, lambda x0, x1: x0**2)  # not periodic
