"""Continuity-method loop: small end-to-end solves and its guard rails."""

import numpy as np
import pytest

from ma_lab.continuity import (
    MonitorBundle,
    Tolerances,
    compute_monitors,
    default_schedule,
    manufacture,
    newton_step,
    solve_continuity,
)
from ma_lab.equations import EquationSpec, residual
from ma_lab.errors import ConfigError, MonitorBlowup
from ma_lab.torus_grid import (
    HermitianFormField,
    PotentialField,
    field_from_modes,
    form_plus_ddbar,
    make_grid,
)


def _manufactured(family="cma", n=1, points=16, amp=0.05):
    grid = make_grid(n, points)
    omega0 = HermitianFormField.identity(grid)
    chi = form_plus_ddbar(
        omega0, field_from_modes(grid, [("sin", (0, 1) + (0,) * (2 * n - 2), 0.002)])
    )
    star = field_from_modes(grid, [("cos", (1,) + (0,) * (2 * n - 1), amp)])
    spec = manufacture(family, omega0, chi, star)
    return grid, omega0, spec, star


def test_default_schedule():
    assert default_schedule(4) == [0.0, 0.25, 0.5, 0.75, 1.0]
    with pytest.raises(ConfigError):
        default_schedule(0)


def test_schedule_validation():
    _, omega0, spec, _ = _manufactured()
    with pytest.raises(ConfigError):
        solve_continuity(spec, omega0, schedule=[0.0, 0.5])  # must end at 1
    with pytest.raises(ConfigError):
        solve_continuity(spec, omega0, schedule=[0.0, 0.6, 0.4, 1.0])


def test_incompatible_data_rejected():
    grid = make_grid(1, 16)
    omega0 = HermitianFormField.identity(grid)
    # constant twist breaks the cma integral identity
    f = PotentialField(grid, np.full(grid.shape, 0.3))
    spec = EquationSpec("cma", HermitianFormField.identity(grid), f)
    with pytest.raises(ConfigError):
        solve_continuity(spec, omega0)


def test_monitors_at_flat_potential():
    grid = make_grid(2, 8)
    omega0 = HermitianFormField.identity(grid)
    f = PotentialField(grid, np.zeros(grid.shape))
    spec = EquationSpec("cma", HermitianFormField.identity(grid), f)
    zero = PotentialField(grid, np.zeros(grid.shape))
    monitors = compute_monitors(spec, zero, omega0)
    assert monitors.sup_phi == 0.0
    assert monitors.osc_phi == 0.0
    assert monitors.trace_bound == pytest.approx(2.0)  # trace of the identity
    assert monitors.min_eigen == pytest.approx(1.0)
    assert monitors.calabi_S == pytest.approx(0.0, abs=1e-20)
    assert len(monitors.as_tuple()) == len(MonitorBundle.FIELDS)


def test_newton_iteration_converges():
    grid, omega0, spec, _ = _manufactured()
    phi = PotentialField(grid, np.zeros(grid.shape))
    norms = [float(np.abs(residual(spec, phi, omega0).values).max())]
    for _ in range(6):
        phi, _ = newton_step(spec, phi, omega0)
        norms.append(float(np.abs(residual(spec, phi, omega0).values).max()))
    # strict decrease until the rounding floor
    assert all(b < a for a, b in zip(norms, norms[1:]) if a > 1e-12)
    assert norms[-1] < 1e-12


@pytest.mark.parametrize("family,amp", [("cma", 0.05), ("j", 0.004)])
def test_small_manufactured_solve(family, amp):
    grid, omega0, spec, star = _manufactured(family, amp=amp)
    report = solve_continuity(spec, omega0, schedule=default_schedule(4))
    assert report.success
    assert report.family == family
    times = [state.t for state in report.states]
    assert times == sorted(times) and times[-1] == 1.0
    gap = report.phi.values - star.values
    assert np.abs(gap - gap.mean()).max() < 1e-8
    final = report.final_state
    assert final.residual_norm < 1e-9
    assert all(np.isfinite(final.monitors.as_tuple()))
    assert final.monitors.cone_margin > 0.0
    assert report.wall_seconds > 0.0


def test_monitor_caps_raise():
    _, omega0, spec, _ = _manufactured()
    tol = Tolerances(trace_cap=1e-6)
    with pytest.raises(MonitorBlowup):
        solve_continuity(spec, omega0, schedule=default_schedule(2), tolerances=tol)


def test_gma_zero_coefficients_reduce_to_cma():
    # same manufactured solution solved through both families
    grid = make_grid(2, 12)
    omega0 = HermitianFormField.identity(grid)
    star = field_from_modes(grid, [("cos", (1, 0, 0, 0), 0.03)])
    chi = HermitianFormField.identity(grid)
    cma_report = solve_continuity(
        manufacture("cma", omega0, chi, star), omega0, schedule=default_schedule(3)
    )
    gma_report = solve_continuity(
        manufacture("gma", omega0, chi, star, coeffs=(0.0,)),
        omega0,
        schedule=default_schedule(3),
    )
    assert cma_report.success and gma_report.success
    gap = cma_report.phi.values - gma_report.phi.values
    assert np.abs(gap - gap.mean()).max() < 1e-8
