"""End-to-end acceptance gates.

Each test checks one shipping criterion and prints a single PASS/FAIL line
with the measured numbers, bypassing capture so the verdicts appear in any
run log.  Tolerances are stated inline; nothing here is tunable.
"""

import numpy as np
import pytest

from ma_lab.abp import abp_verify, build_abp_family
from ma_lab.cli import main
from ma_lab.continuity import default_schedule, manufacture, solve_continuity
from ma_lab.equations import twist_lower_bound
from ma_lab.errors import GlueError
from ma_lab.gluing import demo_cover, glue_local_potentials
from ma_lab.props import (
    concavity_sweep,
    cone_sweep,
    lelong_sweep,
    psh_bank_sweep,
    wedge_sweep,
)
from ma_lab.psh import SampledFunction
from ma_lab.torus_grid import HermitianFormField, field_from_modes, form_plus_ddbar, make_grid


def _verdict(capsys, index, name, ok, detail):
    with capsys.disabled():
        print(f"\nacceptance {index:02d} {name}: {'PASS' if ok else 'FAIL'} [{detail}]")
    assert ok, f"acceptance {index:02d} {name}: {detail}"


def _grid16():
    grid = make_grid(2, 16)
    return grid, HermitianFormField.identity(grid)


def _two_cosines(grid, amp):
    return field_from_modes(
        grid, [("cos", (1, 0, 0, 0), amp), ("cos", (0, 0, 1, 0), amp)]
    )


def _sup_error(report, star):
    gap = report.phi.values - star.values
    return float(np.abs(gap - gap.mean()).max())


def test_01_cma_manufactured_solve(capsys):
    grid, omega0 = _grid16()
    star = _two_cosines(grid, 0.05)
    spec = manufacture("cma", omega0, HermitianFormField.identity(grid), star)
    report = solve_continuity(spec, omega0, schedule=default_schedule(10))
    err = _sup_error(report, star)
    ok = report.success and err <= 1e-6 and report.wall_seconds <= 60.0
    _verdict(
        capsys, 1, "cma manufactured solve (n=2, 16/axis, 10 steps)", ok,
        f"sup error {err:.3e} <= 1e-6, {report.wall_seconds:.1f} s <= 60 s",
    )


def test_02_j_manufactured_solve(capsys):
    grid, omega0 = _grid16()
    chi = form_plus_ddbar(
        omega0, field_from_modes(grid, [("cos", (1, 0, 0, 0), 0.01)])
    )
    star = _two_cosines(grid, 0.003)
    spec = manufacture("j", omega0, chi, star)
    floor = twist_lower_bound(spec.c, grid.n)
    report = solve_continuity(spec, omega0, schedule=default_schedule(10))
    margins = [state.monitors.cone_margin for state in report.states]
    err = _sup_error(report, star)
    ok = (
        report.success
        and float(spec.f.values.min()) > floor
        and min(margins) > 0.0
        and err <= 1e-6
    )
    _verdict(
        capsys, 2, "twisted j manufactured solve (twist above its floor)", ok,
        f"twist min {spec.f.values.min():.4f} > floor {floor:.4f}, "
        f"min cone margin {min(margins):.3e} > 0, sup error {err:.3e} <= 1e-6",
    )


def test_03_gma_solve_and_cma_crosscheck(capsys):
    grid, omega0 = _grid16()
    chi = HermitianFormField.identity(grid)
    star = _two_cosines(grid, 0.02)
    report = solve_continuity(
        manufacture("gma", omega0, chi, star, coeffs=(0.4,)),
        omega0, schedule=default_schedule(10),
    )
    margins = [state.monitors.cone_margin for state in report.states]
    err = _sup_error(report, star)

    # with every sigma_k coefficient zero the equation collapses to cma
    zeroed = solve_continuity(
        manufacture("gma", omega0, chi, star, coeffs=(0.0,)),
        omega0, schedule=default_schedule(5),
    )
    plain = solve_continuity(
        manufacture("cma", omega0, chi, star),
        omega0, schedule=default_schedule(5),
    )
    cross = zeroed.phi.values - plain.phi.values
    cross_gap = float(np.abs(cross - cross.mean()).max())

    ok = (
        report.success and zeroed.success and plain.success
        and report.states[0].t == 0.0
        and min(margins) > 0.0
        and err <= 1e-6
        and cross_gap <= 1e-8
    )
    _verdict(
        capsys, 3, "gma solve (c1 > 0) with zero-coefficient cma cross-check", ok,
        f"min gma cone margin {min(margins):.3e} > 0, sup error {err:.3e} <= 1e-6, "
        f"c_k=0 vs cma gap {cross_gap:.3e} <= 1e-8",
    )


def test_04_cone_preservation_sweep(capsys):
    result = cone_sweep()  # 10^4 tuples, n in {2, 3}
    ok = result.passed and "0 failures" in result.detail
    _verdict(capsys, 4, "cone-preservation sweep", ok, result.detail)


def test_05_concavity_and_ellipticity_sweep(capsys):
    rows = concavity_sweep()  # 10^3 spectra pairs per family
    ok = all(row.passed for row in rows)
    detail = "; ".join(f"{row.name}: {row.detail}" for row in rows)
    _verdict(capsys, 5, "operator concavity + gradient sweep", ok, detail)


def test_06_wedge_density_oracle(capsys):
    result = wedge_sweep()  # 200 pencils, n in {2, 3}
    ok = result.passed
    _verdict(capsys, 6, "wedge-density closed form vs oracle", ok, result.detail)


def test_07_positivity_senses_agree(capsys):
    result = psh_bank_sweep()  # full 50-member bank
    ok = result.passed
    _verdict(capsys, 7, "two positivity senses on the psh bank", ok, result.detail)


def test_08_lelong_ladder_suite(capsys):
    result = lelong_sweep()
    ok = result.passed
    _verdict(capsys, 8, "lelong ladders on the pole bank", ok, result.detail)


def test_09_gluing_covers(capsys):
    creases = []
    for n in (1, 2):
        centers, radius, locals_, eps, psi, ppa = demo_cover(n)
        glued = glue_local_potentials(
            centers, radius, locals_, eps, points_per_axis=ppa
        )
        h = 1.0 / ppa
        worst = 0.0
        for axis in range(2 * n):
            fd2 = (
                np.roll(glued.values, -1, axis) - 2.0 * glued.values
                + np.roll(glued.values, 1, axis)
            ) / h**2
            worst = max(worst, float(np.abs(fd2).max()))
        # every branch is psi - d^2 with |psi''| <= 0.04 (2 pi)^2 per axis
        branch_bound = 0.04 * (2.0 * np.pi) ** 2 + 2.0
        creases.append((n, worst, 10.0 * branch_bound))

    pair_named = False
    centers, radius, locals_, eps, _, ppa = demo_cover(1, violate=True)
    try:
        glue_local_potentials(centers, radius, locals_, eps, points_per_axis=ppa)
    except GlueError as err:
        pair_named = err.pair is not None and 0 in err.pair and "r^2/100" in str(err)

    ok = pair_named and all(worst <= cap for _, worst, cap in creases)
    detail = ", ".join(
        f"T{2 * n} crease |F''| {worst:.1f} <= {cap:.1f}" for n, worst, cap in creases
    ) + f", violation names pair: {pair_named}"
    _verdict(capsys, 9, "cover gluing on both demo tori", ok, detail)


def test_10_contact_set_measure(capsys):
    model = SampledFunction.on_ball(
        1, 1.0, 256, lambda x: (x**2).sum(axis=0) - 1.0
    )
    result = abp_verify(model, 1.0)
    target = np.pi / 4.0
    model_ok = abs(result.ratio - target) <= 0.02 * target

    ratios = [abp_verify(member, 1.0).ratio for _, member in build_abp_family(20, 256)]
    family_ok = min(ratios) > 0.1
    ok = model_ok and family_ok
    _verdict(
        capsys, 10, "contact-set integral on the model and its family", ok,
        f"model ratio {result.ratio:.6f} within 2% of pi/4 = {target:.6f}, "
        f"family of 20 bounded below by {min(ratios):.6f} > 0",
    )


def test_11_byte_identical_reruns(capsys, tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text(
        "command = solve-j\n"
        "grid.n = 2\n"
        "grid.points = 12\n"
        "path.steps = 4\n"
        "chi.modes = cos:1,0,0,0:0.01\n"
        "solution.modes = cos:1,0,0,0:0.003 ; cos:0,0,1,0:0.003\n"
    )
    digests = []
    for name in ("first", "second"):
        out = tmp_path / name
        code = main(["--config", str(config), "--out", str(out),
                     "--seed", "7", "--threads", "2"])
        assert code == 0
        digests.append(
            tuple((out / f).read_bytes() for f in ("trace.csv", "phi.csv"))
        )
    ok = digests[0] == digests[1]
    _verdict(
        capsys, 11, "identical seed and threads give byte-identical csv", ok,
        "trace.csv and phi.csv byte-equal across re-runs",
    )
