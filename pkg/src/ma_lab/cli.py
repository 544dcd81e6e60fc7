"""Command-line entry point: config-driven runs with CSV artifacts.

Exit codes partition the outcomes: 0 success, 2 invalid configuration or
data, 3 numerical failure (the last good state is still written where one
exists).
"""

import argparse
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from .abp import abp_verify, build_abp_family
from .config import load_run_config
from .continuity import (
    Tolerances,
    default_schedule,
    manufacture,
    solve_continuity,
)
from .equations import (
    EquationSpec,
    compatibility_residual,
    compute_constant_c,
    cone_preservation_check,
    twist_lower_bound,
)
from .errors import ConfigError, SolverError
from .gluing import demo_cover, glue_local_potentials
from .lelong import build_lelong_bank, lelong_number, lelong_profile
from .props import run_all
from .psh import SampledFunction
from .reports import (
    write_csv,
    write_field,
    write_lelong_profile,
    write_summary,
    write_table,
    write_trace,
)
from .torus_grid import (
    HermitianFormField,
    PotentialField,
    field_from_modes,
    form_plus_ddbar,
    integrate,
    make_grid,
    set_fft_workers,
)

_INT_TOL_FIELDS = {"newton_cap", "gmres_restart", "gmres_maxiter"}


def _tolerances_from(cfg):
    kwargs = {}
    for key in cfg.values:
        if not key.startswith("tol."):
            continue
        name = key[4:]
        if name in _INT_TOL_FIELDS:
            kwargs[name] = cfg.get_int(key, minimum=1)
        else:
            kwargs[name] = cfg.get_float(key)
    return Tolerances(**kwargs)


def _chi_from(cfg, grid, omega0):
    if cfg.has("chi.modes"):
        potential = field_from_modes(grid, cfg.get_modes("chi.modes"))
        return form_plus_ddbar(omega0, potential)
    return HermitianFormField.identity(grid)


def _direct_spec(cfg, family, grid, omega0, chi, coeffs):
    """EquationSpec from an explicit twist, optionally recentred so the
    family's integral identity holds exactly."""
    f = field_from_modes(grid, cfg.get_modes("twist.modes"))
    normalize = cfg.get_bool("twist.normalize", default=True)
    det0 = np.linalg.det(omega0.matrices).real
    vol0 = integrate(grid, det0)
    if family == "cma":
        if normalize:
            shift = math.log(vol0 / integrate(grid, np.exp(f.values) * det0))
            f = PotentialField(grid, f.values + shift)
        return EquationSpec("cma", HermitianFormField.identity(grid), f)
    chi_vol = integrate(grid, np.linalg.det(chi.matrices).real)
    if family == "j":
        c = compute_constant_c(chi, omega0)
        spec = EquationSpec("j", chi, f, c=c)
        if normalize:
            shift = -compatibility_residual(spec, omega0) / chi_vol
            spec = spec.with_twist(f.values + shift)
        floor = twist_lower_bound(spec.c, grid.n)
        fmin = float(spec.f.values.min())
        if fmin <= floor:
            raise ConfigError(
                f"twist minimum {fmin:.6f} is at or below the admissible "
                f"floor -(1/2n)(1/c)^(n-1) = {floor:.6f} for c = {spec.c:.6f}"
            )
        return spec
    c0 = vol0 / chi_vol
    spec = EquationSpec("gma", chi, f, coeffs=coeffs, c0=c0)
    if normalize:
        shift = -compatibility_residual(spec, omega0) / chi_vol
        spec = spec.with_twist(f.values + shift)
    # no dimensional formula exists for how negative the twist may go, so
    # the solvability margin is a user-set floor
    floor = cfg.get_float("gma.twist_floor", default=0.25)
    fmin = float(spec.f.values.min())
    if fmin < -floor:
        raise ConfigError(
            f"twist minimum {fmin:.6f} is below -gma.twist_floor = "
            f"{-floor:.6f}; raise the floor only with a cone margin to spare"
        )
    return spec


def _cmd_solve(cfg, out_dir):
    family = cfg.command.split("-", 1)[1]
    grid = make_grid(cfg.get_int("grid.n", minimum=1), cfg.get_int("grid.points", minimum=8))
    omega0 = HermitianFormField.identity(grid)
    chi = _chi_from(cfg, grid, omega0)
    coeffs = ()
    if family == "gma":
        coeffs = cfg.get_floats("gma.coeffs", default=(0.0,) * (grid.n - 1))

    if cfg.has("solution.modes") == cfg.has("twist.modes"):
        raise ConfigError(
            f"{cfg.source}: give exactly one of solution.modes "
            "(manufactured run) or twist.modes (direct data)"
        )
    phi_star = None
    if cfg.has("solution.modes"):
        phi_star = field_from_modes(grid, cfg.get_modes("solution.modes"))
        spec = manufacture(family, omega0, chi, phi_star, coeffs=coeffs or None)
    else:
        spec = _direct_spec(cfg, family, grid, omega0, chi, coeffs)

    schedule = default_schedule(cfg.get_int("path.steps", default=10, minimum=1))
    report = solve_continuity(spec, omega0, schedule=schedule, tolerances=_tolerances_from(cfg))

    write_trace(out_dir / "trace.csv", report)
    write_field(out_dir / "phi.csv", report.phi.values)
    lines = [
        f"family = {family}",
        f"success = {report.success}",
        f"steps_accepted = {len(report.states)}",
    ]
    if report.states:
        lines.append(f"final_residual_sup = {report.states[-1].residual_norm:.6e}")
    if report.failure:
        lines.append(f"failure = {report.failure}")
    if phi_star is not None and report.states:
        gap = report.phi.values - phi_star.values
        sup_err = float(np.abs(gap - gap.mean()).max())
        lines.append(f"sup_error_vs_solution = {sup_err:.6e}")
    write_summary(out_dir / "summary.txt", cfg, lines, wall_seconds=report.wall_seconds)
    print("\n".join(lines))
    return 0 if report.success else 3


def _cmd_check_cone(cfg, out_dir):
    lam = np.asarray(cfg.get_floats("cone.lam"), dtype=float)
    f_val = cfg.get_float("cone.f")
    c = cfg.get_float("cone.c")
    check = cone_preservation_check(lam, f_val, c)
    inv = 1.0 / lam
    rows = []
    for k in range(lam.size):
        partial = float(inv.sum() - inv[k])
        rows.append((k, lam[k], partial, c - partial, 0.5 * inv[k]))
    write_csv(out_dir / "cone_check.csv",
              ("direction", "lam", "partial_sum", "slack", "slack_floor"), rows)
    lines = [
        f"status = {check.status}",
        f"twist_floor = {twist_lower_bound(c, lam.size):.6f}",
        f"equation_defect = {c - inv.sum() - f_val / lam.prod():.3e}",
    ]
    write_summary(out_dir / "summary.txt", cfg, lines)
    print("\n".join(lines))
    return 0


def _cmd_lelong(cfg, out_dir):
    selector = cfg.get_str("lelong.member", default="all")
    bank = build_lelong_bank()
    names = [name for name, *_ in bank]
    if selector != "all":
        bank = [entry for entry in bank if entry[0] == selector]
        if not bank:
            raise ConfigError(
                f"unknown lelong member {selector!r}; available: {', '.join(names)}"
            )
    lines = []
    for name, phi, point, expected, kwargs in bank:
        profile = lelong_profile(phi, point, **kwargs)
        nu = lelong_number(profile)
        write_lelong_profile(out_dir / f"lelong_{name}.csv", profile)
        expect = "free" if expected is None else f"{expected:g}"
        lines.append(
            f"{name}: nu = {nu:.6f} +- {profile.resolution:.3e} (expected {expect})"
        )
    write_summary(out_dir / "summary.txt", cfg, lines)
    print("\n".join(lines))
    return 0


def _cmd_glue_demo(cfg, out_dir):
    n = cfg.get_int("glue.n", default=1, minimum=1)
    if n > 2:
        raise ConfigError(f"glue demos exist for n = 1 and n = 2, got {n}")
    violate = cfg.get_bool("glue.violate", default=False)
    centers, radius, locals_, epsilon, _, points = demo_cover(n, violate=violate)
    started = time.perf_counter()
    glued = glue_local_potentials(centers, radius, locals_, epsilon, points_per_axis=points)
    wall = time.perf_counter() - started
    write_field(out_dir / "glued.csv", glued.values)
    lines = [
        f"branches = {len(centers)}",
        f"radius = {radius}",
        f"epsilon = {epsilon}",
        f"glued_min = {glued.values.min():.6f}",
        f"glued_max = {glued.values.max():.6f}",
    ]
    write_summary(out_dir / "summary.txt", cfg, lines, wall_seconds=wall)
    print("\n".join(lines))
    return 0


def _cmd_abp_demo(cfg, out_dir):
    points = cfg.get_int("abp.points", default=256, minimum=32)
    epsilon = cfg.get_float("abp.epsilon", default=1.0)
    count = cfg.get_int("abp.count", default=20, minimum=0)
    model = SampledFunction.on_ball(1, 1.0, points, lambda x: x[0] ** 2 + x[1] ** 2 - 1.0)
    rows = []
    result = abp_verify(model, epsilon)
    rows.append(("model_paraboloid", epsilon, result.contact_measure, result.integral, result.ratio))
    worst = result.ratio
    for name, member in build_abp_family(count, points_per_axis=points):
        res = abp_verify(member, epsilon)
        rows.append((name, epsilon, res.contact_measure, res.integral, res.ratio))
        worst = min(worst, res.ratio)
    write_table(
        out_dir / "abp.csv",
        ("member", "epsilon", "contact_measure", "integral", "ratio"),
        [(name,) + tuple(repr(float(v)) for v in rest) for name, *rest in rows],
    )
    lines = [
        f"model_ratio = {result.ratio:.6f} (continuum value pi/4 = {math.pi / 4:.6f})",
        f"members = {len(rows)}",
        f"min_ratio = {worst:.6f}",
    ]
    write_summary(out_dir / "summary.txt", cfg, lines)
    print("\n".join(lines))
    return 0


def _cmd_props(cfg, out_dir):
    seed = cfg.get_int("seed", default=20260814)
    rows = run_all(seed=seed)
    width = max(len(row.name) for row in rows)
    printed = []
    for row in rows:
        verdict = "PASS" if row.passed else "FAIL"
        printed.append(f"{row.name:<{width}}  {verdict}  {row.detail}")
    write_table(
        out_dir / "props.csv",
        ("sweep", "passed", "detail"),
        [(row.name, str(row.passed), row.detail) for row in rows],
    )
    write_summary(out_dir / "summary.txt", cfg, printed)
    print("\n".join(printed))
    return 0 if all(row.passed for row in rows) else 3


_DISPATCH = {
    "solve-cma": _cmd_solve,
    "solve-j": _cmd_solve,
    "solve-gma": _cmd_solve,
    "check-cone": _cmd_check_cone,
    "lelong": _cmd_lelong,
    "glue-demo": _cmd_glue_demo,
    "abp-demo": _cmd_abp_demo,
    "props": _cmd_props,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="ma-lab",
        description="Continuity-method solves and plurisubharmonic verification runs.",
    )
    parser.add_argument("--config", required=True, help="flat key = value run configuration")
    parser.add_argument("--out", help="output directory (overrides out.dir)")
    parser.add_argument("--seed", type=int, help="seed override for randomized sweeps")
    parser.add_argument("--threads", type=int, help="FFT worker count (or MA_LAB_THREADS)")
    args = parser.parse_args(argv)

    threads = args.threads
    if threads is None:
        env = os.environ.get("MA_LAB_THREADS", "").strip()
        if env:
            try:
                threads = int(env)
            except ValueError:
                print(f"error: MA_LAB_THREADS must be an integer, got {env!r}", file=sys.stderr)
                return 2
    if threads is not None:
        if threads < 1:
            print(f"error: thread count must be >= 1, got {threads}", file=sys.stderr)
            return 2
        set_fft_workers(threads)

    try:
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["out.dir"] = args.out
        cfg = load_run_config(args.config, overrides)
        out_dir = Path(cfg.get_str("out.dir", default="ma_lab_out"))
        out_dir.mkdir(parents=True, exist_ok=True)
        return _DISPATCH[cfg.command](cfg, out_dir)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
