"""Continuity-method driver with a damped Newton iteration per path step.

The linearized problem at each Newton step is the bordered system

    tr(A . hess(u)) + s = -residual,      integral(u omega_0^n) = 0,

solved by preconditioned GMRES; the scalar s absorbs the constant direction
that the elliptic operator annihilates and vanishes at convergence.  The
preconditioner inverts the constant-coefficient operator built from the
grid average of A in Fourier space, which keeps iteration counts flat while
omega_phi stays a desk-scale perturbation of the base form.

Fourier modes whose every axis frequency is 0 or Nyquist carry no spectral
derivative information; the solver works in the complement of those few
corner modes (the k = 0 direction is what the border handles).
"""

import math
import time
from dataclasses import dataclass, replace

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .equations import (
    EquationSpec,
    compatibility_residual,
    compute_constant_c,
    linearization_coeff,
    residual,
    twist_lower_bound,
)
from .errors import (
    ConfigError,
    EllipticityError,
    MonitorBlowup,
    NewtonFailure,
    PositivityError,
    SolverError,
)
from .form_algebra import (
    elementary_symmetric,
    gma_cone_margin,
    j_cone_margin,
    positivity_margin,
    relative_eigenvalues,
)
from .torus_grid import (
    HermitianFormField,
    PotentialField,
    fftn,
    form_plus_ddbar,
    gradient,
    ifftn,
    integrate,
    third_derivatives,
)

__all__ = [
    "Tolerances",
    "MonitorBundle",
    "ContinuityState",
    "SolveReport",
    "path_spec",
    "newton_step",
    "solve_continuity",
    "compute_monitors",
    "manufacture",
    "default_schedule",
]


@dataclass(frozen=True)
class Tolerances:
    """Knobs of the continuity loop; defaults suit desk-scale problems."""

    residual_sup: float = 1e-10
    newton_cap: int = 30
    linear_rtol: float = 1e-10
    stagnation_rtol: float = 1e-8
    min_alpha: float = 1e-4
    min_step: float = 1e-3
    trace_cap: float = 1e8
    depth_cap: float = 1e8
    gmres_restart: int = 60
    gmres_maxiter: int = 12


@dataclass(frozen=True)
class MonitorBundle:
    """Quantities tracked along the path; these are the a-priori-estimate targets."""

    sup_phi: float
    osc_phi: float
    trace_bound: float
    cone_margin: float
    min_eigen: float
    calabi_S: float
    szekelyhidi_G_max: float

    FIELDS = (
        "sup_phi",
        "osc_phi",
        "trace_bound",
        "cone_margin",
        "min_eigen",
        "calabi_S",
        "szekelyhidi_G_max",
    )

    def as_tuple(self):
        return tuple(getattr(self, name) for name in self.FIELDS)


@dataclass(frozen=True)
class ContinuityState:
    """Accepted state at one path time.

    residual_norm is the plain pointwise sup; newton_residuals is the history
    of the solvable (corner-projected) sup the iteration drives to tolerance.
    The gap between the two is the grid's truncation error at this t.
    """

    t: float
    phi: PotentialField
    residual_norm: float
    monitors: MonitorBundle
    step_count: int
    newton_residuals: tuple = ()


@dataclass(frozen=True)
class SolveReport:
    family: str
    states: tuple
    phi: PotentialField
    success: bool
    failure: str = ""
    wall_seconds: float = 0.0

    @property
    def final_state(self):
        return self.states[-1] if self.states else None


def default_schedule(steps=10):
    if steps < 1:
        raise ConfigError(f"schedule needs at least one step, got {steps}")
    return [i / steps for i in range(steps + 1)]


def _base_or_identity(spec, omega0):
    return HermitianFormField.identity(spec.grid) if omega0 is None else omega0


def _det(matrices):
    return np.linalg.det(matrices).real


# -- path construction ---------------------------------------------------------


def path_spec(base, omega0, t):
    """Interpolated equation data at path time t in [0, 1].

    cma: twist t f, renormalized additively so the exponential identity holds
    exactly at every t.  j: chi_t = t chi + (1-t)(c/n) omega_0, twist sliding
    from its chi_t-average to f, constant recomputed cohomologically so t = 0
    is solved by phi = 0.  gma: coefficients t c_k, twist t f + (1-t) c_0 with
    c_0 = integral(omega_0^n)/integral(chi^n), which zeroes the compatibility
    defect identically in t.
    """
    if not 0.0 <= t <= 1.0:
        raise ConfigError(f"path parameter must lie in [0, 1], got {t}")
    grid = base.grid
    t = float(t)
    if base.family == "cma":
        w0 = _det(omega0.matrices)
        scaled = t * base.f.values
        shift = math.log(integrate(grid, np.exp(scaled) * w0) / integrate(grid, w0))
        return replace(base, f=PotentialField(grid, scaled - shift))
    if base.family == "j":
        flat = (base.c / grid.n) * omega0.matrices
        chi_t = HermitianFormField(grid, t * base.chi.matrices + (1.0 - t) * flat)
        chi_vol = _det(base.chi.matrices)
        f_mean = integrate(grid, base.f.values * chi_vol) / integrate(grid, chi_vol)
        f_t = t * base.f.values + (1.0 - t) * f_mean
        chi_t_vol = _det(chi_t.matrices)
        vol0 = integrate(grid, _det(omega0.matrices))
        c_t = compute_constant_c(chi_t, omega0) + integrate(grid, f_t * chi_t_vol) / vol0
        return replace(base, chi=chi_t, f=PotentialField(grid, f_t), c=c_t)
    # gma
    c0 = integrate(grid, _det(omega0.matrices)) / integrate(grid, _det(base.chi.matrices))
    f_t = t * base.f.values + (1.0 - t) * c0
    coeffs_t = tuple(t * ck for ck in base.coeffs)
    return replace(base, f=PotentialField(grid, f_t), coeffs=coeffs_t, c0=c0)


# -- linear algebra of one Newton step ------------------------------------------


def _corner_mask(grid):
    """Modes with every axis frequency in {0, Nyquist}: no derivative content."""
    N = grid.points_per_axis
    marker = np.zeros(N, dtype=bool)
    marker[0] = True
    marker[N // 2] = True
    mask = np.ones(grid.shape, dtype=bool)
    for a in range(2 * grid.n):
        shape = [1] * (2 * grid.n)
        shape[a] = N
        mask &= marker.reshape(shape)
    mask[(0,) * (2 * grid.n)] = False
    return mask


def _filter_corners(values_hat, mask):
    values_hat[mask] = 0.0
    return values_hat


def _solvable_part(values, mask):
    """Projection onto the modes a potential update can actually reach.

    The complement (corner modes) is the grid's truncation error: a residual
    component there cannot be removed at this resolution and is reported,
    not iterated on.  For data manufactured on the same grid it vanishes at
    the endpoint.
    """
    return ifftn(_filter_corners(fftn(values), mask)).real


def _solvable_norm(spec, phi, omega0, mask):
    r = residual(spec, phi, omega0).values
    return float(np.abs(_solvable_part(r, mask)).max()), float(np.abs(r).max())


def newton_step(spec, phi, omega0=None, tolerances=None):
    """One damped Newton update; returns (phi_next, relative linear residual).

    Raises NewtonFailure on linear-solve stagnation or backtracking collapse,
    EllipticityError if the linearization loses its cone margin.
    """
    tol = tolerances or Tolerances()
    omega0 = _base_or_identity(spec, omega0)
    grid = spec.grid
    n = grid.n
    mask = _corner_mask(grid)
    r = _solvable_part(residual(spec, phi, omega0).values, mask)
    r_norm = float(np.abs(r).max())
    if r_norm <= 1e-14:
        return phi, 0.0

    coeff = linearization_coeff(spec, phi, omega0).matrices
    symbols = [grid.dz_symbol(j) for j in range(n)]
    w0 = _det(omega0.matrices)
    w0_mean = w0.mean()
    num = grid.num_points

    def apply_operator(x):
        u = x[:num].reshape(grid.shape)
        s = x[num]
        u_hat = _filter_corners(fftn(u), mask)
        out = np.zeros(grid.shape)
        for i in range(n):
            for j in range(i, n):
                hess_ji = ifftn(-(symbols[j] * np.conj(symbols[i])) * u_hat)
                term = (coeff[..., i, j] * hess_ji).real
                out += term if i == j else 2.0 * term
        out += s
        out = ifftn(_filter_corners(fftn(out), mask)).real
        constraint = float((u * w0).mean() / w0_mean)
        return np.concatenate([out.ravel(), [constraint]])

    mean_coeff = coeff.reshape(-1, n, n).mean(axis=0)
    symbol = np.zeros(grid.shape, dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            symbol = symbol - mean_coeff[i, j] * symbols[j] * np.conj(symbols[i])
    symbol = symbol.real.copy()
    symbol[mask] = 1.0
    origin = (0,) * (2 * n)
    symbol[origin] = 1.0

    def apply_preconditioner(y):
        g = y[:num].reshape(grid.shape)
        h = y[num]
        g_hat = fftn(g)
        s = g_hat[origin].real / num
        u_hat = g_hat / symbol
        u_hat[mask] = 0.0
        u_hat[origin] = h * num
        return np.concatenate([ifftn(u_hat).real.ravel(), [s]])

    rhs = np.concatenate([(-r).ravel(), [0.0]])
    operator = LinearOperator((num + 1, num + 1), matvec=apply_operator, dtype=np.float64)
    preconditioner = LinearOperator(
        (num + 1, num + 1), matvec=apply_preconditioner, dtype=np.float64
    )
    x, info = gmres(
        operator,
        rhs,
        rtol=tol.linear_rtol,
        atol=0.0,
        restart=tol.gmres_restart,
        maxiter=tol.gmres_maxiter,
        M=preconditioner,
    )
    linear_residual = float(
        np.linalg.norm(apply_operator(x) - rhs) / max(np.linalg.norm(rhs), 1e-300)
    )
    if info != 0 and linear_residual > tol.stagnation_rtol:
        raise NewtonFailure(
            f"linear solve stagnation: relative residual {linear_residual:.3e} "
            f"after {tol.gmres_maxiter} restarts of {tol.gmres_restart}"
        )
    u = x[:num].reshape(grid.shape)
    u = u - (u * w0).mean() / w0_mean

    alpha = 1.0
    while True:
        candidate = PotentialField(grid, phi.values + alpha * u)
        try:
            omega_cand = form_plus_ddbar(omega0, candidate)
            if _family_margin(spec, omega_cand, omega0) > 0.0:
                new_norm, _ = _solvable_norm(spec, candidate, omega0, mask)
                if new_norm < r_norm:
                    return candidate, linear_residual
        except (PositivityError, EllipticityError):
            pass
        alpha *= 0.5
        if alpha < tol.min_alpha:
            raise NewtonFailure(
                f"backtracking failure: no admissible step above alpha={tol.min_alpha:.1e} "
                f"(residual {r_norm:.3e})"
            )


def _family_margin(spec, omega_phi, omega0):
    """Positive iff the family's ellipticity cone contains omega_phi."""
    if spec.family == "cma":
        return float(relative_eigenvalues(omega0, omega_phi).min())
    lam_min = float(relative_eigenvalues(spec.chi, omega_phi).min())
    if lam_min <= 0.0:
        return lam_min
    if spec.family == "j":
        return j_cone_margin(spec.chi, omega_phi, spec.c)
    return min(lam_min, gma_cone_margin(spec.chi, omega_phi, spec.coeffs))


# -- monitors -------------------------------------------------------------------


def compute_monitors(spec, phi, omega0=None, szekelyhidi_A=1.0, szekelyhidi_tau=0.5):
    """Estimate targets at the current state; a pure report, phi is untouched.

    calabi_S is the sup of the metric contraction of third derivatives;
    szekelyhidi_G_max evaluates log(largest relative eigenvalue) plus the
    gradient barrier -(1/2)log(1 - |grad phi|^2/2K) with K = sup|grad phi|^2+1
    plus -2At + (A tau/2) t^2 applied to mean-normalized phi, so the value is
    gauge invariant.
    """
    omega0 = _base_or_identity(spec, omega0)
    grid = spec.grid
    n = grid.n
    omega_phi = form_plus_ddbar(omega0, phi)
    base = omega0 if spec.family == "cma" else spec.chi
    lam = relative_eigenvalues(base, omega_phi)

    inv0 = np.linalg.inv(omega0.matrices)
    trace = np.einsum("...ij,...ji->...", inv0, omega_phi.matrices).real

    if spec.family == "cma":
        cone = float(lam.min())
    elif spec.family == "j":
        cone = j_cone_margin(spec.chi, omega_phi, spec.c)
    else:
        cone = gma_cone_margin(spec.chi, omega_phi, spec.coeffs)

    inv_phi = np.linalg.inv(omega_phi.matrices).reshape(-1, n, n)
    third = third_derivatives(phi).reshape(-1, n, n, n)
    calabi = np.einsum(
        "pji,plk,pnm,pilm,pjkn->p",
        inv_phi,
        inv_phi,
        inv_phi,
        third,
        np.conj(third),
        optimize=True,
    ).real

    grad = gradient(phi)
    grad_sq = np.einsum("a...,a...->...", grad, grad)
    K = float(grad_sq.max()) + 1.0
    barrier = -0.5 * np.log1p(-grad_sq / (2.0 * K))
    centered = phi.values - phi.values.mean()
    psi = -2.0 * szekelyhidi_A * centered + 0.5 * szekelyhidi_A * szekelyhidi_tau * centered**2
    g_field = np.log(lam[..., -1]) + barrier + psi

    return MonitorBundle(
        sup_phi=phi.sup(),
        osc_phi=phi.osc(),
        trace_bound=float(trace.max()),
        cone_margin=float(cone),
        min_eigen=positivity_margin(omega_phi),
        calabi_S=float(calabi.max()),
        szekelyhidi_G_max=float(g_field.max()),
    )


def _check_monitor_caps(monitors, tol):
    if monitors.trace_bound > tol.trace_cap:
        raise MonitorBlowup("trace_bound", monitors.trace_bound, tol.trace_cap)
    if -monitors.sup_phi > tol.depth_cap:
        raise MonitorBlowup("sup_phi", monitors.sup_phi, tol.depth_cap)


# -- drivers --------------------------------------------------------------------


def _newton_solve(spec, phi, omega0, tol):
    """Newton-iterate to tolerance on the solvable residual part.

    Returns (phi, history, true_sup): history tracks the solvable sup-norm
    that the iteration drives; true_sup is the unprojected final residual,
    whose excess over the last history entry is pure truncation error.
    """
    mask = _corner_mask(spec.grid)
    solvable, true_sup = _solvable_norm(spec, phi, omega0, mask)
    history = [solvable]
    while history[-1] > tol.residual_sup:
        if len(history) > tol.newton_cap:
            raise NewtonFailure(
                f"no Newton convergence in {tol.newton_cap} steps "
                f"(residual {history[-1]:.3e})"
            )
        phi, _ = newton_step(spec, phi, omega0, tol)
        solvable, true_sup = _solvable_norm(spec, phi, omega0, mask)
        history.append(solvable)
    return phi, history, true_sup


def _gma_bootstrap(base, omega0, tol):
    """Solve the t=0 endpoint omega^n = c_0 chi^n as an auxiliary cma problem."""
    grid = base.grid
    w0 = _det(omega0.matrices)
    chi_vol = _det(base.chi.matrices)
    c0 = integrate(grid, w0) / integrate(grid, chi_vol)
    f_boot = np.log(c0 * chi_vol / w0)
    boot = EquationSpec("cma", HermitianFormField.identity(grid), PotentialField(grid, f_boot))
    report = solve_continuity(boot, omega0, default_schedule(4), tol)
    if not report.success:
        raise SolverError(f"gma start solve failed: {report.failure}")
    return report.phi


def solve_continuity(base, omega0=None, schedule=None, tolerances=None):
    """Walk the family's path to t=1, Newton-solving at each step.

    Bisection inserts midpoints on Newton failure down to the minimum step.
    Returns a SolveReport (success=False carries the last good state rather
    than raising); monitor-cap violations raise MonitorBlowup.
    """
    started = time.perf_counter()
    tol = tolerances or Tolerances()
    omega0 = _base_or_identity(base, omega0)
    grid = base.grid

    defect = compatibility_residual(base, omega0)
    if abs(defect) > 1e-8:
        raise ConfigError(
            f"equation data incompatible: integral identity defect {defect:.3e} "
            "(normalize the twist or constants first)"
        )
    if _family_margin(base, omega0, omega0) <= 0.0:
        raise ConfigError("base form violates the family cone condition at t=1 data")

    agenda = list(default_schedule() if schedule is None else (float(t) for t in schedule))
    if len(agenda) < 2 or agenda[0] != 0.0 or agenda[-1] != 1.0:
        raise ConfigError("schedule must run from 0.0 to 1.0")
    if any(b <= a for a, b in zip(agenda, agenda[1:])):
        raise ConfigError("schedule must increase strictly")

    if base.family == "gma":
        phi = _gma_bootstrap(base, omega0, tol)
    else:
        phi = PotentialField(grid, np.zeros(grid.shape))

    states = []
    idx = 0
    while idx < len(agenda):
        t = agenda[idx]
        spec_t = path_spec(base, omega0, t)
        try:
            phi_new, history, true_sup = _newton_solve(spec_t, phi, omega0, tol)
        except (NewtonFailure, EllipticityError, PositivityError) as err:
            if idx == 0:
                return SolveReport(
                    family=base.family,
                    states=tuple(states),
                    phi=phi,
                    success=False,
                    failure=f"path start unsolvable: {err}",
                    wall_seconds=time.perf_counter() - started,
                )
            gap = t - agenda[idx - 1]
            if gap <= tol.min_step:
                return SolveReport(
                    family=base.family,
                    states=tuple(states),
                    phi=phi,
                    success=False,
                    failure=f"newton failure at t={t:.6f} (step {gap:.2e}): {err}",
                    wall_seconds=time.perf_counter() - started,
                )
            agenda.insert(idx, 0.5 * (agenda[idx - 1] + t))
            continue
        phi = phi_new
        monitors = compute_monitors(spec_t, phi, omega0)
        _check_monitor_caps(monitors, tol)
        states.append(
            ContinuityState(
                t=t,
                phi=phi,
                residual_norm=true_sup,
                monitors=monitors,
                step_count=len(history) - 1,
                newton_residuals=tuple(history),
            )
        )
        idx += 1

    return SolveReport(
        family=base.family,
        states=tuple(states),
        phi=phi,
        success=True,
        wall_seconds=time.perf_counter() - started,
    )


def manufacture(family, omega0, chi, phi_star, coeffs=None):
    """Equation data whose exact solution is phi_star (twist = residual defect).

    For j the constant is the cohomological one, making the twist integral
    vanish; generation aborts if the produced twist dips to the admissible
    floor.  For gma the caller chooses the lower-order coefficients and c_0
    is the volume ratio.
    """
    grid = omega0.grid
    n = grid.n
    name = str(family).strip().lower()
    if name == "ma":
        name = "cma"
    omega_star = form_plus_ddbar(omega0, phi_star)
    floor = positivity_margin(omega_star)
    if floor <= 0.0:
        raise ConfigError(
            f"phi_star leaves the positive cone (min eigenvalue {floor:.3e})"
        )
    if name == "cma":
        lam = relative_eigenvalues(omega0, omega_star)
        f = np.log(lam).sum(axis=-1)
        return EquationSpec("cma", HermitianFormField.identity(grid), PotentialField(grid, f))
    if name == "j":
        c = compute_constant_c(chi, omega0)
        lam = relative_eigenvalues(chi, omega_star)
        margin = j_cone_margin(chi, omega_star, c)
        if margin <= 0.0:
            raise ConfigError(f"phi_star violates the j cone condition (margin {margin:.3e})")
        prod = lam.prod(axis=-1)
        f = (c - (1.0 / lam).sum(axis=-1)) * prod
        bound = twist_lower_bound(c, n)
        if float(f.min()) <= bound:
            raise ConfigError(
                f"manufactured twist reaches {f.min():.6f}, at or below the "
                f"admissible floor {bound:.6f}; use a smaller phi_star"
            )
        return EquationSpec("j", chi, PotentialField(grid, f), c=c)
    if name == "gma":
        coeffs = tuple(0.0 for _ in range(n - 1)) if coeffs is None else tuple(float(v) for v in coeffs)
        lam = relative_eigenvalues(chi, omega_star)
        margin = gma_cone_margin(chi, omega_star, coeffs)
        if margin <= 0.0:
            raise ConfigError(f"phi_star violates the gma cone condition (margin {margin:.3e})")
        f = lam.prod(axis=-1)
        for k, ck in enumerate(coeffs, start=1):
            if ck:
                f = f - ck * elementary_symmetric(lam, k) / math.comb(n, k)
        c0 = integrate(grid, _det(omega0.matrices)) / integrate(grid, _det(chi.matrices))
        return EquationSpec("gma", chi, PotentialField(grid, f), coeffs=coeffs, c0=c0)
    raise ConfigError(f"unknown equation family {family!r}")
