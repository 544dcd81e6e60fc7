"""The three equation families as first-class objects.

An EquationSpec bundles the background form, twist and constants for one of

  cma:  log(det omega_phi / det omega_0) = f
  j:    c - sum_i 1/lam_i - f / prod(lam) = 0     (lam relative to chi)
  gma:  prod(lam) - sum_k c_k sigma_k(lam)/binom(n,k) - f = 0

with omega_phi = omega_0 + ddbar(phi).  Residuals are pointwise densities:
against omega_0^n for cma, against chi^n for j and gma.  The j family is
written so that its derivative in phi is a positive-definite second-order
coefficient field; the untransformed sum form is the negative of ours.

Every residual has a matching linearization_coeff returning the Hermitian
matrix field A with  d residual[u] = tr(A . hess(u))  pointwise, which is
what the Newton solver inverts.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, EllipticityError, PositivityError
from .form_algebra import (
    elementary_symmetric,
    gma_cone_margin,
    gma_margin_components,
    j_cone_margin,
    positivity_margin,
    relative_eigenvalues,
    wedge_density,
)
from .torus_grid import (
    HermitianFormField,
    PotentialField,
    ddbar,
    form_plus_ddbar,
    integrate,
)

__all__ = [
    "FAMILIES",
    "EquationSpec",
    "compute_constant_c",
    "compatibility_residual",
    "residual",
    "linearization_coeff",
    "twist_lower_bound",
    "cone_preservation_check",
    "ConeCheck",
    "phi_operator",
    "phi_concavity_probe",
]

FAMILIES = ("cma", "j", "gma")


def _canon_family(family):
    name = str(family).strip().lower()
    if name == "ma":
        name = "cma"
    if name not in FAMILIES:
        raise ConfigError(f"unknown equation family {family!r}; expected one of {FAMILIES}")
    return name


def _det(matrices):
    return np.linalg.det(matrices).real


@dataclass(frozen=True)
class EquationSpec:
    """Equation family with its background data.

    chi is the fixed background form (ignored by cma, which measures
    everything against the base form); f the twist; c the j constant;
    coeffs the n-1 lower-order gma coefficients; c0 the gma path
    normalization constant, carried as data because only the start of the
    deformation uses it.
    """

    family: str
    chi: HermitianFormField
    f: PotentialField
    c: float = 0.0
    coeffs: tuple = ()
    c0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "family", _canon_family(self.family))
        if self.chi.grid is not self.f.grid and self.chi.grid.shape != self.f.grid.shape:
            raise ConfigError("chi and f live on different grids")
        object.__setattr__(self, "coeffs", tuple(float(v) for v in self.coeffs))
        margin = positivity_margin(self.chi)
        if margin <= 0.0:
            raise ConfigError(f"background form must be positive definite (min eigenvalue {margin:.3e})")
        n = self.n
        if self.family == "j":
            if not self.c > 0.0:
                raise ConfigError(f"j constant must be positive, got {self.c}")
        if self.family == "gma":
            if len(self.coeffs) != n - 1:
                raise ConfigError(
                    f"gma needs {n - 1} lower-order coefficients for n={n}, got {len(self.coeffs)}"
                )
            if any(ck < 0.0 for ck in self.coeffs):
                raise ConfigError(f"gma coefficients must be non-negative, got {self.coeffs}")
            degenerate = (
                all(ck == 0.0 for ck in self.coeffs)
                and float(np.max(np.abs(self.f.values))) == 0.0
                and self.c0 <= 0.0
            )
            if degenerate:
                raise ConfigError("gma with zero coefficients and zero twist needs c0 > 0")

    @property
    def grid(self):
        return self.chi.grid

    @property
    def n(self):
        return self.chi.grid.n

    def with_twist(self, values, **changes):
        f = PotentialField(self.grid, np.asarray(values, dtype=np.float64))
        return replace(self, f=f, **changes)


def _base_form(spec, omega0):
    if omega0 is None:
        return HermitianFormField.identity(spec.grid)
    return omega0


def compute_constant_c(chi, omega0):
    """Cohomological j constant: n * integral(chi wedge omega0^{n-1}) / integral(omega0^n)."""
    grid = omega0.grid
    vol_density = _det(omega0.matrices)
    total = integrate(grid, vol_density)
    if total <= 0.0:
        raise ConfigError("base volume is not positive")
    # omega0^{n-1} wedge chi / omega0^n, then convert to the omega0^n measure
    mixed = wedge_density(omega0, chi, 1) * vol_density
    return grid.n * integrate(grid, mixed) / total


def _wedge_integral(chi, omega0, k):
    # integral of chi^{n-k} wedge omega0^k in the det convention
    return integrate(chi.grid, wedge_density(chi, omega0, k) * _det(chi.matrices))


def compatibility_residual(spec, omega0):
    """Signed defect of the family's solvability identity; zero means compatible.

    cma: integral(e^f omega0^n) - integral(omega0^n)
    j:   integral(f chi^n) - c integral(omega0^n) + n integral(chi wedge omega0^{n-1})
    gma: integral(f chi^n) - integral(omega0^n) + sum_k c_k integral(chi^{n-k} wedge omega0^k)

    For j and gma a negative twist integral where the identity demands a
    non-negative one shows up as a negative defect.
    """
    grid = spec.grid
    f = spec.f.values
    if spec.family == "cma":
        w = _det(omega0.matrices)
        return float(integrate(grid, np.exp(f) * w) - integrate(grid, w))
    chi_vol = _det(spec.chi.matrices)
    f_int = integrate(grid, f * chi_vol)
    vol = integrate(grid, _det(omega0.matrices))
    if spec.family == "j":
        return float(f_int - spec.c * vol + grid.n * _wedge_integral(spec.chi, omega0, grid.n - 1))
    total = vol
    for k, ck in enumerate(spec.coeffs, start=1):
        total -= ck * _wedge_integral(spec.chi, omega0, k)
    return float(f_int - total)


def _spectrum_or_raise(spec, phi, omega0, base):
    """(omega_phi, relative spectrum) with a worst-point error if positivity fails."""
    omega_phi = form_plus_ddbar(omega0, phi)
    lam = relative_eigenvalues(base, omega_phi)
    lam_min = lam.min(axis=-1)
    worst = float(lam_min.min())
    if worst <= 0.0:
        flat = int(np.argmin(lam_min))
        multi = tuple(int(i) for i in np.unravel_index(flat, spec.grid.shape))
        raise PositivityError("omega_phi", flat, multi, worst)
    return omega_phi, lam


def residual(spec, phi, omega0=None):
    """Pointwise residual density of the family equation at phi.

    Densities follow each equation's own volume: omega_0^n for cma, chi^n
    for j and gma.  Raises naming the worst grid point if omega_phi leaves
    the positive cone.
    """
    omega0 = _base_form(spec, omega0)
    f = spec.f.values
    if spec.family == "cma":
        _, lam = _spectrum_or_raise(spec, phi, omega0, omega0)
        values = np.log(lam).sum(axis=-1) - f
    elif spec.family == "j":
        _, lam = _spectrum_or_raise(spec, phi, omega0, spec.chi)
        prod = lam.prod(axis=-1)
        values = spec.c - (1.0 / lam).sum(axis=-1) - f / prod
    else:
        _, lam = _spectrum_or_raise(spec, phi, omega0, spec.chi)
        values = lam.prod(axis=-1) - f
        for k, ck in enumerate(spec.coeffs, start=1):
            if ck:
                values = values - ck * elementary_symmetric(lam, k) / math.comb(spec.n, k)
    return PotentialField(spec.grid, values)


def _inv(matrices):
    return np.linalg.inv(matrices)


def linearization_coeff(spec, phi, omega0=None):
    """Hermitian coefficient field A of the derivative: d residual[u] = tr(A hess(u)).

    Positive definiteness of A is exactly uniform ellipticity of the
    linearized operator; for j and gma it holds iff the family cone margin
    is positive, which is checked first and reported as lost ellipticity.
    """
    omega0 = _base_form(spec, omega0)
    omega_phi = form_plus_ddbar(omega0, phi)
    if spec.family == "cma":
        _, lam = _spectrum_or_raise(spec, phi, omega0, omega0)
        coeff = _inv(omega_phi.matrices)
    elif spec.family == "j":
        margin = j_cone_margin(spec.chi, omega_phi, spec.c)
        if margin <= 0.0:
            raise EllipticityError("j", margin)
        inv_omega = _inv(omega_phi.matrices)
        det_ratio = _det(spec.chi.matrices) / _det(omega_phi.matrices)
        coeff = inv_omega @ spec.chi.matrices @ inv_omega
        coeff = coeff + (spec.f.values * det_ratio)[..., None, None] * inv_omega
    else:
        margin = gma_cone_margin(spec.chi, omega_phi, spec.coeffs)
        if margin <= 0.0:
            raise EllipticityError("gma", margin)
        lam = relative_eigenvalues(spec.chi, omega_phi)
        inv_chi = _inv(spec.chi.matrices)
        prod = lam.prod(axis=-1)
        coeff = prod[..., None, None] * _inv(omega_phi.matrices)
        n = spec.n
        for k, ck in enumerate(spec.coeffs, start=1):
            if ck == 0.0:
                continue
            if k == 1:
                grad = inv_chi
            elif k == 2:
                a_rel = inv_chi @ omega_phi.matrices
                tr = np.trace(a_rel, axis1=-2, axis2=-1).real
                grad = tr[..., None, None] * inv_chi - inv_chi @ omega_phi.matrices @ inv_chi
            else:
                raise ConfigError("gma coefficients beyond sigma_2 need n > 3")
            coeff = coeff - (ck / math.comb(n, k)) * grad
    out = HermitianFormField(spec.grid, 0.5 * (coeff + np.conj(coeff).swapaxes(-1, -2)))
    floor = positivity_margin(out)
    if floor <= 0.0:
        raise EllipticityError(spec.family, floor)
    return out


def twist_lower_bound(c, n):
    """Sharp admissible floor for the j twist: -(1/(2n)) (1/c)^{n-1}."""
    if c <= 0.0:
        raise ConfigError(f"j constant must be positive, got {c}")
    return -(1.0 / (2.0 * n)) * (1.0 / c) ** (n - 1)


class ConeCheck:
    """Three-valued outcome; truthiness means strict preservation held."""

    __slots__ = ("status",)
    HOLDS, FAILS, INAPPLICABLE = "holds", "fails", "inapplicable"

    def __init__(self, status):
        self.status = status

    def __bool__(self):
        return self.status == self.HOLDS

    def __eq__(self, other):
        if isinstance(other, ConeCheck):
            return self.status == other.status
        return NotImplemented

    def __repr__(self):
        return f"ConeCheck({self.status})"


def cone_preservation_check(lam, f_val, c, equation_tol=1e-9):
    """Strict-cone slack check for points on the twisted j equation.

    For every direction k whose weak cone sum_{i != k} 1/lam_i <= c holds,
    verifies the strict inequality with the explicit slack

        c - sum_{i != k} 1/lam_i = (1/lam_k)(1 + f/prod_{i != k} lam_i)
                                 >= (1/2)(1/lam_k).

    Returns a ConeCheck: inapplicable when f_val is at or below the twist
    floor or the point is off the equation by more than equation_tol.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.size
    if lam.min() <= 0.0:
        raise ConfigError("cone check needs a positive spectrum")
    if f_val <= twist_lower_bound(c, n):
        return ConeCheck(ConeCheck.INAPPLICABLE)
    inv = 1.0 / lam
    prod = lam.prod()
    if abs(c - inv.sum() - f_val / prod) > equation_tol:
        return ConeCheck(ConeCheck.INAPPLICABLE)
    for k in range(n):
        partial = inv.sum() - inv[k]
        if partial > c:
            continue
        slack = c - partial
        identity = inv[k] * (1.0 + f_val / (prod / lam[k]))
        if slack <= 0.0 or slack < 0.5 * inv[k] - 1e-12 or abs(slack - identity) > 1e-7 * max(1.0, abs(slack)):
            return ConeCheck(ConeCheck.FAILS)
    return ConeCheck(ConeCheck.HOLDS)


def phi_operator(family, lam, f_val=0.0, coeffs=()):
    """Concave operator value on a positive spectrum.

    cma: log prod(lam); j: -sum 1/lam - f/prod(lam), concave for f >= 0;
    gma: log(prod(lam) - sum_k c_k sigma_k(lam) / binom(n, k)), defined on
    the cone where that argument is positive.
    """
    lam = np.asarray(lam, dtype=float)
    if lam.min() <= 0.0:
        raise ConfigError("operator needs a positive spectrum")
    name = _canon_family(family)
    if name == "cma":
        return float(np.log(lam).sum())
    if name == "j":
        return float(-(1.0 / lam).sum() - f_val / lam.prod())
    if name == "gma":
        n = lam.size
        value = lam.prod()
        for k, c_k in enumerate(coeffs, start=1):
            value -= c_k * elementary_symmetric(lam, k) / math.comb(n, k)
        if value <= 0.0:
            raise ConfigError("spectrum lies outside the gma cone")
        return float(np.log(value))
    raise ConfigError(f"unknown equation family {family!r}")


def _as_hermitian(arg):
    a = np.asarray(arg, dtype=np.complex128)
    if a.ndim == 1:
        return np.diag(a)
    return a


def phi_concavity_probe(family, lam_a, lam_b, t, f_val=0.0, coeffs=()):
    """Phi(t B + (1-t) A) - t Phi(B) - (1-t) Phi(A) on a Hermitian segment.

    Arguments may be Hermitian matrices or bare spectra (lifted to diagonal
    matrices); concavity of the operator makes the result >= 0 up to
    rounding.  The j twist must satisfy f_val >= 0 and gma endpoints must
    lie inside the cone, otherwise no sign is guaranteed.
    """
    if not 0.0 <= t <= 1.0:
        raise ConfigError(f"segment parameter must lie in [0, 1], got {t}")
    a = _as_hermitian(lam_a)
    b = _as_hermitian(lam_b)
    mid = t * b + (1.0 - t) * a
    vals = []
    for m in (mid, b, a):
        eig = np.linalg.eigvalsh(m)
        if eig.min() <= 0.0:
            raise ConfigError("concavity probe needs positive-definite endpoints")
        vals.append(phi_operator(family, eig, f_val=f_val, coeffs=coeffs))
    return float(vals[0] - t * vals[1] - (1.0 - t) * vals[2])
