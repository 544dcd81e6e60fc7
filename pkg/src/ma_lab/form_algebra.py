"""Pointwise linear algebra of Hermitian form pencils.

Everything here reduces wedge-product identities to the relative spectrum:
if lam solves det(omega - lam * chi) = 0 then

    chi^{n-k} wedge omega^k / chi^n = sigma_k(lam) / binomial(n, k),

so densities, cone margins and positivity thresholds are all elementary
symmetric functions of lam.  Inputs may be HermitianFormField instances or
bare (..., n, n) arrays; spectra are ascending along the last axis.
"""

from math import comb

import numpy as np

from .errors import ConfigError, PositivityError
from .kernels import eigvalsh_batch, pencil_eigvalsh_batch

__all__ = [
    "relative_eigenvalues",
    "elementary_symmetric",
    "wedge_density",
    "j_cone_margin",
    "gma_cone_margin",
    "gma_margin_components",
    "positivity_margin",
]


def _mats(x):
    return x.matrices if hasattr(x, "matrices") else np.asarray(x, dtype=np.complex128)


def _grid_of(*xs):
    for x in xs:
        if hasattr(x, "grid"):
            return x.grid
    return None


def _reraise_not_pd(err, what, grid, offending):
    msg = str(err)
    if "not positive definite" not in msg:
        raise
    flat = int(msg.split("flat index")[1].split()[0].strip(" ()"))
    multi = tuple(int(i) for i in np.unravel_index(flat, grid.shape)) if grid is not None else (flat,)
    eig = float(eigvalsh_batch(offending.reshape(-1, *offending.shape[-2:])[flat]).min())
    raise PositivityError(what, flat, multi, eig) from None


def relative_eigenvalues(chi, omega):
    """Spectrum of the pencil det(omega - lam * chi) = 0, ascending.

    chi must be positive definite pointwise.  For field inputs the result has
    shape grid + (n,); for a single matrix pair it is a length-n vector.
    Congruence invariant: transforming both arguments by A^H (.) A leaves the
    spectrum unchanged.
    """
    grid = _grid_of(chi, omega)
    cm, om = _mats(chi), _mats(omega)
    if cm.shape != om.shape:
        raise ConfigError(f"pencil shapes differ: {cm.shape} vs {om.shape}")
    try:
        return pencil_eigvalsh_batch(cm, om)
    except ValueError as err:
        _reraise_not_pd(err, "pencil base form", grid, cm)


def elementary_symmetric(lam, k):
    """sigma_k of the spectra along the last axis (n <= 3)."""
    lam = np.asarray(lam)
    n = lam.shape[-1]
    if not 0 <= k <= n:
        raise ConfigError(f"sigma_{k} undefined for spectra of length {n}")
    if k == 0:
        return np.ones(lam.shape[:-1])
    if k == 1:
        return lam.sum(axis=-1)
    if k == n:
        return lam.prod(axis=-1)
    # remaining case: k = 2, n = 3
    return (
        lam[..., 0] * lam[..., 1]
        + lam[..., 0] * lam[..., 2]
        + lam[..., 1] * lam[..., 2]
    )


def wedge_density(chi, omega, k):
    """Density of chi^{n-k} wedge omega^k against chi^n.

    Equals sigma_k(lam)/binomial(n, k) for the relative spectrum lam; the
    exterior-algebra route in ma_lab.oracles recomputes the same quantity
    from raw wedge coefficients and is kept as an independent check.
    """
    cm = _mats(chi)
    n = cm.shape[-1]
    if not (isinstance(k, (int, np.integer)) and 0 <= k <= n):
        raise ConfigError(f"wedge power k must be an integer in [0, {n}], got {k}")
    lam = relative_eigenvalues(chi, omega)
    return elementary_symmetric(lam, int(k)) / comb(n, int(k))


def j_cone_margin(chi, omega, c):
    """min over points and directions of c - sum_{i != k} 1/lam_i.

    Positive exactly when omega lies in the c-cone of chi: the largest
    excluded sum is attained by dropping the largest eigenvalue.
    """
    lam = relative_eigenvalues(chi, omega)
    if lam.min() <= 0.0:
        # 1/lam is meaningless once omega leaves the positive cone
        flat = int(np.argmin(lam.min(axis=-1)))
        grid = _grid_of(chi, omega)
        multi = np.unravel_index(flat, grid.shape) if grid is not None else (flat,)
        raise PositivityError("pencil spectrum", flat, multi, float(lam.min()))
    inv = 1.0 / lam
    worst = inv.sum(axis=-1) - inv.min(axis=-1)
    return float(c - worst.max())


def gma_margin_components(lam, coeffs):
    """d Phi / d lam_j for Phi = prod(lam) - sum_k c_k sigma_k / binom(n, k).

    Returns an array shaped like lam; the cone condition is min > 0.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    coeffs = [float(c) for c in coeffs]
    if len(coeffs) != n - 1:
        raise ConfigError(
            f"expected {n - 1} lower-order coefficients for n={n}, got {len(coeffs)}"
        )
    out = np.empty_like(lam)
    for j in range(n):
        others = [lam[..., i] for i in range(n) if i != j]
        grad = np.ones(lam.shape[:-1])
        for o in others:
            grad = grad * o
        # d sigma_k / d lam_j = sigma_{k-1} of the spectrum with lam_j removed
        for k in range(1, n):
            ck = coeffs[k - 1]
            if ck == 0.0:
                continue
            if k == 1:
                dsk = np.ones(lam.shape[:-1])
            elif k == 2:
                dsk = sum(others)
            else:
                raise ConfigError("coefficients beyond sigma_2 need n > 3")
            grad = grad - ck * dsk / comb(n, k)
        out[..., j] = grad
    return out


def gma_cone_margin(chi, omega, coeffs):
    """min over points and directions of the gradient of the top-order symbol."""
    lam = relative_eigenvalues(chi, omega)
    return float(gma_margin_components(lam, coeffs).min())


def positivity_margin(form):
    """Smallest plain eigenvalue over all points of a Hermitian form field."""
    return float(eigvalsh_batch(_mats(form)).min())
