"""Independent slow-path checks for the fast linear-algebra routes.

Two families of oracle live here:

* a literal exterior algebra over the 2n basis covectors, which multiplies
  (1,1)-forms monomial by monomial with explicit sign bookkeeping, so wedge
  densities and directional derivatives can be compared against the
  eigenvalue formulas without sharing any code with them;
* periodic finite-difference derivatives, used to cross-check the spectral
  complex Hessians and third derivatives.

Everything is deliberately unvectorized per point; these run on a few
hundred matrices, not on full grids.
"""

import numpy as np
import scipy.linalg

__all__ = [
    "one_one_form",
    "wedge",
    "wedge_all",
    "top_coefficient",
    "wedge_density_oracle",
    "gma_direction_derivatives_oracle",
    "fd_derivative",
    "fd_complex_hessian",
    "fd_third_complex",
]


# -- exterior algebra ---------------------------------------------------------
#
# A form is a dict mapping a sorted tuple of covector indices to a complex
# coefficient.  Index j in [0, n) is dz_j, index n + j is conj(dz_j); the
# factors of i in i dz wedge conj(dz) are carried inside the coefficients, so
# ratios of top coefficients come out real for positive forms.


def _sort_sign(indices):
    indices = list(indices)
    sign = 1
    for i in range(1, len(indices)):
        j = i
        while j > 0 and indices[j - 1] > indices[j]:
            indices[j - 1], indices[j] = indices[j], indices[j - 1]
            sign = -sign
            j -= 1
    return tuple(indices), sign


def one_one_form(matrix):
    matrix = np.asarray(matrix, dtype=np.complex128)
    n = matrix.shape[0]
    form = {}
    for j in range(n):
        for k in range(n):
            if matrix[j, k] != 0:
                form[(j, n + k)] = 1j * matrix[j, k]
    return form


def wedge(f, g):
    out = {}
    for mono1, c1 in f.items():
        s1 = set(mono1)
        for mono2, c2 in g.items():
            if s1 & set(mono2):
                continue
            mono, sign = _sort_sign(mono1 + mono2)
            out[mono] = out.get(mono, 0.0) + sign * c1 * c2
    return {m: c for m, c in out.items() if c != 0}


def wedge_all(forms):
    acc = {(): 1.0 + 0.0j}
    for f in forms:
        acc = wedge(acc, f)
    return acc


def top_coefficient(forms, n):
    """Coefficient of the full 2n-covector monomial in the wedge of forms."""
    return wedge_all(forms).get(tuple(range(2 * n)), 0.0 + 0.0j)


def _real_ratio(num, den):
    ratio = num / den
    if abs(ratio.imag) > 1e-12 * max(1.0, abs(ratio.real)):
        raise AssertionError(f"wedge ratio should be real, got {ratio}")
    return ratio.real


def wedge_density_oracle(chi, omega, k):
    """chi^{n-k} wedge omega^k / chi^n by raw multilinear expansion."""
    chi = np.asarray(chi, dtype=np.complex128)
    n = chi.shape[0]
    fc, fo = one_one_form(chi), one_one_form(omega)
    num = top_coefficient([fc] * (n - k) + [fo] * k, n)
    den = top_coefficient([fc] * n, n)
    return _real_ratio(num, den)


def gma_direction_derivatives_oracle(chi, omega, coeffs):
    """Directional derivatives of the top-order symbol along eigendirections.

    Diagonalizes the pencil with scipy's generalized solver, then for each
    eigenvector v forms the rank-one direction i (v dz) wedge conj(v dz) and
    expands

        n omega^{n-1} - sum_k c_k k chi^{n-k} wedge omega^{k-1}

    against it, all by exterior algebra.  Returns (ascending eigenvalues,
    matching derivative per direction); agreement with
    form_algebra.gma_margin_components is the acceptance check.
    """
    chi = np.asarray(chi, dtype=np.complex128)
    omega = np.asarray(omega, dtype=np.complex128)
    n = chi.shape[0]
    coeffs = [float(c) for c in coeffs]
    lam, vecs = scipy.linalg.eigh(omega, chi)
    fc, fo = one_one_form(chi), one_one_form(omega)
    den = top_coefficient([fc] * n, n)
    derivs = np.empty(n)
    for j in range(n):
        # eigh normalizes v^H chi v = 1, so the rank-one bump that moves
        # lam_j alone (and leaves the rest fixed) is built from chi v
        u = chi @ vecs[:, j]
        beta = one_one_form(np.outer(u, u.conj()))
        total = n * top_coefficient([fo] * (n - 1) + [beta], n)
        for k in range(1, n):
            ck = coeffs[k - 1]
            if ck == 0.0:
                continue
            total = total - ck * k * top_coefficient(
                [fc] * (n - k) + [fo] * (k - 1) + [beta], n
            )
        derivs[j] = _real_ratio(total, den)
    return lam, derivs


# -- periodic finite differences ----------------------------------------------

_STENCILS = {
    2: ((1,), (0.5,)),
    4: ((1, 2), (2.0 / 3.0, -1.0 / 12.0)),
    6: ((1, 2, 3), (3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0)),
}


def fd_derivative(values, axis, spacing, order=4):
    """Central periodic first derivative along a real axis."""
    offsets, weights = _STENCILS[order]
    out = np.zeros_like(values, dtype=np.result_type(values, float))
    for off, w in zip(offsets, weights):
        out += w * (np.roll(values, -off, axis=axis) - np.roll(values, off, axis=axis))
    return out / spacing


def _dz(values, grid, j, order, conjugate):
    # d/dz_j = (d/dx_{2j} - i d/dx_{2j+1}) / 2, conjugate flips the sign of i
    re = fd_derivative(values, 2 * j, grid.spacing, order)
    im = fd_derivative(values, 2 * j + 1, grid.spacing, order)
    return 0.5 * (re + 1j * im) if conjugate else 0.5 * (re - 1j * im)


def fd_complex_hessian(grid, values, order=4):
    """Mixed complex Hessian d^2 / dz_j dzbar_k by composed differences."""
    n = grid.n
    out = np.empty(grid.shape + (n, n), dtype=np.complex128)
    for j in range(n):
        dj = _dz(values, grid, j, order, conjugate=False)
        for k in range(n):
            out[..., j, k] = _dz(dj, grid, k, order, conjugate=True)
    return out


def fd_third_complex(grid, values, i, l, m, order=4):
    """d^3 / dz_i dzbar_l dz_m by composed differences."""
    step1 = _dz(values, grid, m, order, conjugate=False)
    step2 = _dz(step1, grid, l, order, conjugate=True)
    return _dz(step2, grid, i, order, conjugate=False)
