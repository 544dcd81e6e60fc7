"""Pure numpy implementation of the batched small-Hermitian eigenvalue kernels.

Same contract as the compiled backend in _kernels.pyx: inputs are
C-contiguous (P, n, n) complex arrays, outputs are (P, n) ascending
eigenvalues.  Kept dependency-light so it can always be imported.
"""

import numpy as np

BACKEND_NAME = "numpy"


def eigvalsh_batch(a):
    a = np.ascontiguousarray(a, dtype=np.complex128)
    if a.shape[-1] == 1:
        return a[..., 0, 0].real.copy().reshape(a.shape[0], 1)
    return np.linalg.eigvalsh(a)


def _worst_pivot_index(chi):
    mins = np.linalg.eigvalsh(chi)[:, 0]
    return int(np.argmin(mins)), float(mins.min())


def pencil_eigvalsh_batch(chi, omega):
    """Eigenvalues of det(omega - lam * chi) = 0 for positive definite chi."""
    chi = np.ascontiguousarray(chi, dtype=np.complex128)
    omega = np.ascontiguousarray(omega, dtype=np.complex128)
    n = chi.shape[-1]
    if n == 1:
        base = chi[..., 0, 0].real
        if np.any(base <= 0.0):
            idx = int(np.argmin(base))
            raise ValueError(
                f"pencil base form not positive definite at flat index {idx} "
                f"(pivot {base[idx]:.6e})"
            )
        return (omega[..., 0, 0].real / base).reshape(-1, 1)
    try:
        L = np.linalg.cholesky(chi)
    except np.linalg.LinAlgError:
        idx, worst = _worst_pivot_index(chi)
        raise ValueError(
            f"pencil base form not positive definite at flat index {idx} "
            f"(min eigenvalue {worst:.6e})"
        ) from None
    # B = L^{-1} omega L^{-H}, Hermitian with the pencil's spectrum
    X = np.linalg.solve(L, omega)
    B = np.conj(np.linalg.solve(L, np.conj(X).swapaxes(-1, -2)).swapaxes(-1, -2))
    B = 0.5 * (B + np.conj(B).swapaxes(-1, -2))
    return np.linalg.eigvalsh(B)
