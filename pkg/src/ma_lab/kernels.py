"""Batched small-matrix eigenvalue kernels with backend selection.

At import time the compiled Cython extension is preferred; the numpy
implementation is the fallback.  Set MA_LAB_BACKEND=numpy or =compiled to
force one (forcing an unavailable backend raises).  Both backends are
deterministic and single threaded, so results do not depend on chunking.
"""

import os

import numpy as np

from . import _kernels_np

_compiled = None
try:
    from . import _kernels as _compiled  # noqa: F401
except ImportError:
    _compiled = None

_requested = os.environ.get("MA_LAB_BACKEND", "auto")
if _requested not in ("auto", "compiled", "numpy"):
    raise ImportError(f"MA_LAB_BACKEND must be auto, compiled or numpy, got {_requested!r}")
if _requested == "compiled" and _compiled is None:
    raise ImportError("MA_LAB_BACKEND=compiled but the extension is not built")

_active = _compiled if (_compiled is not None and _requested != "numpy") else None

BACKEND_NAME = "compiled" if _active is not None else "numpy"
COMPILED_AVAILABLE = _compiled is not None


def _as_batch(a):
    a = np.ascontiguousarray(a, dtype=np.complex128)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2] or a.shape[-1] not in (1, 2, 3):
        raise ValueError(f"expected (..., n, n) with n in 1..3, got shape {a.shape}")
    lead = a.shape[:-2]
    return a.reshape(-1, a.shape[-1], a.shape[-1]), lead


def eigvalsh_batch(a, backend=None):
    """Ascending eigenvalues of a stack of Hermitian matrices, shape (..., n)."""
    mod = _resolve(backend)
    batch, lead = _as_batch(a)
    if mod is _kernels_np or mod is None:
        out = _kernels_np.eigvalsh_batch(batch)
    else:
        out = np.empty((batch.shape[0], batch.shape[1]))
        bad = mod.eigvalsh_batch(batch, out)
        if bad >= 0:
            raise ValueError(f"eigenvalue iteration failed at flat index {bad}")
    return out.reshape(lead + (batch.shape[1],))


def pencil_eigvalsh_batch(chi, omega, backend=None):
    """Ascending solutions of det(omega - lam chi) = 0 pointwise.

    chi must be positive definite everywhere; the error message carries the
    flat index of the worst offending point.
    """
    mod = _resolve(backend)
    cb, lead = _as_batch(chi)
    ob, lead2 = _as_batch(omega)
    if cb.shape != ob.shape:
        raise ValueError("pencil operands must have identical shapes")
    if mod is _kernels_np or mod is None:
        out = _kernels_np.pencil_eigvalsh_batch(cb, ob)
    else:
        out = np.empty((cb.shape[0], cb.shape[1]))
        bad = mod.pencil_eigvalsh_batch(cb, ob, out)
        if bad != -1:
            if bad < -1:
                idx = -2 - bad
                raise ValueError(
                    f"pencil base form not positive definite at flat index {idx}"
                )
            idx = bad & ((1 << 40) - 1)
            raise ValueError(f"eigenvalue iteration failed at flat index {idx}")
    return out.reshape(lead + (cb.shape[1],))


def _resolve(backend):
    if backend is None:
        return _active or _kernels_np
    if backend == "numpy":
        return _kernels_np
    if backend == "compiled":
        if _compiled is None:
            raise ValueError("compiled backend not available")
        return _compiled
    raise ValueError(f"unknown backend {backend!r}")
