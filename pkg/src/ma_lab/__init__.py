"""ma_lab: continuity-method solvers for complex Monge-Ampere type equations
on flat tori, together with a plurisubharmonic-function toolkit (smoothing,
positivity testing, regularized maxima, gluing, Lelong numbers, and an
Alexandrov-Bakelman-Pucci demonstration).

Hot eigenvalue kernels run through a compiled Cython core when available and
fall back to numpy transparently; see ma_lab.kernels.BACKEND_NAME.
"""

__version__ = "0.1.0"

from .kernels import BACKEND_NAME, COMPILED_AVAILABLE  # noqa: F401
