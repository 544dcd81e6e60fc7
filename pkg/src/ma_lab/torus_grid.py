"""Uniform grids on the flat torus C^n / Z^{2n} and spectral differentiation.

Complex coordinates are z_j = x_{2j} + i x_{2j+1} (zero-based real axes), each
real axis has period 1, and every field is stored as a plain numpy array over
the (N, ..., N) vertex grid.  Differentiation is spectral: fields are assumed
to extend periodically, inputs should be built from the trigonometric-mode
constructors below.  The Nyquist plane is zeroed in all derivative symbols,
which keeps odd symbols exactly odd and is invisible for band-limited data.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .errors import ConfigError

__all__ = [
    "TorusGrid",
    "PotentialField",
    "HermitianFormField",
    "make_grid",
    "ddbar",
    "integrate",
    "form_plus_ddbar",
    "field_from_modes",
    "field_from_function",
    "random_band_limited",
    "gradient",
    "third_derivatives",
    "set_fft_workers",
]

_FFT_WORKERS = 1


def set_fft_workers(count):
    """Set the worker count for all spectral transforms (results stay identical)."""
    global _FFT_WORKERS
    _FFT_WORKERS = max(1, int(count))


def fftn(values):
    return scipy.fft.fftn(values, workers=_FFT_WORKERS)


def ifftn(values):
    return scipy.fft.ifftn(values, workers=_FFT_WORKERS)


@dataclass
class TorusGrid:
    """Sample grid for C^n / Z^{2n} with points_per_axis vertices per real axis."""

    n: int
    points_per_axis: int

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise ConfigError(f"complex dimension n must be 1, 2 or 3, got {self.n}")
        N = self.points_per_axis
        if N < 8 or N % 2 != 0:
            raise ConfigError(
                f"points_per_axis must be even and >= 8, got {N}"
            )

    @property
    def shape(self):
        return (self.points_per_axis,) * (2 * self.n)

    @property
    def num_points(self):
        return self.points_per_axis ** (2 * self.n)

    @property
    def spacing(self):
        return 1.0 / self.points_per_axis

    def axis_coordinates(self):
        """1-D coordinate array shared by every real axis."""
        N = self.points_per_axis
        return np.arange(N) / N

    def coordinates(self):
        """List of 2n arrays, each reshaped for broadcasting along its axis."""
        N = self.points_per_axis
        x = self.axis_coordinates()
        out = []
        for a in range(2 * self.n):
            shape = [1] * (2 * self.n)
            shape[a] = N
            out.append(x.reshape(shape))
        return out

    def _freq(self, axis):
        """Integer frequencies along one axis, Nyquist zeroed, broadcast-shaped."""
        N = self.points_per_axis
        k = np.fft.fftfreq(N) * N
        k[N // 2] = 0.0
        shape = [1] * (2 * self.n)
        shape[axis] = N
        return k.reshape(shape)

    def dz_symbol(self, j):
        """Fourier symbol of d/dz_j acting on exp(2 pi i k.x)."""
        return np.pi * (self._freq(2 * j + 1) + 1j * self._freq(2 * j))

    def dx_symbol(self, axis):
        """Fourier symbol of d/dx_axis."""
        return 2j * np.pi * self._freq(axis)


def make_grid(n, points_per_axis):
    """Build a grid, rejecting odd or too-coarse axis counts."""
    return TorusGrid(n=n, points_per_axis=points_per_axis)


@dataclass
class PotentialField:
    """Real scalar field on a torus grid.

    normalization records how the additive gauge was fixed:
    "raw", "mean-zero" (plain torus measure) or "sup-minus-one".
    """

    grid: TorusGrid
    values: np.ndarray
    normalization: str = "raw"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise ConfigError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("field contains non-finite values")
        if self.normalization not in ("raw", "mean-zero", "sup-minus-one"):
            raise ConfigError(f"unknown normalization tag {self.normalization!r}")
        self.check_normalization()

    def check_normalization(self, tol=1e-10):
        if self.normalization == "mean-zero" and abs(self.values.mean()) > tol:
            raise ConfigError("normalization tag mean-zero but mean is nonzero")
        if self.normalization == "sup-minus-one" and abs(self.values.max() + 1.0) > tol:
            raise ConfigError("normalization tag sup-minus-one but sup != -1")

    def sup(self):
        return float(self.values.max())

    def osc(self):
        return float(self.values.max() - self.values.min())

    def mean_zero(self):
        return PotentialField(self.grid, self.values - self.values.mean(), "mean-zero")

    def sup_normalized(self):
        return PotentialField(
            self.grid, self.values - (self.values.max() + 1.0), "sup-minus-one"
        )

    def shifted(self, c):
        return PotentialField(self.grid, self.values + float(c), "raw")


@dataclass
class HermitianFormField:
    """Pointwise Hermitian n x n coefficient matrices of a real (1,1)-form."""

    grid: TorusGrid
    matrices: np.ndarray
    positive: bool = field(default=False, compare=False)

    def __post_init__(self):
        n = self.grid.n
        self.matrices = np.ascontiguousarray(self.matrices, dtype=np.complex128)
        if self.matrices.shape != self.grid.shape + (n, n):
            raise ConfigError(
                f"matrix field shape {self.matrices.shape} does not match "
                f"grid {self.grid.shape} with n={n}"
            )
        defect = self.hermitian_defect()
        if defect > 1e-12:
            raise ConfigError(f"matrices not Hermitian: relative defect {defect:.3e}")

    def hermitian_defect(self):
        """Max |M - M^H| relative to the field scale."""
        m = self.matrices
        scale = max(1.0, float(np.abs(m).max()))
        return float(np.abs(m - np.conj(m.swapaxes(-1, -2))).max()) / scale

    def flat(self):
        """View as (num_points, n, n)."""
        n = self.grid.n
        return self.matrices.reshape(-1, n, n)

    def __add__(self, other):
        if isinstance(other, HermitianFormField):
            return HermitianFormField(self.grid, self.matrices + other.matrices)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, HermitianFormField):
            return HermitianFormField(self.grid, self.matrices - other.matrices)
        return NotImplemented

    def __rmul__(self, s):
        return HermitianFormField(self.grid, float(s) * self.matrices)

    @staticmethod
    def identity(grid, scale=1.0):
        n = grid.n
        m = np.zeros(grid.shape + (n, n), dtype=np.complex128)
        idx = np.arange(n)
        m[..., idx, idx] = float(scale)
        return HermitianFormField(grid, m, positive=scale > 0)

    @staticmethod
    def constant(grid, matrix):
        matrix = np.asarray(matrix, dtype=np.complex128)
        m = np.broadcast_to(matrix, grid.shape + matrix.shape).copy()
        return HermitianFormField(grid, m)


def ddbar(phi):
    """Complex Hessian i-ddbar coefficient field of a potential.

    Returns the Hermitian matrix field H with H[i, j] = d^2 phi / dz_i dzbar_j.
    Diagonal entries integrate to zero exactly (their zero mode vanishes).
    """
    grid = phi.grid
    n = grid.n
    u = fftn(phi.values)
    H = np.empty(grid.shape + (n, n), dtype=np.complex128)
    for i in range(n):
        mi = grid.dz_symbol(i)
        for j in range(i, n):
            mult = -mi * np.conj(grid.dz_symbol(j))
            comp = ifftn(mult * u)
            if i == j:
                comp = comp.real.astype(np.complex128)
            H[..., i, j] = comp
            if i != j:
                H[..., j, i] = np.conj(comp)
    return HermitianFormField(grid, H)


def form_plus_ddbar(omega0, phi):
    """omega_0 + i ddbar(phi) as a Hermitian coefficient field."""
    return HermitianFormField(omega0.grid, omega0.matrices + ddbar(phi).matrices)


def integrate(grid, values):
    """Quadrature over the unit-volume torus (exact on trigonometric modes)."""
    values = np.asarray(values)
    return float(values.mean().real)


def gradient(phi):
    """Real partial derivatives along all 2n axes, shape (2n,) + grid.shape."""
    grid = phi.grid
    u = fftn(phi.values)
    out = np.empty((2 * grid.n,) + grid.shape)
    for a in range(2 * grid.n):
        out[a] = ifftn(grid.dx_symbol(a) * u).real
    return out


def third_derivatives(phi):
    """T[i, l, m] = d^3 phi / dz_i dzbar_l dz_m, shape grid + (n, n, n)."""
    grid = phi.grid
    n = grid.n
    u = fftn(phi.values)
    ms = [grid.dz_symbol(j) for j in range(n)]
    T = np.empty(grid.shape + (n, n, n), dtype=np.complex128)
    for i in range(n):
        for l in range(n):
            base = -ms[i] * np.conj(ms[l])
            for m in range(i, n):
                T[..., i, l, m] = ifftn(base * ms[m] * u)
                if m != i:
                    T[..., m, l, i] = T[..., i, l, m]
    return T


def _validate_mode(grid, kvec):
    kvec = tuple(int(k) for k in kvec)
    if len(kvec) != 2 * grid.n:
        raise ConfigError(
            f"frequency multi-index {kvec} must have length {2 * grid.n}"
        )
    half = grid.points_per_axis // 2
    if any(abs(k) >= half for k in kvec):
        raise ConfigError(
            f"frequency multi-index {kvec} exceeds the resolvable band "
            f"(|k| <= {half - 1} for {grid.points_per_axis} points per axis)"
        )
    return kvec


def field_from_modes(grid, modes, normalization="raw"):
    """Band-limited field from (kind, frequency multi-index, amplitude) triples.

    kind is "cos" or "sin"; the entry contributes amp * kind(2 pi k.x).
    """
    values = np.zeros(grid.shape)
    coords = grid.coordinates()
    for kind, kvec, amp in modes:
        kvec = _validate_mode(grid, kvec)
        phase = sum(k * x for k, x in zip(kvec, coords)) if any(kvec) else 0.0
        arg = 2.0 * np.pi * np.asarray(phase)
        if kind == "cos":
            values = values + float(amp) * np.cos(arg)
        elif kind == "sin":
            values = values + float(amp) * np.sin(arg)
        else:
            raise ConfigError(f"mode kind must be 'cos' or 'sin', got {kind!r}")
    return PotentialField(grid, np.broadcast_to(values, grid.shape).copy(), normalization)


def field_from_function(grid, fn, probes=16, tol=1e-9, rng=None):
    """Sample a callable on the grid after verifying its periodic extension.

    fn takes 2n coordinate arrays.  The callable is probed at random points x
    against x + e_a for every axis; a mismatch means the function does not
    descend to the torus (for example Re(z_1^2)) and is rejected.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    pts = rng.random((probes, 2 * grid.n))
    base = np.asarray(fn(*[pts[:, a] for a in range(2 * grid.n)]), dtype=float)
    scale = max(1.0, float(np.abs(base).max()))
    for a in range(2 * grid.n):
        shifted = pts.copy()
        shifted[:, a] += 1.0
        vals = np.asarray(fn(*[shifted[:, b] for b in range(2 * grid.n)]), dtype=float)
        defect = float(np.abs(vals - base).max())
        if defect > tol * scale:
            raise ConfigError(
                f"function is not 1-periodic along axis {a}: "
                f"wrap defect {defect:.3e}"
            )
    coords = grid.coordinates()
    values = np.asarray(fn(*coords), dtype=float)
    return PotentialField(grid, np.broadcast_to(values, grid.shape).copy())


def random_band_limited(grid, rng, max_abs_freq=2, amplitude=0.1, num_modes=4):
    """Random small band-limited potential for tests and sweeps."""
    max_abs_freq = min(max_abs_freq, grid.points_per_axis // 2 - 1)
    modes = []
    for _ in range(num_modes):
        kvec = rng.integers(-max_abs_freq, max_abs_freq + 1, size=2 * grid.n)
        if not np.any(kvec):
            kvec[rng.integers(0, 2 * grid.n)] = 1
        kind = "cos" if rng.random() < 0.5 else "sin"
        amp = amplitude * (2.0 * rng.random() - 1.0) / num_modes
        modes.append((kind, tuple(int(k) for k in kvec), amp))
    return field_from_modes(grid, modes)
