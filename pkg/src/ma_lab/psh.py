"""Plurisubharmonic function laboratory on flat tori and Euclidean balls.

Provides radial mollifiers with numerically computed normalization, sampled
scalar fields on two domain kinds, convolution smoothing, the two positivity
senses (distribution pairing against strongly positive test forms, and the
smallest complex-Hessian eigenvalue of every mollification), and regularized
maxima in both the pinned two-argument form and the permutation-invariant
variadic form used for gluing.

Ball grids are cell centered: the origin and the coordinate hyperplanes are
never sample points, so log-pole examples stay finite without fabricated
values at the singularity.
"""

import math

import numpy as np
import scipy.fft
import scipy.integrate
import scipy.signal
from scipy.interpolate import CubicSpline

from .kernels import eigvalsh_batch

_BANK_SEED = 20260814


def _leggauss(count):
    nodes, weights = np.polynomial.legendre.leggauss(count)
    return nodes, weights


_GL_SPLIT = _leggauss(48)
_GL_CDF = _leggauss(32)


def _bump_profile(s):
    s = np.asarray(s, dtype=float)
    g = 1.0 - s * s
    out = np.zeros_like(s)
    inside = g > 1e-12
    out[inside] = np.exp(-1.0 / g[inside])
    return out


def _bump_profile_d1(s):
    s = np.asarray(s, dtype=float)
    g = 1.0 - s * s
    out = np.zeros_like(s)
    inside = g > 1e-12
    gi = g[inside]
    out[inside] = np.exp(-1.0 / gi) * (-2.0 * s[inside] / gi**2)
    return out


def _bump_profile_d2(s):
    s = np.asarray(s, dtype=float)
    g = 1.0 - s * s
    out = np.zeros_like(s)
    inside = g > 1e-12
    gi = g[inside]
    si = s[inside]
    out[inside] = np.exp(-1.0 / gi) * (
        4.0 * si**2 / gi**4 - 2.0 / gi**2 - 8.0 * si**2 / gi**3
    )
    return out


class Mollifier:
    """Radial mollifier rho_eps(y) = eps^{-d} rho(|y|/eps) / Z_d.

    The profile rho >= 0 is supported inside the unit interval; the
    normalization Z_d makes the total integral over R^d equal to one and is
    always computed numerically, never hardcoded.  The default profile is the
    standard bump exp(-1/(1-s^2)).
    """

    def __init__(self, epsilon, profile=None):
        if not epsilon > 0:
            raise ValueError(f"mollifier radius must be positive, got {epsilon}")
        self.epsilon = float(epsilon)
        if profile is None:
            self._rho = _bump_profile
            self._rho_d1 = _bump_profile_d1
            self._rho_d2 = _bump_profile_d2
        else:
            if callable(profile):
                grid = np.linspace(0.0, 1.0, 2049)
                samples = np.asarray(profile(grid), dtype=float)
            else:
                samples = np.asarray(profile, dtype=float)
                if samples.ndim != 1 or samples.size < 4:
                    raise ValueError("profile samples must be a 1-d array of length >= 4")
                grid = np.linspace(0.0, 1.0, samples.size)
            if np.any(samples < -1e-12 * max(1.0, samples.max(initial=0.0))):
                raise ValueError("mollifier profile must be nonnegative")
            if abs(samples[-1]) > 1e-9 * max(1.0, abs(samples).max()):
                raise ValueError("mollifier profile support must lie inside the unit ball")
            spline = CubicSpline(grid, np.clip(samples, 0.0, None), bc_type="natural")

            def clamped(fn):
                def call(s):
                    s = np.asarray(s, dtype=float)
                    out = np.where(s < 1.0, fn(np.clip(s, 0.0, 1.0)), 0.0)
                    return np.asarray(out, dtype=float)

                return call

            self._rho = clamped(spline)
            self._rho_d1 = clamped(spline.derivative(1))
            self._rho_d2 = clamped(spline.derivative(2))
        self._norms = {}

    def profile(self, s):
        """Raw profile values rho(s), zero outside [0, 1)."""
        return self._rho(s)

    def normalization(self, dim):
        """Z_d = integral of rho(|y|) over R^d, computed by radial quadrature."""
        if dim not in self._norms:
            radial, err = scipy.integrate.quad(
                lambda s: float(self._rho(s)) * s ** (dim - 1), 0.0, 1.0,
                epsabs=1e-14, epsrel=1e-12, limit=200,
            )
            if radial <= 0:
                raise ValueError("mollifier profile integrates to zero")
            if err > 1e-8 * radial:
                raise ValueError("mollifier normalization quadrature failed to converge")
            surface = 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)
            self._norms[dim] = surface * radial
        return self._norms[dim]

    def density(self, r, dim):
        """rho_eps at radius r in dimension d: total integral one within 1e-8."""
        scale = self.normalization(dim) * self.epsilon**dim
        return self._rho(np.asarray(r, dtype=float) / self.epsilon) / scale

    def _offsets(self, spacing):
        reach = int(math.floor(self.epsilon / spacing + 1e-12))
        if reach < 1:
            raise ValueError(
                f"mollifier radius {self.epsilon} is below one grid spacing {spacing}"
            )
        return np.arange(-reach, reach + 1) * spacing

    def weights(self, spacing, dim):
        """Discrete convolution weights on the offset cube, renormalized to
        unit mass so smoothing is exact on constants."""
        axis = self._offsets(spacing)
        grids = np.meshgrid(*([axis] * dim), indexing="ij")
        radius = np.sqrt(sum(g * g for g in grids))
        w = self.density(radius, dim) * spacing**dim
        mass = w.sum()
        if not mass > 0:
            raise ValueError("mollifier kernel has zero discrete mass")
        return w / mass

    def hessian_weights(self, spacing, n):
        """Discrete weights of the complex-Hessian derivative kernels.

        Entry (i, j) convolved with samples of phi yields d^2(phi_eps) /
        dz_i dzbar_j; radial chain rule gives
        K_ij = zbar_i z_j (F'' - F'/r) / (4 r^2) + delta_ij F' / (2 r)
        for F(r) = rho_eps(r).  Each kernel is recentred to zero total mass so
        constants are annihilated exactly.
        """
        dim = 2 * n
        eps = self.epsilon
        scale = self.normalization(dim) * eps**dim
        axis = self._offsets(spacing)
        grids = np.meshgrid(*([axis] * dim), indexing="ij")
        radius = np.sqrt(sum(g * g for g in grids))
        s = radius / eps
        inside = s < 1.0
        d1 = self._rho_d1(s) / (scale * eps)
        d2 = self._rho_d2(s) / (scale * eps**2)
        safe_r = np.where(radius > 0, radius, 1.0)
        # second radial limit: F' / r -> F''(0) as r -> 0
        f1_over_r = np.where(radius > 0, d1 / safe_r, self._rho_d2(np.zeros(1))[0] / (scale * eps**2))
        quad_part = np.where(radius > 0, (d2 - f1_over_r) / (4.0 * safe_r**2), 0.0)
        diag_part = f1_over_r / 2.0
        z = np.stack([grids[2 * k] + 1j * grids[2 * k + 1] for k in range(n)])
        vol = spacing**dim
        kernels = np.empty((n, n) + radius.shape, dtype=complex)
        for i in range(n):
            for j in range(i, n):
                k_ij = np.conj(z[i]) * z[j] * quad_part
                if i == j:
                    k_ij = k_ij + diag_part
                k_ij = k_ij * vol
                k_ij[inside] -= k_ij[inside].sum() / inside.sum()
                kernels[i, j] = k_ij
                if i != j:
                    kernels[j, i] = np.conj(k_ij)
        return kernels


class SampledFunction:
    """Scalar samples on a uniform grid over a flat torus or a Euclidean ball.

    Ball grids are cell centered on [-R, R]^{2n}; the stored values cover the
    whole cube and `valid_mask` restricts claims to the ball, shrunk by the
    accumulated smoothing radius.  An optional closed form and a list of
    marked singular points let the distribution-sense pairing refine its
    quadrature near integrable log poles.
    """

    def __init__(self, domain, n, values, spacing, axes, radius=None,
                 closed_form=None, singular_points=(), valid_shrink=0.0):
        if domain not in ("torus", "ball"):
            raise ValueError(f"domain must be torus or ball, got {domain!r}")
        self.domain = domain
        self.n = int(n)
        self.values = np.asarray(values, dtype=float)
        self.spacing = float(spacing)
        self.axes = tuple(np.asarray(a, dtype=float) for a in axes)
        self.radius = None if radius is None else float(radius)
        self.closed_form = closed_form
        self.singular_points = tuple(
            (np.asarray(p, dtype=float), float(a)) for (p, a) in singular_points
        )
        self.valid_shrink = float(valid_shrink)
        if self.values.ndim != 2 * self.n:
            raise ValueError(
                f"values must have {2 * self.n} axes, got {self.values.ndim}"
            )
        bad = ~np.isfinite(self.values)
        if bad.any():
            if not (np.all(np.isneginf(self.values[bad])) and self.singular_points):
                raise ValueError(
                    "non-finite samples are allowed only as -inf at marked singular points"
                )
        self._coords = None

    @classmethod
    def on_torus(cls, n, points_per_axis, source, closed_form=None, singular_points=()):
        count = int(points_per_axis)
        if count < 4:
            raise ValueError("torus sampling needs at least 4 points per axis")
        axis = np.arange(count) / count
        return cls._build("torus", n, axis, 1.0 / count, source, None,
                          closed_form, singular_points)

    @classmethod
    def on_ball(cls, n, radius, points_per_axis, source, closed_form=None,
                singular_points=()):
        count = int(points_per_axis)
        if count < 4:
            raise ValueError("ball sampling needs at least 4 points per axis")
        if not radius > 0:
            raise ValueError("ball radius must be positive")
        spacing = 2.0 * radius / count
        axis = -radius + (np.arange(count) + 0.5) * spacing
        return cls._build("ball", n, axis, spacing, source, radius,
                          closed_form, singular_points)

    @classmethod
    def _build(cls, domain, n, axis, spacing, source, radius, closed_form,
               singular_points):
        dim = 2 * int(n)
        if callable(source):
            grids = np.meshgrid(*([axis] * dim), indexing="ij")
            values = np.asarray(source(np.stack(grids)), dtype=float)
            if closed_form is None:
                closed_form = source
        else:
            values = np.asarray(source, dtype=float)
        return cls(domain, n, values, spacing, (axis,) * dim, radius=radius,
                   closed_form=closed_form, singular_points=singular_points)

    @property
    def dim(self):
        return 2 * self.n

    def coordinates(self):
        """Stacked real coordinates, shape (2n,) + grid shape."""
        if self._coords is None:
            grids = np.meshgrid(*self.axes, indexing="ij")
            self._coords = np.stack(grids)
        return self._coords

    def complex_coordinates(self):
        """z_j = x_{2j} + i x_{2j+1}, shape (n,) + grid shape."""
        x = self.coordinates()
        return np.stack([x[2 * k] + 1j * x[2 * k + 1] for k in range(self.n)])

    def displacement(self, point):
        """Displacement field x - point, wrapped to the fundamental cell on tori."""
        delta = self.coordinates() - np.asarray(point, dtype=float).reshape(
            (self.dim,) + (1,) * self.dim
        )
        if self.domain == "torus":
            delta = (delta + 0.5) % 1.0 - 0.5
        return delta

    def valid_mask(self, extra_shrink=0.0):
        """Boolean mask of the region on which the samples carry meaning."""
        if self.domain == "torus":
            return np.ones(self.values.shape, dtype=bool)
        reach = self.radius - self.valid_shrink - extra_shrink
        if reach <= 0:
            raise ValueError(
                f"smoothing radius exhausted the ball: remaining reach {reach:.3e}"
            )
        dist = np.sqrt((self.coordinates() ** 2).sum(axis=0))
        return dist <= reach

    def with_values(self, values, extra_shrink=0.0):
        return SampledFunction(
            self.domain, self.n, values, self.spacing, self.axes,
            radius=self.radius, closed_form=None, singular_points=(),
            valid_shrink=self.valid_shrink + extra_shrink,
        )

    def _require_same_domain(self, other):
        if (self.domain != other.domain or self.n != other.n
                or self.values.shape != other.values.shape
                or abs(self.spacing - other.spacing) > 1e-15
                or (self.radius or 0.0) != (other.radius or 0.0)):
            raise ValueError("sampled functions live on different domains")


def _embed_periodic(kernel, shape):
    reach = (kernel.shape[0] - 1) // 2
    if kernel.shape[0] > min(shape):
        raise ValueError("mollifier kernel does not fit on the torus grid")
    out = np.zeros(shape, dtype=kernel.dtype)
    out[tuple(slice(0, k) for k in kernel.shape)] = kernel
    for axis in range(len(shape)):
        out = np.roll(out, -reach, axis=axis)
    return out


def _convolve(phi, kernel):
    if phi.domain == "torus":
        emb = _embed_periodic(kernel, phi.values.shape)
        spec = scipy.fft.fftn(phi.values) * scipy.fft.fftn(emb)
        out = scipy.fft.ifftn(spec)
        return out.real if np.isrealobj(kernel) else out
    if np.isrealobj(kernel):
        return scipy.signal.fftconvolve(phi.values, kernel, mode="same")
    real = scipy.signal.fftconvolve(phi.values, kernel.real, mode="same")
    imag = scipy.signal.fftconvolve(phi.values, kernel.imag, mode="same")
    return real + 1j * imag


def smooth(phi, mollifier):
    """Convolve the samples with rho_eps; exact on constants by construction.

    On a ball the valid region shrinks by eps; the shrunk region must stay
    nonempty.  Values must be finite (poles are handled by sampling closed
    forms on cell-centered grids, never by -inf placeholders here).
    """
    if not np.all(np.isfinite(phi.values)):
        raise ValueError("cannot smooth a field with non-finite samples")
    if phi.domain == "ball":
        remaining = phi.radius - phi.valid_shrink - mollifier.epsilon
        if remaining <= 0:
            raise ValueError(
                f"mollifier radius {mollifier.epsilon} too large for the ball: "
                f"remaining validity {remaining:.3e}"
            )
    weights = mollifier.weights(phi.spacing, phi.dim)
    smoothed = _convolve(phi, weights)
    return phi.with_values(smoothed, extra_shrink=mollifier.epsilon)


def smoothed_complex_hessian(phi, mollifier):
    """Complex Hessian of the mollification, shape grid + (n, n).

    Computed by convolving the raw samples with analytic derivative kernels
    of rho_eps, so no finite differencing of the smoothed field is involved.
    """
    if not np.all(np.isfinite(phi.values)):
        raise ValueError("cannot smooth a field with non-finite samples")
    kernels = mollifier.hessian_weights(phi.spacing, phi.n)
    n = phi.n
    out = np.empty(phi.values.shape + (n, n), dtype=complex)
    for i in range(n):
        for j in range(i, n):
            conv = _convolve(phi, kernels[i, j])
            out[..., i, j] = conv
            if i != j:
                out[..., j, i] = np.conj(conv)
    diag = np.arange(n)
    out[..., diag, diag] = out[..., diag, diag].real
    return out


class TestForm:
    """Strongly positive (n-1, n-1) test form: a polynomial-edge bump
    coefficient b(x) = (1 - |x-c|^2/r^2)^6 times the rank-one direction
    a a^H.  Pairing a sampled phi against i ddbar of this form reduces to
    integrating phi times the analytic directional bump Hessian."""

    def __init__(self, center, radius, direction):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        direction = np.asarray(direction, dtype=complex)
        self.direction = direction / np.linalg.norm(direction)

    def directional_hessian(self, delta):
        """a^H Hess_C(b) a evaluated on displacement samples delta."""
        r2 = self.radius**2
        n = self.direction.size
        zeta = np.stack([delta[2 * k] + 1j * delta[2 * k + 1] for k in range(n)])
        dist2 = (delta * delta).sum(axis=0)
        u = np.clip(1.0 - dist2 / r2, 0.0, None)
        pair = np.tensordot(self.direction, zeta, axes=(0, 0))
        return 30.0 * u**4 * np.abs(pair) ** 2 / r2**2 - 6.0 * u**5 / r2


def default_test_forms(phi, rng=None):
    """Deterministic bank of strongly positive test forms for the domain."""
    rng = np.random.default_rng(_BANK_SEED) if rng is None else rng
    n = phi.n
    directions = [np.eye(n)[k] for k in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            for phase in (1.0, -1.0, 1j):
                d = np.zeros(n, dtype=complex)
                d[i] = 1.0
                d[j] = phase
                directions.append(d / math.sqrt(2.0))
    for _ in range(3):
        d = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        directions.append(d)
    if phi.domain == "torus":
        radius = 0.22
        steps = np.arange(3) / 3.0
        centers = [np.array(c) for c in np.stack(
            np.meshgrid(*([steps] * phi.dim), indexing="ij"), axis=-1
        ).reshape(-1, phi.dim)]
    else:
        radius = 0.3 * phi.radius
        reach = phi.radius - radius - 2 * phi.spacing
        step = 0.35 * phi.radius
        counts = int(math.floor(reach / step))
        axis = np.arange(-counts, counts + 1) * step
        lattice = np.stack(
            np.meshgrid(*([axis] * phi.dim), indexing="ij"), axis=-1
        ).reshape(-1, phi.dim)
        centers = [c for c in lattice if np.linalg.norm(c) <= reach]
    return [TestForm(c, radius, d) for c in centers for d in directions]


def _eval_closed_form(phi, points):
    values = np.asarray(phi.closed_form(points), dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        floor = values[~bad].min() if (~bad).any() else -1e9
        values = np.where(bad, floor, values)
    return values


def _subdivided_minus_plain(phi, form, centers, factor):
    """Subdivided midpoint of phi * g minus the plain one-point rule, summed
    over the cells with the given centers."""
    h = phi.spacing
    g_c = form.directional_hessian(_form_delta(phi, form, centers))
    vals_c = _eval_closed_form(phi, centers)
    offsets = ((np.arange(factor) + 0.5) / factor - 0.5) * h
    sub = np.stack(
        np.meshgrid(*([offsets] * phi.dim), indexing="ij"), axis=0
    ).reshape(phi.dim, -1)
    fine = (centers[:, :, None] + sub[:, None, :]).reshape(phi.dim, -1)
    phi_fine = _eval_closed_form(phi, fine).reshape(centers.shape[1], -1)
    g_fine = form.directional_hessian(_form_delta(phi, form, fine))
    g_fine = g_fine.reshape(centers.shape[1], -1)
    cell_vol = h**phi.dim
    return float(
        ((phi_fine * g_fine).mean(axis=1) - vals_c * g_c).sum() * cell_vol
    )


def _refined_pairing_correction(phi, form):
    """Replace the plain midpoint pairing over a test form's support with a
    subdivided midpoint rule on the closed form when a marked singular point
    lies inside that support.

    The composite midpoint error density (h^2 / 24) Lap(phi g) integrates to
    nearly zero over the support because g has compact support there, so a
    partial-region refinement would break that cancellation; the whole
    support is refined at a moderate factor, with a finer rule on the cells
    near the pole where the integrable log cusp concentrates the error.
    """
    near_factor, far_factor = (32, 4) if phi.dim == 2 else (4, 2)
    h = phi.spacing
    coords = phi.coordinates()
    correction = 0.0
    for point, _alpha in phi.singular_points:
        gap = point - form.center
        if phi.domain == "torus":
            gap = (gap + 0.5) % 1.0 - 0.5
        if np.sqrt(gap @ gap) > form.radius + 2.0 * h:
            continue
        delta = _form_delta(phi, form, coords)
        support = np.sqrt((delta * delta).sum(axis=0)) <= form.radius + h
        pole_delta = coords - point.reshape((phi.dim,) + (1,) * phi.dim)
        if phi.domain == "torus":
            pole_delta = (pole_delta + 0.5) % 1.0 - 0.5
        d_pole = np.sqrt((pole_delta * pole_delta).sum(axis=0))
        cusp = support & (d_pole <= 5.0 * h)
        smooth_part = support & ~cusp
        # the plain rule used the stored samples; swap in the closed form at
        # the same centers so the replacement is exact bookkeeping
        stored = np.where(np.isfinite(phi.values), phi.values, 0.0)
        for mask, factor in ((cusp, near_factor), (smooth_part, far_factor)):
            if not mask.any():
                continue
            centers = coords[:, mask]
            g_c = form.directional_hessian(_form_delta(phi, form, centers))
            correction -= (stored[mask] * g_c).sum() * h**phi.dim
            correction += (_eval_closed_form(phi, centers) * g_c).sum() * h**phi.dim
            correction += _subdivided_minus_plain(phi, form, centers, factor)
    return correction


def _form_delta(phi, form, points):
    delta = points - form.center.reshape(-1, *([1] * (points.ndim - 1)))
    if phi.domain == "torus":
        delta = (delta + 0.5) % 1.0 - 0.5
    return delta


def positivity(phi, sense, epsilons=(0.2, 0.15, 0.1), bank=None, rng=None):
    """Positivity margin of i ddbar phi in the requested sense.

    smoothing: minimum over the eps ladder and the (shrunk) valid region of
    the smallest eigenvalue of the complex Hessian of phi_eps.
    distribution: minimum over a bank of strongly positive test forms xi of
    the pairing  integral of phi * i ddbar xi.  A nonnegative margin on the
    tested region is the psh verdict; both senses agree for psh inputs.
    """
    if sense == "smoothing":
        if not len(epsilons):
            raise ValueError("smoothing sense needs a nonempty epsilon ladder")
        margin = math.inf
        for eps in epsilons:
            moll = Mollifier(eps)
            hess = smoothed_complex_hessian(phi, moll)
            if phi.domain == "ball":
                mask = phi.valid_mask(extra_shrink=eps)
                # the discrete kernel must also fit inside the sampled cube,
                # or zero padding leaks curvature at the rim
                reach = math.floor(eps / phi.spacing + 1e-12) * phi.spacing
                fits = np.abs(phi.coordinates()).max(axis=0) <= (
                    phi.radius - 0.5 * phi.spacing - reach
                )
                mask &= fits
            else:
                mask = phi.valid_mask()
            if not mask.any():
                raise ValueError(f"valid region is empty at smoothing radius {eps}")
            eigs = eigvalsh_batch(hess[mask])
            margin = min(margin, float(eigs[..., 0].min()))
        return margin
    if sense != "distribution":
        raise ValueError(f"sense must be smoothing or distribution, got {sense!r}")
    forms = default_test_forms(phi, rng=rng) if bank is None else bank
    if not forms:
        raise ValueError("distribution sense needs a nonempty test-form bank")
    values = phi.values
    finite_values = values
    if not np.all(np.isfinite(values)):
        # -inf markers only affect the refined cells, which are recomputed
        # from the closed form; zero them out of the plain sum.
        finite_values = np.where(np.isfinite(values), values, 0.0)
    vol = phi.spacing**phi.dim
    coords = phi.coordinates()
    margin = math.inf
    refine = phi.closed_form is not None and len(phi.singular_points) > 0
    for form in forms:
        if phi.domain == "ball":
            # the bump support is a box-bounded ball: pair on the box only
            box = tuple(
                slice(
                    int(np.searchsorted(phi.axes[k], form.center[k] - form.radius - phi.spacing)),
                    int(np.searchsorted(phi.axes[k], form.center[k] + form.radius + phi.spacing)),
                )
                for k in range(phi.dim)
            )
            delta = coords[(slice(None),) + box] - form.center.reshape(
                (phi.dim,) + (1,) * phi.dim
            )
            g = form.directional_hessian(delta)
            pairing = float((finite_values[box] * g).sum() * vol)
        else:
            g = form.directional_hessian(phi.displacement(form.center))
            pairing = float((finite_values * g).sum() * vol)
        if refine:
            pairing += _refined_pairing_correction(phi, form)
        margin = min(margin, pairing)
    return margin


def build_psh_bank(count=50, points_per_axis=512, rng=None):
    """Deterministic bank of psh sampled functions on the unit ball, n = 1.

    Members are sums of |affine|^2, logs of norms of holomorphic monomial
    tuples (pure log cones alpha*log|c (z-p)| with marked poles, and smooth
    variants log(delta^2 + |c (z-p)^k|^2)^(1/2) whose tuple includes a
    constant monomial), and regularized maxima of pairs of those.  Pole
    centers are snapped to cell corners, the farthest points from the
    cell-centered samples, so every sample stays finite.
    """
    rng = np.random.default_rng(_BANK_SEED) if rng is None else rng
    n_grid = int(points_per_axis)
    spacing = 2.0 / n_grid

    def affine_sum():
        terms = rng.integers(1, 4)
        coeffs = []
        for _ in range(terms):
            a = rng.normal(scale=0.8) + 1j * rng.normal(scale=0.8)
            b = rng.normal(scale=0.4) + 1j * rng.normal(scale=0.4)
            coeffs.append((a, b))

        def fn(x, coeffs=tuple(coeffs)):
            z = x[0] + 1j * x[1]
            return sum(np.abs(a * z + b) ** 2 for a, b in coeffs)

        return fn, ()

    def log_cone():
        alpha = float(rng.choice([0.5, 1.0, 2.0]))
        scale = float(rng.uniform(0.5, 2.0))
        pole = rng.uniform(-0.35, 0.35, size=2)
        # cell-centered samples sit at (k + 1/2) h, so lattice points k h are
        # cell corners, equidistant from the four nearest samples; snapping
        # the pole there keeps the log cusp as far from every sample as the
        # grid allows
        pole = spacing * np.round(pole / spacing)

        def fn(x, alpha=alpha, scale=scale, pole=tuple(pole)):
            z = (x[0] - pole[0]) + 1j * (x[1] - pole[1])
            return alpha * np.log(scale * np.abs(z))

        return fn, ((tuple(pole), alpha),)

    def smooth_log():
        power = int(rng.integers(1, 3))
        delta = float(rng.uniform(0.15, 0.4))
        scale = float(rng.uniform(0.5, 1.5))
        pole = rng.uniform(-0.3, 0.3, size=2)

        def fn(x, power=power, delta=delta, scale=scale, pole=tuple(pole)):
            z = (x[0] - pole[0]) + 1j * (x[1] - pole[1])
            return 0.5 * np.log(delta**2 + np.abs(scale * z**power) ** 2)

        return fn, ()

    makers = [affine_sum, log_cone, smooth_log]
    bank = []
    while len(bank) < count:
        kind = len(bank) % 4
        if kind < 3:
            fn, singular = makers[kind]()
            name = ("affine_sum", "log_cone", "smooth_log")[kind]
            member = SampledFunction.on_ball(
                1, 1.0, n_grid, fn, singular_points=singular
            )
        else:
            fn_a, _ = makers[int(rng.integers(0, 3))]()
            fn_b, _ = makers[int(rng.integers(0, 3))]()
            width = float(rng.uniform(0.05, 0.2))
            base = SampledFunction.on_ball(1, 1.0, n_grid, fn_a)
            other = SampledFunction.on_ball(1, 1.0, n_grid, fn_b)
            offset = float(np.nanmedian(base.values - other.values))
            member = regularized_max(
                base, other.with_values(other.values + offset), width
            )
            name = "regularized_max"
        bank.append((f"{name}_{len(bank):02d}", member))
    return bank


def regularized_max(f, g, epsilon, profile=None):
    """Smooth maximum of two fields: integral of max(f - t, g) against a
    one-dimensional even profile supported on [-eps, eps].

    The defining integral reduces to max(f, g) plus the one-sided moment
    integral_{|f-g|}^{eps} (t - |f-g|) rho_eps(t) dt, which is integrated by
    Gauss-Legendre on the kink-split interval per point; the discrete profile
    mass is calibrated on the fixed full-interval rule, so the dominant-branch
    identities are exact: returns f where f > g + eps and g where f < g - eps
    (the moment integral is an empty interval there).
    """
    f_field = isinstance(f, SampledFunction)
    if f_field != isinstance(g, SampledFunction):
        raise ValueError("mix of sampled functions and arrays")
    if f_field:
        f._require_same_domain(g)
        fv, gv = f.values, g.values
    else:
        fv = np.asarray(f, dtype=float)
        gv = np.asarray(g, dtype=float)
        if fv.shape != gv.shape:
            raise ValueError(f"domain mismatch: shapes {fv.shape} vs {gv.shape}")
    eps = float(epsilon)
    if not eps > 0:
        raise ValueError("regularized max needs a positive width")
    moll = Mollifier(eps, profile=profile)
    nodes, weights = _GL_SPLIT
    # calibrate the discrete mass on the fixed full-interval rule
    mass = float((weights * eps * moll.density(np.abs(eps * nodes), 1)).sum())
    gap = np.abs(fv - gv)
    lower = np.minimum(gap, eps)
    half = 0.5 * (eps - lower)
    mid = 0.5 * (eps + lower)
    t = mid[None, ...] + half[None, ...] * nodes.reshape((-1,) + (1,) * fv.ndim)
    density = moll.density(np.abs(t), 1) / mass
    moment = (t - gap[None, ...]) * density
    correction = (weights.reshape((-1,) + (1,) * fv.ndim) * moment).sum(axis=0) * half
    out = np.maximum(fv, gv) + correction
    if f_field:
        merged = f.with_values(out)
        merged.valid_shrink = max(f.valid_shrink, g.valid_shrink)
        return merged
    return out


def regularized_max_kappa(epsilon, profile=None):
    """kappa_rho = regularized_max(f, f) - f: the equal-branch offset."""
    probe = regularized_max(np.zeros(1), np.zeros(1), epsilon, profile=profile)
    return float(probe[0])


class _SymmetricCDF:
    """CDF of the one-dimensional mollifier density on [-eps, eps], built as
    a spline antiderivative and symmetrized exactly so F(-x) = 1 - F(x)."""

    def __init__(self, mollifier, half_width):
        self.half = float(half_width)
        grid = np.linspace(0.0, self.half, 2049)
        density = mollifier.density(grid, 1)
        spline = CubicSpline(grid, density)
        anti = spline.antiderivative()
        self._anti = anti
        self._tail = float(anti(self.half))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        mag = np.clip(np.abs(x), 0.0, self.half)
        upper = 0.5 + 0.5 * np.asarray(self._anti(mag)) / self._tail
        return np.where(x >= 0, upper, 1.0 - upper)


def regularized_max_many(branches, epsilon, profile=None, out_template=None):
    """Permutation-invariant smooth maximum of many fields.

    Joint mollification E[max_j (f_j - T_j)] with iid components T_j of half
    width eps/2, evaluated through the exact one-dimensional CDF formula
    max - eps/2 + integral (1 - prod_j (1 - F(f_j - s))) ds.  Branches whose
    deficit below the running maximum exceeds eps contribute a factor of one
    exactly, so distant branches neither move the value nor break smoothness.
    `branches` must be a sequence; elements may be arrays or callables
    (evaluated twice, letting callers stream large covers without
    materializing every branch).
    """
    eps = float(epsilon)
    if not eps > 0:
        raise ValueError("regularized max needs a positive width")
    if len(branches) == 0:
        raise ValueError("need at least one branch")
    half = 0.5 * eps
    moll = Mollifier(half, profile=profile)
    cdf = _SymmetricCDF(moll, half)
    nodes, weights = _GL_CDF

    def branch_values(idx):
        b = branches[idx]
        arr = b() if callable(b) else b
        return np.asarray(arr, dtype=float)

    running = branch_values(0)
    shape = running.shape
    running = running.copy()
    for idx in range(1, len(branches)):
        np.maximum(running, branch_values(idx), out=running)
    flat_max = running.ravel()
    prod = np.ones((nodes.size, flat_max.size))
    scaled = half * nodes
    for idx in range(len(branches)):
        deficit = branch_values(idx).ravel() - flat_max
        active = deficit > -eps
        if not active.any():
            continue
        args = deficit[active][None, :] - scaled[:, None]
        prod[:, active] *= 1.0 - cdf(args)
    integral = half * (weights @ (1.0 - prod))
    result = (flat_max - half + integral).reshape(shape)
    if out_template is not None:
        return out_template.with_values(result)
    return result
