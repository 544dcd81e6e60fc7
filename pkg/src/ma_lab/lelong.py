"""Lelong-number estimation from ball suprema of plurisubharmonic samples.

The pole strength of a psh function at a point is read off the ball maxima
hat(delta) = max over the ball of radius delta: hat is convex and
non-decreasing in log delta, so its difference quotients against a fixed
reference radius are non-decreasing in log delta and converge downward, as
delta -> 0, to the Lelong number.  On a grid the maxima are exhaustive over
samples, and every requested radius is snapped to the largest realized sample
distance inside it; for functions that are radially non-decreasing about the
base point the snapped ladder values are then exact, which is what the
monotonicity and gap assertions need.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import SolverError
from .psh import Mollifier, SampledFunction, TestForm, positivity


@dataclass(frozen=True)
class LelongProfile:
    """Ball-supremum ladder of a psh sample about one point.

    Radii are realized sample distances, decreasing.  quotients[i] is the
    difference quotient of hat_values against the reference radius; by
    convexity of hat in log delta it decreases toward the Lelong number as
    the radius shrinks.  half_hat_values hold the maxima at the realized
    half radii used by the gap and spherical-mean comparisons;
    smooth_gap_ratio logs (hat - smooth) / quotient per rung.
    """

    point: np.ndarray
    radii: np.ndarray
    hat_values: np.ndarray
    mean_values: np.ndarray
    smooth_values: np.ndarray
    quotients: np.ndarray
    half_radii: np.ndarray
    half_hat_values: np.ndarray
    reference_radius: float
    reference_hat: float
    poisson_constant: float
    smooth_gap_ratio: np.ndarray

    @property
    def resolution(self):
        """Ladder error bar on the smallest-radius quotient.

        A bounded psh sample has quotients decaying like 1 / log-radius, so
        the remaining tail below the ladder is estimated by harmonic
        extrapolation of the last two rungs, widened by the disagreement
        between successive extrapolants to cover the model's curvature.
        Exact cones have constant quotients and a zero bar.
        """
        if self.quotients.size < 2:
            return math.inf
        gaps = np.log(self.reference_radius) - np.log(self.radii)

        def extrapolate(i, j):
            num = self.quotients[j] * gaps[j] - self.quotients[i] * gaps[i]
            return num / (gaps[j] - gaps[i])

        limit = extrapolate(-2, -1)
        bar = float(max(self.quotients[-1] - limit, 0.0))
        if self.quotients.size >= 3:
            bar += abs(limit - extrapolate(-3, -2))
        return bar


def _point_distances(phi, point):
    delta = phi.coordinates() - point.reshape((phi.dim,) + (1,) * phi.dim)
    if phi.domain == "torus":
        delta = (delta + 0.5) % 1.0 - 0.5
    return np.sqrt((delta * delta).sum(axis=0))


def _nearby_test_forms(phi, point, radius):
    """Small test-form bank concentrated where the profile lives."""
    n = phi.n
    directions = [np.eye(n)[k] for k in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            for phase in (1.0, -1.0, 1j):
                d = np.zeros(n, dtype=complex)
                d[i] = 1.0
                d[j] = phase
                directions.append(d)
    centers = [point]
    for axis in range(phi.dim):
        for sign in (-1.0, 1.0):
            c = point.copy()
            c[axis] += sign * 0.5 * radius
            centers.append(c)
    forms = []
    for center in centers:
        if phi.domain == "ball":
            reach = phi.radius - 0.3 * radius - 2.0 * phi.spacing
            if np.sqrt(center @ center) > reach:
                continue
        for direction in directions:
            forms.append(TestForm(center, 0.3 * radius, direction))
    return forms


def lelong_profile(phi, point, radii=None, reference_radius=None,
                   psh_margin=-1e-6, forms=None):
    """Profile the ball suprema of phi about a point.

    Requested radii snap to realized sample distances (largest inside each
    request); the ladder must stay at least two grid spacings above zero.
    The input is pre-checked for plurisubharmonicity in the distribution
    sense near the point, and the profile's convexity consequences are
    asserted before it is returned: quotients non-decreasing in log delta,
    the log 2 gap bound, and the Poisson spherical-mean comparison with
    constant 3^(2n-1) / 2^(2n-2).
    """
    if not isinstance(phi, SampledFunction):
        raise TypeError("lelong_profile needs a SampledFunction")
    point = np.asarray(point, dtype=float)
    if point.shape != (phi.dim,):
        raise ValueError(f"point must have {phi.dim} coordinates")
    h = phi.spacing
    if reference_radius is None:
        reference_radius = 0.45 * phi.radius if phi.domain == "ball" else 0.25
    reference_radius = float(reference_radius)
    if radii is None:
        radii = []
        r = reference_radius / 2.0
        while r >= 2.0 * h and len(radii) < 6:
            radii.append(r)
            r /= 2.0
    radii = np.asarray(sorted(radii, reverse=True), dtype=float)
    if radii.size == 0:
        raise ValueError("empty radius ladder")
    if radii[0] >= reference_radius:
        raise ValueError("every ladder radius must sit below the reference")
    if radii[-1] < 2.0 * h:
        raise ValueError(
            f"smallest radius {radii[-1]:.4g} is under two grid spacings"
        )
    if phi.domain == "ball":
        margin = np.sqrt(point @ point) + reference_radius
        if margin > phi.radius:
            raise ValueError("reference ball leaves the sampled region")

    check_forms = forms if forms is not None else _nearby_test_forms(
        phi, point, reference_radius
    )
    psh = positivity(phi, "distribution", bank=check_forms)
    if psh < psh_margin:
        raise SolverError(
            f"input is not psh near the profiled point: distribution margin "
            f"{psh:.3e} under {psh_margin:.1e}"
        )

    dist = _point_distances(phi, point)
    values = phi.values
    finite = np.isfinite(values)
    sorted_dist = np.unique(dist[finite])

    def snap_down(r):
        k = np.searchsorted(sorted_dist, r * (1.0 + 1e-12), side="right")
        if k == 0:
            raise ValueError(f"no sample inside radius {r:.4g}")
        return float(sorted_dist[k - 1])

    def snap_up(r):
        k = np.searchsorted(sorted_dist, r * (1.0 - 1e-12), side="left")
        if k == sorted_dist.size:
            raise ValueError(f"no sample beyond radius {r:.4g}")
        return float(sorted_dist[k])

    def hat(realized):
        inside = finite & (dist <= realized * (1.0 + 1e-12))
        return float(values[inside].max())

    ref_realized = snap_down(reference_radius)
    ref_hat = hat(ref_realized)

    realized = np.array([snap_down(r) for r in radii])
    if np.any(np.diff(realized) >= 0):
        raise ValueError("radii collapse onto shared sample shells; spread "
                         "the ladder or refine the grid")
    # snapping the half radius upward keeps the realized log gap at most
    # log 2, so the convexity gap bound applies verbatim
    half = np.array([snap_up(r / 2.0) for r in realized])

    hats = np.array([hat(r) for r in realized])
    half_hats = np.array([hat(r) for r in half])

    means = np.empty_like(hats)
    smooths = np.empty_like(hats)
    for i, r in enumerate(realized):
        shell = finite & (dist <= r * (1.0 + 1e-12)) & (dist > r - 1.5 * h)
        means[i] = float(values[shell].mean())
        moll = Mollifier(r)
        support = finite & (dist < r)
        w = moll.density(dist[support], phi.dim)
        smooths[i] = float((w * values[support]).sum() / w.sum())

    quotients = (hats - ref_hat) / (np.log(realized) - np.log(ref_realized))

    drops = np.diff(quotients)
    if np.any(drops > 1e-6):
        raise SolverError(
            f"quotient monotonicity in log delta violated by "
            f"{float(drops.max()):.3e}"
        )
    gaps = np.abs(hats - half_hats)
    gap_bound = math.log(2.0) * quotients + 1e-6
    if np.any(gaps > gap_bound):
        worst = int(np.argmax(gaps - gap_bound))
        raise SolverError(
            f"gap bound violated at radius {realized[worst]:.4g}: "
            f"|hat drop| {gaps[worst]:.3e} over log2*nu "
            f"{gap_bound[worst] - 1e-6:.3e}"
        )
    poisson = 3.0 ** (2 * phi.n - 1) / 2.0 ** (2 * phi.n - 2)
    sphere_gap = hats - means
    if np.any(sphere_gap < -1e-6):
        raise SolverError("spherical mean exceeds the ball supremum")
    poisson_bound = poisson * (hats - half_hats) + 1e-6
    if np.any(sphere_gap > poisson_bound):
        worst = int(np.argmax(sphere_gap - poisson_bound))
        raise SolverError(
            f"Poisson comparison violated at radius {realized[worst]:.4g}: "
            f"hat - mean {sphere_gap[worst]:.3e} over bound "
            f"{poisson_bound[worst]:.3e}"
        )
    if np.any(hats - smooths < -1e-6):
        raise SolverError("mollified value exceeds the ball supremum")

    ratio = (hats - smooths) / np.maximum(np.abs(quotients), 1e-30)
    return LelongProfile(
        point=point,
        radii=realized,
        hat_values=hats,
        mean_values=means,
        smooth_values=smooths,
        quotients=quotients,
        half_radii=half,
        half_hat_values=half_hats,
        reference_radius=ref_realized,
        reference_hat=ref_hat,
        poisson_constant=poisson,
        smooth_gap_ratio=ratio,
    )


def lelong_number(profile):
    """Smallest-radius quotient: the ladder's Lelong-number estimate.

    The quotients decrease toward the limit, so the estimate brackets the
    true value from above with profile.resolution as the error bar.
    """
    if profile.radii.size < 3:
        raise ValueError("ladder too short: need at least three radii")
    return float(profile.quotients[-1])


def build_lelong_bank():
    """Deterministic profiled members with known pole strengths.

    Returns (name, sample, point, expected_nu, profile_kwargs) tuples;
    expected_nu is None where only the profile's qualitative behavior is
    pinned (the truncated cone).  All members are radially non-decreasing
    about their base point, so the snapped ball maxima are exact and the
    convexity assertions bind at floating-point accuracy.  Closed-form cones
    alpha*log|z - p| realize nu = alpha exactly; the truncated cone's
    quotient decays once the ladder passes the truncation radius; smooth
    members profile to zero.
    """
    members = []
    n_grid = 512

    def corner(p):
        h = 2.0 / n_grid
        return h * np.round(np.asarray(p, dtype=float) / h)

    for alpha in (0.5, 1.0, 2.0):
        pole = np.zeros(2)
        phi = SampledFunction.on_ball(
            1, 1.0, n_grid,
            lambda x, a=alpha: a * np.log(np.hypot(x[0], x[1])),
            singular_points=((tuple(pole), alpha),),
        )
        members.append((f"cone_{alpha:g}", phi, pole, alpha, {}))

    pole = corner((0.11, -0.27))
    phi = SampledFunction.on_ball(
        1, 1.0, n_grid,
        lambda x, p=tuple(pole): np.log(np.hypot(x[0] - p[0], x[1] - p[1])),
        singular_points=((tuple(pole), 1.0),),
    )
    members.append(("cone_offcenter", phi, pole, 1.0, {}))

    phi = SampledFunction.on_ball(
        1, 1.0, n_grid,
        lambda x: np.maximum(np.log(np.hypot(x[0], x[1])), -3.0),
        singular_points=(),
    )
    members.append(("truncated_cone", phi, np.zeros(2), None, {}))

    phi = SampledFunction.on_ball(1, 1.0, n_grid, lambda x: x[0] ** 2 + x[1] ** 2)
    members.append(("quadratic", phi, np.zeros(2), 0.0, {}))

    phi = SampledFunction.on_ball(
        1, 1.0, n_grid,
        lambda x: 0.5 * np.log(0.04 + x[0] ** 2 + x[1] ** 2),
    )
    members.append(("smooth_log", phi, np.zeros(2), 0.0, {}))

    # four real dimensions: the coarse grid leaves O(h^2) midpoint error in
    # the psh pre-check pairing, and default radius halvings would stop at
    # two rungs over the 2h floor
    phi = SampledFunction.on_ball(
        2, 1.0, 40,
        lambda x: 0.5 * np.log(x[0] ** 2 + x[1] ** 2 + x[2] ** 2 + x[3] ** 2),
        singular_points=((np.zeros(4), 1.0),),
    )
    members.append((
        "cone_dim2", phi, np.zeros(4), 1.0,
        {"radii": (0.3, 0.2, 0.12), "psh_margin": -1e-3},
    ))

    return members
