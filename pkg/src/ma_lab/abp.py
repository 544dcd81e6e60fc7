"""Discrete Alexandrov-Bakelman-Pucci verification on the unit ball.

The contact set collects grid points where the gradient is small
(|Dv| < eps/2) and the tangent plane supports v from below over the whole
ball.  When v dips eps below its boundary values, every slope of norm under
eps/2 is attained by some supporting plane, so the gradient map sends the
contact set onto the eps/2 ball and the change of variables gives
integral over P of det D^2 v >= volume of that ball.  The verifier finds P
by brute force (each candidate's plane is tested against every ball sample
through the Legendre transform), integrates the PSD-clamped Hessian
determinant over it, and reports the ratio integral / eps^m.
"""

from collections import namedtuple

import numpy as np

from .psh import SampledFunction

AbpResult = namedtuple("AbpResult", "contact_measure integral ratio")


def abp_verify(v, epsilon, plane_tol=1e-11, chunk=512):
    """Contact-set measure, clamped Hessian-determinant integral, and the
    ratio integral / eps^m for a sampled function on the ball.

    Requires v(0) + eps <= inf of v over the boundary sphere; the boundary
    values are first-order extrapolations from the outermost sample shell
    and the comparison carries an 8 h^2 curvature allowance, so an exact
    equality case (the model paraboloid) still passes while order-one
    violations fail.
    """
    if not isinstance(v, SampledFunction) or v.domain != "ball":
        raise TypeError("abp_verify needs a ball-domain SampledFunction")
    epsilon = float(epsilon)
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    m = v.dim
    h = v.spacing
    R = v.radius
    vals = v.values
    if not np.all(np.isfinite(vals)):
        raise ValueError("contact verification needs finite samples")

    coords = v.coordinates()
    dist = np.sqrt((coords * coords).sum(axis=0))
    grads = np.gradient(vals, h, edge_order=2)
    if m == 1:
        grads = [grads]

    center = dist <= h * (1.0 + 1e-12)
    v0 = float(vals[center].mean())
    shell = (dist > R - 1.5 * h) & (dist <= R * (1.0 + 1e-12))
    scale = np.where(dist[shell] > 0, R / dist[shell], 1.0)
    extrap = vals[shell].copy()
    for k in range(m):
        extrap += grads[k][shell] * (coords[k][shell] * scale - coords[k][shell])
    boundary_inf = float(extrap.min())
    if v0 + epsilon > boundary_inf + 8.0 * h * h:
        raise ValueError(
            f"precondition failed: v(0) + eps = {v0 + epsilon:.6f} exceeds "
            f"the boundary infimum {boundary_inf:.6f}"
        )

    ball = dist <= R * (1.0 + 1e-12)
    grad_norm2 = sum(g * g for g in grads)
    candidates = ball & (grad_norm2 < (0.5 * epsilon) ** 2)
    flat_candidates = np.flatnonzero(candidates.ravel())
    contact_flat = []
    if flat_candidates.size:
        y_coords = coords.reshape(m, -1)[:, ball.ravel()]
        y_vals = vals.ravel()[ball.ravel()]
        g_flat = np.stack([g.ravel() for g in grads])
        x_flat = coords.reshape(m, -1)
        v_flat = vals.ravel()
        for start in range(0, flat_candidates.size, chunk):
            idx = flat_candidates[start:start + chunk]
            G = g_flat[:, idx]
            # support value of the candidate plane: v(x) - Dv(x) . x; the
            # plane lies below v on the ball iff min_y (v(y) - Dv(x) . y)
            # matches it
            support = v_flat[idx] - (G * x_flat[:, idx]).sum(axis=0)
            lowered = y_vals[None, :] - G.T @ y_coords
            defect = lowered.min(axis=1) - support
            contact_flat.append(idx[defect >= -plane_tol])
    contact_flat = (
        np.concatenate(contact_flat) if contact_flat else np.empty(0, int)
    )

    measure = contact_flat.size * h**m
    if contact_flat.size == 0:
        return AbpResult(0.0, 0.0, 0.0)

    hessian = np.empty((contact_flat.size, m, m))
    for i in range(m):
        rows = np.gradient(grads[i], h, edge_order=2)
        if m == 1:
            rows = [rows]
        for j in range(m):
            hessian[:, i, j] = rows[j].ravel()[contact_flat]
    hessian = 0.5 * (hessian + np.swapaxes(hessian, 1, 2))
    eigs = np.linalg.eigvalsh(hessian)
    dets = np.where(eigs[:, 0] < -1e-9, 0.0, np.clip(eigs, 0.0, None).prod(axis=1))
    integral = float(dets.sum() * h**m)
    return AbpResult(float(measure), integral, integral / epsilon**m)


def build_abp_family(count=20, points_per_axis=256):
    """Deterministic convex perturbations of the model paraboloid on B(1).

    Members are |x|^2 - 1 + a |x - c|^2 + b exp(k x . u): convex, still
    dipping a full eps = 1 below the boundary, and with gradient image of
    the contact set covering the eps/2 disc, so every member's ratio sits
    near the model's pi/4 and is uniformly bounded below.
    """
    rng = np.random.default_rng(20260814)
    members = []
    for k in range(count):
        a = float(rng.uniform(0.02, 0.08))
        c = rng.uniform(-0.25, 0.25, size=2)
        b = float(rng.uniform(0.002, 0.006))
        rate = float(rng.uniform(0.1, 0.3))
        u = rng.normal(size=2)
        u /= np.hypot(*u)

        def source(x, a=a, c=c, b=b, rate=rate, u=u):
            shifted2 = (x[0] - c[0]) ** 2 + (x[1] - c[1]) ** 2
            return (
                x[0] ** 2 + x[1] ** 2 - 1.0
                + a * shifted2
                + b * np.exp(rate * (u[0] * x[0] + u[1] * x[1]))
            )

        members.append(
            (f"convex_{k:02d}",
             SampledFunction.on_ball(1, 1.0, points_per_axis, source))
        )
    return members
