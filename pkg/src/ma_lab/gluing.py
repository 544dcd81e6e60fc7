"""Gluing local potentials on a torus through the regularized maximum.

Each local potential f_j living on the doubled ball B(x_j, 2r) turns into a
global branch f_j(z) - d(z, x_j)^2 (periodic distance, branch sentinel -inf
outside its ball), and the glued field is the variadic regularized maximum
of the branches.  Where one branch dominates by more than the smoothing
width the glued field equals that branch exactly, so its complex Hessian is
the branch's Hessian minus the identity; inside the blending bands the
regularized maximum keeps the Hessian above the worst branch up to the
smoothing tolerance, and the wrap-around corners of the periodic distance
never activate because every branch is cut off at 2r, far below the corner
distance.
"""

import numpy as np

from .errors import GlueError
from .psh import SampledFunction, regularized_max_many


def _branch_geometry(axes, center, radius):
    # separable periodic distance: one wrapped 1-d offset per axis,
    # broadcast-summed, instead of wrapping the full coordinate stack
    dim = len(axes)
    d2 = 0.0
    for k, axis in enumerate(axes):
        w = (axis - center[k] + 0.5) % 1.0 - 0.5
        shape = [1] * dim
        shape[k] = axis.size
        d2 = d2 + (w * w).reshape(shape)
    return d2, d2 <= (2.0 * radius) ** 2 * (1.0 + 1e-12)


def glue_local_potentials(centers, radius, locals_, epsilon,
                          points_per_axis=96):
    """Glue local potentials over a periodic cover into one torus field.

    centers: (k, 2n) ball centers on the unit torus; locals_: callables
    taking (2n, ...) coordinate stacks, defined on the doubled balls
    B(x_j, 2r); epsilon: regularized-max width, below r^2 so dominance
    regions survive.  The cover must reach every grid point within r, and
    active locals must agree within r^2 / 100 wherever their doubled balls
    overlap; violations raise GlueError naming the offending pair and the
    worst point.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    count, dim = centers.shape
    if dim % 2 != 0:
        raise ValueError("centers need an even number of real coordinates")
    n = dim // 2
    if len(locals_) != count:
        raise ValueError(f"{count} centers but {len(locals_)} local potentials")
    radius = float(radius)
    epsilon = float(epsilon)
    if not 0.0 < epsilon < radius**2:
        raise ValueError("smoothing width must sit inside (0, r^2)")

    template = SampledFunction.on_torus(
        n, points_per_axis, lambda x: np.zeros_like(x[0])
    )
    coords = template.coordinates()
    shape = coords.shape[1:]

    cover_d2 = np.full(shape, np.inf)
    f_high = np.full(shape, -np.inf)
    f_low = np.full(shape, np.inf)
    high_id = np.zeros(shape, dtype=np.int32)
    low_id = np.zeros(shape, dtype=np.int32)
    for j in range(count):
        d2, mask = _branch_geometry(template.axes, centers[j], radius)
        np.minimum(cover_d2, d2, out=cover_d2)
        if not mask.any():
            continue
        values = np.asarray(locals_[j](coords[:, mask]), dtype=float)
        take = np.zeros(shape, dtype=bool)
        take[mask] = values > f_high[mask]
        f_high[take] = values[take[mask]]
        high_id[take] = j
        take[mask] = values < f_low[mask]
        f_low[take] = values[take[mask]]
        low_id[take] = j

    worst = int(np.argmax(cover_d2))
    if cover_d2.ravel()[worst] > radius**2 * (1.0 + 1e-12):
        point = coords.reshape(dim, -1)[:, worst]
        raise GlueError(
            f"cover gap: point {np.round(point, 4)} lies "
            f"{np.sqrt(cover_d2.ravel()[worst]):.4f} from the nearest center, "
            f"beyond the ball radius {radius}",
            worst_point=tuple(point),
        )

    spread = f_high - f_low
    spread[~np.isfinite(spread)] = 0.0
    worst = int(np.argmax(spread))
    if spread.ravel()[worst] >= radius**2 / 100.0:
        point = coords.reshape(dim, -1)[:, worst]
        pair = (int(high_id.ravel()[worst]), int(low_id.ravel()[worst]))
        raise GlueError(
            f"local potentials {pair[0]} and {pair[1]} differ by "
            f"{spread.ravel()[worst]:.3e} >= r^2/100 = {radius**2 / 100.0:.3e} "
            f"on their doubled-ball overlap at {np.round(point, 4)}",
            pair=pair,
            worst_point=tuple(point),
        )

    def make_branch(j):
        def branch():
            d2, mask = _branch_geometry(template.axes, centers[j], radius)
            out = np.full(shape, -np.inf)
            out[mask] = np.asarray(
                locals_[j](coords[:, mask]), dtype=float
            ) - d2[mask]
            return out

        return branch

    return regularized_max_many(
        [make_branch(j) for j in range(count)], epsilon, out_template=template
    )


def demo_cover(n, violate=False):
    """Canonical gluing setup: a lattice cover with locals cut from one
    global band-limited potential.

    Returns (centers, radius, locals, epsilon, psi, points_per_axis).  With
    violate=True the first local is shifted by r^2/50, tripping the
    closeness check on its overlaps.
    """
    if n == 1:
        per_axis, radius, grid = 3, 0.24, 128
    elif n == 2:
        per_axis, radius, grid = 5, 0.21, 24
    else:
        raise ValueError("demo covers exist for n = 1 and n = 2")
    dim = 2 * n
    ticks = (np.arange(per_axis) + 0.5) / per_axis
    centers = np.stack(
        np.meshgrid(*([ticks] * dim), indexing="ij"), axis=-1
    ).reshape(-1, dim)

    def psi(x):
        value = 0.04 * np.cos(2.0 * np.pi * x[0]) + 0.03 * np.sin(
            2.0 * np.pi * x[1]
        )
        if x.shape[0] >= 4:
            value = value + 0.02 * np.cos(2.0 * np.pi * x[2]) - 0.02 * np.sin(
                2.0 * np.pi * x[3]
            )
        return value

    locals_ = [psi] * len(centers)
    if violate:
        bump = radius**2 / 50.0
        locals_ = [lambda x, b=bump: psi(x) + b] + list(locals_[1:])
    epsilon = 0.8 * radius**2
    return centers, radius, locals_, epsilon, psi, grid
