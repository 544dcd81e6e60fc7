"""Exception types shared across the lab.

ConfigError maps to CLI exit code 2 (bad input), SolverError and its
subclasses map to exit code 3 (numerical failure or tolerance breach).
"""


class ConfigError(ValueError):
    """Invalid configuration, data, or precondition supplied by the caller."""


class SolverError(RuntimeError):
    """Numerical failure while running a solve or a verification."""


class PositivityError(SolverError):
    """A form required to be positive definite failed, leaving the Kahler cone.

    Carries the flat index and the multi-index of the worst grid point plus
    the offending smallest eigenvalue.
    """

    def __init__(self, what, flat_index, multi_index, min_eigenvalue):
        self.what = what
        self.flat_index = int(flat_index)
        self.multi_index = tuple(int(i) for i in multi_index)
        self.min_eigenvalue = float(min_eigenvalue)
        super().__init__(
            f"{what} not positive definite: min eigenvalue "
            f"{self.min_eigenvalue:.6e} at grid point {self.multi_index} "
            f"(flat index {self.flat_index})"
        )


class EllipticityError(SolverError):
    """Cone margin dropped to zero or below: the linearization lost ellipticity."""

    def __init__(self, family, margin):
        self.family = family
        self.margin = float(margin)
        super().__init__(
            f"lost ellipticity: {family} cone margin {self.margin:.6e} <= 0"
        )


class NewtonFailure(SolverError):
    """A Newton step could not be completed (linear stagnation or damping failure)."""


class MonitorBlowup(SolverError):
    """A monitored quantity exceeded its configured cap."""

    def __init__(self, monitor, value, cap):
        self.monitor = monitor
        self.value = float(value)
        self.cap = float(cap)
        super().__init__(
            f"monitor blow-up: {monitor} = {self.value:.6e} exceeds cap {self.cap:.6e}"
        )


class GlueError(ConfigError):
    """Local potentials violate the closeness or covering preconditions."""

    def __init__(self, message, pair=None, worst_point=None):
        self.pair = pair
        self.worst_point = worst_point
        super().__init__(message)
