"""Flat key = value run configuration with dotted section prefixes.

One assignment per line; blank lines and full-line # comments are skipped.
Every command declares the exact keys it understands and anything else is a
hard error, so a typo cannot silently fall back to a default.  Band-limited
fields are written as semicolon-separated mode triples

    cos:1,0,0,0:0.05 ; sin:0,0,1,0:-0.02

meaning amp * cos(2 pi k.x) with the integer frequency vector k running over
the 2n real axes.
"""

from dataclasses import dataclass, field

from .errors import ConfigError

COMMANDS = (
    "solve-cma",
    "solve-j",
    "solve-gma",
    "check-cone",
    "lelong",
    "glue-demo",
    "abp-demo",
    "props",
)

_COMMON_KEYS = {"command", "seed", "out.dir"}

_TOLERANCE_KEYS = {
    "tol.residual_sup",
    "tol.newton_cap",
    "tol.linear_rtol",
    "tol.stagnation_rtol",
    "tol.min_alpha",
    "tol.min_step",
    "tol.trace_cap",
    "tol.depth_cap",
    "tol.gmres_restart",
    "tol.gmres_maxiter",
}

_SOLVE_KEYS = {
    "grid.n",
    "grid.points",
    "path.steps",
    "solution.modes",
    "twist.modes",
    "twist.normalize",
} | _TOLERANCE_KEYS

ALLOWED_KEYS = {
    "solve-cma": _COMMON_KEYS | _SOLVE_KEYS,
    "solve-j": _COMMON_KEYS | _SOLVE_KEYS | {"chi.modes"},
    "solve-gma": _COMMON_KEYS | _SOLVE_KEYS | {"chi.modes", "gma.coeffs",
                                               "gma.twist_floor"},
    "check-cone": _COMMON_KEYS | {"cone.lam", "cone.f", "cone.c"},
    "lelong": _COMMON_KEYS | {"lelong.member"},
    "glue-demo": _COMMON_KEYS | {"glue.n", "glue.violate"},
    "abp-demo": _COMMON_KEYS | {"abp.points", "abp.epsilon", "abp.count"},
    "props": _COMMON_KEYS,
}


def parse_assignments(text, source="<config>"):
    """Raw key -> value string mapping; duplicate keys are errors."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"{source}:{lineno}: empty key or value in {raw!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def parse_modes(text, key="modes"):
    """Semicolon-separated kind:k1,...,k2n:amplitude triples."""
    modes = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) != 3:
            raise ConfigError(
                f"{key}: mode {chunk!r} must look like cos:1,0,0,0:0.05"
            )
        kind = parts[0].strip().lower()
        if kind not in ("cos", "sin"):
            raise ConfigError(f"{key}: mode kind must be cos or sin, got {kind!r}")
        try:
            kvec = tuple(int(v.strip()) for v in parts[1].split(","))
            amp = float(parts[2])
        except ValueError as exc:
            raise ConfigError(f"{key}: cannot parse mode {chunk!r}: {exc}") from None
        modes.append((kind, kvec, amp))
    if not modes:
        raise ConfigError(f"{key}: empty mode list")
    return modes


@dataclass(frozen=True)
class RunConfig:
    """Validated command plus its raw assignments."""

    command: str
    values: dict = field(default_factory=dict)
    source: str = "<config>"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(
                f"{self.source}: unknown command {self.command!r}; "
                f"expected one of {', '.join(COMMANDS)}"
            )
        allowed = ALLOWED_KEYS[self.command]
        unknown = sorted(set(self.values) - allowed)
        if unknown:
            raise ConfigError(
                f"{self.source}: unknown keys for {self.command}: {', '.join(unknown)}"
            )

    def has(self, key):
        return key in self.values

    def get_str(self, key, default=None):
        if key not in self.values:
            if default is None:
                raise ConfigError(f"{self.source}: missing required key {key!r}")
            return default
        return self.values[key]

    def get_int(self, key, default=None, minimum=None):
        raw = self.get_str(key, default=None if default is None else str(default))
        try:
            value = int(raw)
        except ValueError:
            raise ConfigError(f"{self.source}: {key} must be an integer, got {raw!r}") from None
        if minimum is not None and value < minimum:
            raise ConfigError(f"{self.source}: {key} must be >= {minimum}, got {value}")
        return value

    def get_float(self, key, default=None):
        raw = self.get_str(key, default=None if default is None else repr(default))
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{self.source}: {key} must be a number, got {raw!r}") from None

    def get_bool(self, key, default=None):
        raw = self.get_str(key, default=None if default is None else str(default)).lower()
        if raw in ("true", "yes", "1", "on"):
            return True
        if raw in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{self.source}: {key} must be true or false, got {raw!r}")

    def get_floats(self, key, default=None):
        if key not in self.values:
            if default is None:
                raise ConfigError(f"{self.source}: missing required key {key!r}")
            return tuple(default)
        raw = self.values[key]
        try:
            return tuple(float(v.strip()) for v in raw.split(",") if v.strip())
        except ValueError:
            raise ConfigError(f"{self.source}: {key} must be comma-separated numbers, got {raw!r}") from None

    def get_modes(self, key):
        return parse_modes(self.get_str(key), key=f"{self.source}: {key}")

    def echo_lines(self):
        """Canonical reproduction of the effective configuration."""
        lines = [f"command = {self.command}"]
        for key in sorted(self.values):
            if key != "command":
                lines.append(f"{key} = {self.values[key]}")
        return lines


def load_run_config(path, overrides=None):
    """Parse, merge command-line overrides, and validate a config file."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    values = parse_assignments(text, source=str(path))
    for key, value in (overrides or {}).items():
        values[key] = str(value)
    command = values.pop("command", None)
    if command is None:
        raise ConfigError(f"{path}: missing required key 'command'")
    return RunConfig(command=command, values=values, source=str(path))
