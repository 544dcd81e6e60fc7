"""CSV and summary serialization for runs.

Numbers are written with repr(float(.)), the shortest round-trip form, so a
re-run with the same seed and thread count reproduces every file byte for
byte.  Wall-clock time appears only in the plain-text summary, never in a
CSV, for the same reason.
"""

import csv

import numpy as np

from .errors import ConfigError

TRACE_HEADER = (
    "t",
    "newton_iterations",
    "residual_sup",
    "sup_phi",
    "osc_phi",
    "trace_bound",
    "cone_margin",
    "min_eigen",
    "calabi_S",
    "szekelyhidi_G_max",
)

LELONG_HEADER = ("delta", "hat", "mean", "smooth", "nu")


def format_value(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_csv(path, header, rows):
    """Line-oriented comma-separated file with a fixed header row."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(",".join(header) + "\n")
            for row in rows:
                handle.write(",".join(format_value(v) for v in row) + "\n")
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from None
    return path


def write_table(path, header, rows):
    """Like write_csv but for string-valued cells, quoting embedded commas."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from None
    return path


def trace_rows(report):
    """One row per accepted path time, ordered by t."""
    rows = []
    for state in report.states:
        rows.append(
            (state.t, len(state.newton_residuals), state.residual_norm)
            + state.monitors.as_tuple()
        )
    return rows


def write_trace(path, report):
    return write_csv(path, TRACE_HEADER, trace_rows(report))


def write_field(path, values):
    """Grid dump as i1,...,id,value rows in C index order."""
    values = np.asarray(values)
    header = tuple(f"i{a + 1}" for a in range(values.ndim)) + ("value",)
    rows = (idx + (values[idx],) for idx in np.ndindex(values.shape))
    return write_csv(path, header, rows)


def write_lelong_profile(path, profile):
    rows = zip(
        profile.radii,
        profile.hat_values,
        profile.mean_values,
        profile.smooth_values,
        profile.quotients,
    )
    return write_csv(path, LELONG_HEADER, rows)


def write_summary(path, config, lines, wall_seconds=None):
    """Plain-text run summary: config echo first, then result lines."""
    try:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("# configuration\n")
            for line in config.echo_lines():
                handle.write(line + "\n")
            handle.write("# results\n")
            for line in lines:
                handle.write(line + "\n")
            if wall_seconds is not None:
                handle.write(f"wall_seconds = {wall_seconds:.3f}\n")
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from None
    return path
