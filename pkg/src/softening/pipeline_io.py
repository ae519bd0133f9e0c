"""Record ingestion, artifact writers and the run manifest.

Floats are written with ``repr`` so every CSV value parses back to the same
double.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._types import TimeSeries

__all__ = [
    "RecordSpec",
    "IngestError",
    "ingest",
    "fmt",
    "write_csv",
    "read_csv",
    "write_series",
    "write_track",
    "write_surface",
    "write_surrogates",
    "write_summary",
    "write_scan",
    "write_manifest",
    "read_manifest",
]

MISSING = {"", "na", "nan", "n/a", "null", "none", "-", "--"}


class IngestError(ValueError):
    pass


@dataclass(frozen=True)
class RecordSpec:
    """Where and how to read one record.

    Columns are header names or 0-based indices. ``crop`` is an inclusive
    ``(a, b)`` range in the file's own time units, in either order.
    ``resample_dt`` is a spacing in forward time units or ``"auto"`` for
    the median raw spacing.
    """

    path: str | Path
    time_column: str | int = 0
    value_column: str | int = 1
    time_direction: str = "forward"
    crop: tuple | None = None
    resample_dt: float | str = "auto"
    drop_missing: bool = False

    def __post_init__(self):
        if self.time_direction not in ("forward", "bp"):
            raise ValueError("time_direction must be 'forward' or 'bp'")


def _sniff(text):
    try:
        return csv.Sniffer().sniff(text[:8192], delimiters=",\t;").delimiter
    except csv.Error:
        first = text.splitlines()[0] if text else ""
        counts = {d: first.count(d) for d in ",\t;"}
        return max(counts, key=counts.get) if any(counts.values()) else ","


def _column(header, key):
    if isinstance(key, int) or (isinstance(key, str) and key.isdigit()):
        i = int(key)
        if not 0 <= i < len(header):
            raise IngestError(f"column index {i} out of range for {len(header)} columns")
        return i
    names = [h.strip() for h in header]
    if key not in names:
        raise IngestError(f"column {key!r} not in header {names}")
    return names.index(key)


def _parse(cell):
    s = cell.strip()
    if s.lower() in MISSING:
        return math.nan
    return float(s)


def ingest(spec: RecordSpec) -> TimeSeries:
    """Read, orient, crop and resample a record onto a uniform grid.

    Years-before-present records become forward time ``t = -t_bp``, in
    ascending order whichever way the file lists them. A record that is
    already uniform is returned with its values untouched.
    """
    path = Path(spec.path)
    text = path.read_text()
    delim = _sniff(text)
    rows = list(csv.reader(text.splitlines(), delimiter=delim))
    rows = [(i + 1, r) for i, r in enumerate(rows) if any(c.strip() for c in r)]
    if len(rows) < 2:
        raise IngestError(f"{path}: need a header row and data")
    (_, header), body = rows[0], rows[1:]
    ti, vi = _column(header, spec.time_column), _column(header, spec.value_column)

    lines, t, v, bad = [], [], [], []
    for line, r in body:
        try:
            tt = _parse(r[ti]) if ti < len(r) else math.nan
            vv = _parse(r[vi]) if vi < len(r) else math.nan
        except ValueError:
            raise IngestError(f"{path}:{line}: cannot parse {r!r}") from None
        if not (math.isfinite(tt) and math.isfinite(vv)):
            bad.append(line)
            if spec.drop_missing:
                continue
        lines.append(line)
        t.append(tt)
        v.append(vv)
    if bad and not spec.drop_missing:
        raise IngestError(f"{path}: missing values on lines {bad[:20]}{' ...' if len(bad) > 20 else ''}")
    lines, t, v = np.array(lines), np.array(t), np.array(v)

    if spec.crop is not None:
        lo, hi = sorted(float(c) for c in spec.crop)
        keep = (t >= lo) & (t <= hi)
        lines, t, v = lines[keep], t[keep], v[keep]
    if spec.time_direction == "bp":
        t = -t
        # files usually list the youngest sample first
        if t.size > 1 and np.all(np.diff(t) < 0):
            lines, t, v = lines[::-1], t[::-1], v[::-1]
    if t.size < 3:
        raise IngestError(f"{path}: {t.size} rows in range, need at least 3")
    step = np.diff(t)
    if np.any(step <= 0):
        off = [int(lines[i + 1]) for i in np.flatnonzero(step <= 0)]
        raise IngestError(f"{path}: time not strictly increasing at lines {off[:20]}")

    dt = float(np.median(step)) if spec.resample_dt in (None, "auto") else float(spec.resample_dt)
    if not dt > 0:
        raise IngestError("resample spacing must be positive")
    uniform = bool(np.max(np.abs(step - dt)) <= 1e-9 * dt)
    if uniform:
        times, values = t, v
    else:
        k = int(math.floor((t[-1] - t[0]) / dt * (1 + 1e-12))) + 1
        times = t[0] + dt * np.arange(k)
        values = np.interp(times, t, v)
    provenance = {
        "path": str(path),
        "delimiter": repr(delim),
        "time_direction": spec.time_direction,
        "crop": "" if spec.crop is None else f"{spec.crop[0]}:{spec.crop[1]}",
        "raw_count": int(t.size),
        "dropped_missing": len(bad) if spec.drop_missing else 0,
        "resampled": not uniform,
        "resample_dt": dt,
        "count": int(values.size),
    }
    return TimeSeries(times, values, uniform_dt=dt, provenance=provenance)


def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header, columns):
    """Write equal-length columns under ``header``."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([fmt(c) for c in row])
    return path


def read_csv(path):
    """Return ``(header, rows)`` with numeric cells parsed to float."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))

    def conv(c):
        try:
            return float(c)
        except ValueError:
            return c

    return rows[0], [[conv(c) for c in r] for r in rows[1:]]


def write_series(path, ts: TimeSeries):
    return write_csv(path, ["t", "x"], [ts.times, ts.values])


TRACK_COLUMNS = ("t_center", "kappa_acf", "kappa_u", "c_emp", "n2", "c_emp2", "gamma", "sigma2_emp")


def write_track(path, track):
    return write_csv(path, TRACK_COLUMNS, [getattr(track, k) for k in TRACK_COLUMNS])


def write_surface(path, surface):
    """Long format, one row per (window, state) cell."""
    nt, nx = surface.u_emp.shape
    t = np.repeat(surface.time_centers, nx)
    x = np.tile(surface.state_grid, nt)
    return write_csv(
        path,
        ["t", "x", "u_emp", "parabola_dev", "supported"],
        [t, x, surface.u_emp.ravel(), surface.parabola_dev.ravel(), surface.support_mask.ravel()],
    )


def write_surrogates(path, reports):
    names, vals = [], []
    for k, r in reports.items():
        names += [k] * r.surrogate_values.size
        vals += list(r.surrogate_values)
    return write_csv(path, ["indicator", "value"], [names, vals])


def write_summary(path, reports):
    rs = list(reports.values())
    return write_csv(
        path,
        ["indicator", "observed_mean", "percentile"],
        [[r.indicator_name for r in rs], [r.observed_mean for r in rs], [r.percentile for r in rs]],
    )


def write_scan(directory, grid):
    """One matrix per indicator: rows are window fractions, columns bandwidth fractions."""
    paths = []
    header = ["window_fraction"] + [fmt(b) for b in grid.bandwidth_fractions]
    for k, m in grid.percentile.items():
        cols = [grid.window_fractions] + [m[:, j] for j in range(m.shape[1])]
        paths.append(write_csv(Path(directory) / f"scan_{k}.csv", header, cols))
    return paths


def write_manifest(path, items):
    path = Path(path)
    with path.open("w") as fh:
        for k, v in items.items():
            s = fmt(v)
            if "\n" in s:
                raise ValueError(f"manifest value for {k} spans lines")
            fh.write(f"{k}={s}\n")
    return path


def read_manifest(path):
    out = {}
    for line in Path(path).read_text().splitlines():
        if line.strip() and not line.startswith("#"):
            k, _, v = line.partition("=")
            out[k.strip()] = v
    return out
