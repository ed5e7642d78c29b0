"""Recorded three-phase data -> uniformly sampled :class:`SignalTrace`."""

from __future__ import annotations

import csv
import math

import numpy as np

from ..errors import IngestError
from ..signals import SignalTrace, wrap_2pi
from .config import DEFAULT_COLUMNS


def ingest_csv(path, columns=None, gap_factor: float = 1.5) -> SignalTrace:
    """Read a CSV of timestamped phase samples.

    ``columns`` maps the roles ``t, za, zb, zc`` (and optionally ``theta``,
    ``omega``, ``valid``) to header names. Timestamps must increase strictly.
    Wherever consecutive timestamps are further apart than ``gap_factor``
    times the median step, the gap is filled on the median grid with
    sample-and-hold rows flagged invalid. Unknown ground truth is NaN.
    """
    columns = {**DEFAULT_COLUMNS, **(columns or {})}
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise IngestError(f"cannot open {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise IngestError(f"{path} is empty") from None
        roles = {}
        for role, name in columns.items():
            if name is None:
                continue
            if name not in header:
                if role in DEFAULT_COLUMNS:
                    raise IngestError(f"column {name!r} (for {role}) not in header {header}")
                continue
            roles[role] = header.index(name)
        values = {role: [] for role in roles}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise IngestError(f"expected {len(header)} fields, found {len(row)}", row=lineno)
            for role, i in roles.items():
                try:
                    v = float(row[i])
                except ValueError:
                    raise IngestError(f"{role} value {row[i]!r} is not a number",
                                      row=lineno) from None
                if not math.isfinite(v):
                    raise IngestError(f"{role} value {row[i]!r} is not finite", row=lineno)
                values[role].append(v)
            if len(values["t"]) > 1 and values["t"][-1] <= values["t"][-2]:
                raise IngestError(
                    f"timestamp {values['t'][-1]!r} does not increase "
                    f"(previous {values['t'][-2]!r})", row=lineno)

    t = np.asarray(values["t"])
    if len(t) < 2:
        raise IngestError(f"{path}: need at least two samples")
    raw = {role: np.asarray(v) for role, v in values.items()}
    n = len(t)
    raw.setdefault("theta", np.full(n, np.nan))
    raw.setdefault("omega", np.full(n, np.nan))
    raw_valid = raw["valid"] != 0 if "valid" in raw else np.ones(n, dtype=bool)

    steps = np.diff(t)
    dt = float(np.median(steps))
    missing = np.zeros(n, dtype=int)
    big = steps > gap_factor * dt
    missing[1:][big] = np.rint(steps[big] / dt).astype(int) - 1
    # repeat each row: itself plus the held copies filling the gap after it
    reps = np.ones(n, dtype=int)
    reps[:-1] += missing[1:]
    src = np.repeat(np.arange(n), reps)
    offset = np.concatenate([np.arange(r) for r in reps])
    out_t = t[src] + offset * dt
    valid = raw_valid[src] & (offset == 0)
    theta = raw["theta"][src]
    omega = raw["omega"][src]
    held = offset > 0
    theta[held] = np.nan
    omega[held] = np.nan
    if np.isfinite(theta).any():
        theta = np.where(np.isfinite(theta), wrap_2pi(np.nan_to_num(theta)), np.nan)
    return SignalTrace(out_t, raw["za"][src], raw["zb"][src], raw["zc"][src], valid, omega, theta)


def loss_windows(trace: SignalTrace) -> list[tuple[float, int]]:
    """Runs of invalid samples as (start time, sample count)."""
    out = []
    invalid = ~np.asarray(trace.valid, dtype=bool)
    k = 0
    while k < len(invalid):
        if invalid[k]:
            j = k
            while j < len(invalid) and invalid[j]:
                j += 1
            out.append((float(trace.t[k]), j - k))
            k = j
        else:
            k += 1
    return out
