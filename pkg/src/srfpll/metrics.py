"""Synchronization-quality metrics over a recorded run."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import ConfigError
from .signals import NORMALIZED_PEAK

TRACE_CSV_HEADER = (
    "t", "za", "zb", "zc", "valid", "omega_true", "theta_true", "omega_tilde",
    "omega_star", "theta_star", "zq", "zbar_a", "zbar_a_star",
)


@dataclass(frozen=True)
class RunTrace:
    """Per-sample record of a closed-loop run; every field has length K.

    ``theta_star`` is the frame angle used at ``t`` and ``omega_star`` the
    loop frequency computed from that sample. Ground-truth columns are NaN
    when unknown (recorded data).
    """

    t: np.ndarray
    za: np.ndarray
    zb: np.ndarray
    zc: np.ndarray
    valid: np.ndarray
    omega_true: np.ndarray
    theta_true: np.ndarray
    omega_tilde: np.ndarray
    omega_star: np.ndarray
    theta_star: np.ndarray
    zq: np.ndarray
    zbar_a: np.ndarray
    zbar_a_star: np.ndarray

    def __post_init__(self):
        n = len(self.t)
        bad = [f.name for f in fields(self) if len(getattr(self, f.name)) != n]
        if bad:
            raise ConfigError(f"trace columns differ in length from t: {bad}")
        if n > 1 and not np.all(np.diff(self.t) > 0):
            raise ConfigError("trace timestamps must be strictly increasing")

    def __len__(self):
        return len(self.t)

    def to_csv(self, path) -> None:
        cols = [getattr(self, name).tolist() for name in TRACE_CSV_HEADER]
        valid_idx = TRACE_CSV_HEADER.index("valid")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_CSV_HEADER)
            for row in zip(*cols):
                w.writerow([int(v) if i == valid_idx else repr(float(v))
                            for i, v in enumerate(row)])

    @classmethod
    def from_csv(cls, path) -> RunTrace:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            missing = [c for c in TRACE_CSV_HEADER if c not in header]
            if missing:
                raise ConfigError(f"{path}: trace is missing columns {missing}")
            rows = [r for r in reader if r]
        data = np.array(rows, dtype=float).reshape(len(rows), len(header))
        cols = {name: data[:, header.index(name)] for name in TRACE_CSV_HEADER}
        cols["valid"] = cols["valid"] != 0
        return cls(**cols)


@dataclass(frozen=True)
class PhaseErrorMetrics:
    e_sigma: float
    e_me: float
    k: int


def wrap_pi(x):
    """Wrap angles into (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2.0 * np.pi)


def window_mask(t, window) -> np.ndarray:
    """Boolean mask of the half-open window ``[t_start, t_end)``; None selects all."""
    t = np.asarray(t)
    if window is None:
        return np.ones(len(t), dtype=bool)
    t0, t1 = window
    if not t1 > t0:
        raise ConfigError(f"window end must exceed start, got {window!r}")
    return (t >= t0) & (t < t1)


def phase_errors(theta_star, theta, wrapped: bool = True) -> np.ndarray:
    """``theta* - theta``, wrapped into (-pi, pi] or left raw."""
    d = np.asarray(theta_star, dtype=float) - np.asarray(theta, dtype=float)
    return wrap_pi(d) if wrapped else d


def phase_error_metrics(trace: RunTrace, window=None, wrapped: bool = True) -> PhaseErrorMetrics:
    """Accumulated (E_sigma) and mean (E_me) absolute phase error in ``window``.

    ``wrapped=False`` keeps the raw difference of the two sawtooth angles,
    including the spurious near-2pi spikes at each wrap.
    """
    m = window_mask(trace.t, window)
    k = int(m.sum())
    if k == 0:
        raise ConfigError(f"window {window!r} contains no samples")
    err = np.abs(phase_errors(trace.theta_star[m], trace.theta_true[m], wrapped))
    e_me = math.fsum(err.tolist()) / k
    # defined through e_me so that e_sigma == k * e_me holds exactly
    return PhaseErrorMetrics(e_sigma=k * e_me, e_me=e_me, k=k)


def reconstruct_waveform(theta_star, reference: str = "sine",
                         amplitude: float = NORMALIZED_PEAK):
    """Phase-a waveform implied by the locked angle: ``Zbar sin(theta*)``.

    ``reference="cosine"`` gives ``Zbar cos(theta*)`` for signals written in
    cosine form.
    """
    th = np.asarray(theta_star, dtype=float)
    if reference == "sine":
        out = amplitude * np.sin(th)
    elif reference == "cosine":
        out = amplitude * np.cos(th)
    else:
        raise ConfigError(f"unknown phase reference {reference!r}")
    return float(out) if np.ndim(theta_star) == 0 else out


def waveform_rmse(z_meas, z_star, window=None, t=None) -> float:
    z_meas = np.asarray(z_meas, dtype=float)
    z_star = np.asarray(z_star, dtype=float)
    if z_meas.shape != z_star.shape:
        raise ConfigError(f"series lengths differ: {z_meas.shape} vs {z_star.shape}")
    if window is not None:
        if t is None:
            raise ConfigError("a window needs the time axis t")
        m = window_mask(t, window)
        z_meas, z_star = z_meas[m], z_star[m]
    if len(z_meas) == 0:
        raise ConfigError("RMSE window contains no samples")
    d = z_meas - z_star
    # hypot rescales internally: no underflow for tiny differences, so the
    # result is zero only for identical series
    h = math.hypot(*d.tolist())
    r = h / math.sqrt(len(d))
    # the division can still flush a subnormal norm to zero
    return r if r > 0.0 or h == 0.0 else math.ulp(0.0)


@dataclass(frozen=True)
class MetricSummary:
    scenario: str
    mode: str
    window: tuple[float, float]
    e_sigma: float
    e_me: float
    e_rms: float
    k: int

    def to_json_dict(self) -> dict:
        def clean(v):
            return None if isinstance(v, float) and not math.isfinite(v) else v

        return {
            "scenario": self.scenario,
            "mode": self.mode,
            "window": [clean(float(self.window[0])), clean(float(self.window[1]))],
            "E_sigma": clean(self.e_sigma),
            "E_me": clean(self.e_me),
            "E_rms": clean(self.e_rms),
            "K": self.k,
        }


def summarize(trace: RunTrace, scenario: str, window=None, wrapped: bool = True) -> MetricSummary:
    if window is None:
        window = (float(trace.t[0]), math.inf)
    window = (float(window[0]), float(window[1]))
    pe = phase_error_metrics(trace, window, wrapped)
    rms = waveform_rmse(trace.zbar_a, trace.zbar_a_star, window, trace.t)
    return MetricSummary(scenario, "wrapped" if wrapped else "raw", window,
                         pe.e_sigma, pe.e_me, rms, pe.k)


def write_metrics_json(path, summaries) -> None:
    payload = [s.to_json_dict() for s in summaries]
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, allow_nan=False)
        fh.write("\n")
