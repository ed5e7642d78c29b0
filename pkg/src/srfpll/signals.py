"""Three-phase test-signal synthesis and power-invariant normalization.

Signals are generated on a uniform grid ``t_k = k * dt``. The phase angle is
integrated with the same explicit Euler step the closed-loop simulator uses,
``theta[k+1] = theta[k] + omega[k] * dt``, so that a perfectly tracking loop
reproduces the reference angle bit for bit.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigError

TWO_PI = 2.0 * math.pi
PHASE_SHIFTS = (0.0, TWO_PI / 3.0, 2.0 * TWO_PI / 3.0)
NORMALIZED_PEAK = math.sqrt(2.0 / 3.0)
EPS_N = 1e-9

# Channel a is ``Z cos(theta - offset)``: "cosine" is the textbook form,
# "sine" makes phase a read ``Z sin(theta)`` so it matches the
# ``Zbar sin(theta*)`` waveform reconstruction.
REFERENCE_OFFSETS = {"cosine": 0.0, "sine": math.pi / 2.0}

SIGNAL_CSV_HEADER = ("t", "za", "zb", "zc", "valid", "omega_true", "theta_true")

SEGMENT_KINDS = ("constant", "ramp", "step")


def wrap_2pi(x):
    """Wrap an angle (scalar or array) into [0, 2*pi)."""
    if np.ndim(x) == 0:
        y = math.fmod(float(x), TWO_PI)
        if y < 0.0:
            y += TWO_PI
        return 0.0 if y >= TWO_PI else y
    y = np.mod(np.asarray(x, dtype=float), TWO_PI)
    y[y >= TWO_PI] = 0.0
    return y


def reference_offset(reference: str) -> float:
    try:
        return REFERENCE_OFFSETS[reference]
    except KeyError:
        raise ConfigError(
            f"phase reference must be one of {sorted(REFERENCE_OFFSETS)}, got {reference!r}"
        ) from None


@dataclass(frozen=True)
class Segment:
    """One piece of a frequency profile.

    ``constant`` and ``step`` hold ``omega`` (rad/s) for ``duration`` seconds;
    when ``omega`` is None the previous end frequency is kept. ``ramp`` changes
    the frequency at ``kappa`` rad/s^2, starting from ``omega`` if given or
    from the previous end frequency. ``step`` may also apply a phase jump of
    ``phase`` radians at its first sample.
    """

    kind: str
    duration: float
    omega: float | None = None
    kappa: float = 0.0
    phase: float = 0.0

    def problems(self, index: int) -> list[str]:
        out = []
        where = f"frequency segment {index}"
        if self.kind not in SEGMENT_KINDS:
            out.append(f"{where}: kind must be one of {SEGMENT_KINDS}, got {self.kind!r}")
        if not (self.duration > 0 and math.isfinite(self.duration)):
            out.append(f"{where}: duration must be > 0, got {self.duration!r}")
        if self.omega is not None and not math.isfinite(self.omega):
            out.append(f"{where}: omega must be finite")
        if not math.isfinite(self.kappa):
            out.append(f"{where}: kappa must be finite")
        if self.kind != "ramp" and self.kappa != 0.0:
            out.append(f"{where}: kappa is only meaningful for ramp segments")
        if self.kind != "step" and self.phase != 0.0:
            out.append(f"{where}: phase jumps are only allowed on step segments")
        return out


@dataclass(frozen=True)
class FrequencyProfile:
    segments: tuple[Segment, ...]
    omega0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        problems = self.problems()
        if problems:
            raise ConfigError(problems)

    def problems(self) -> list[str]:
        if not self.segments:
            return ["frequency profile has no segments"]
        out = []
        for i, seg in enumerate(self.segments):
            out.extend(seg.problems(i))
        return out

    @classmethod
    def constant(cls, omega: float, duration: float = 1.0) -> FrequencyProfile:
        return cls((Segment("constant", duration, omega=omega),))

    @property
    def starts(self) -> np.ndarray:
        durations = [s.duration for s in self.segments]
        return np.concatenate(([0.0], np.cumsum(durations)[:-1]))

    def _start_omegas(self) -> list[float]:
        omegas = []
        current = self.omega0
        for seg in self.segments:
            if seg.omega is not None:
                current = seg.omega
            omegas.append(current)
            if seg.kind == "ramp":
                current = current + seg.kappa * seg.duration
        return omegas

    def omega_at(self, t) -> np.ndarray:
        """Instantaneous frequency; the last segment's end value holds afterwards."""
        t = np.asarray(t, dtype=float)
        starts = self.starts
        idx = np.clip(np.searchsorted(starts, t, side="right") - 1, 0, None)
        w_start = np.asarray(self._start_omegas())[idx]
        kappa = np.array([s.kappa if s.kind == "ramp" else 0.0 for s in self.segments])[idx]
        dur = np.array([s.duration for s in self.segments])[idx]
        elapsed = np.clip(t - starts[idx], 0.0, dur)
        return w_start + kappa * elapsed

    def phase_jumps(self, t: np.ndarray) -> np.ndarray:
        jumps = np.zeros_like(t, dtype=float)
        for start, seg in zip(self.starts, self.segments):
            if seg.kind == "step" and seg.phase != 0.0:
                k = int(np.searchsorted(t, start - 1e-12, side="left"))
                if k < len(t):
                    jumps[k] += seg.phase
        return jumps


@dataclass(frozen=True)
class AmplitudeProfile:
    """Piecewise-constant amplitude: ``segments`` is a list of (start time, Z)."""

    segments: tuple[tuple[float, float], ...] = ((0.0, 1.0),)

    def __post_init__(self):
        segs = tuple((float(a), float(z)) for a, z in self.segments)
        object.__setattr__(self, "segments", segs)
        problems = self.problems()
        if problems:
            raise ConfigError(problems)

    def problems(self) -> list[str]:
        if not self.segments:
            return ["amplitude profile has no segments"]
        out = []
        starts = [a for a, _ in self.segments]
        if starts[0] != 0.0:
            out.append("amplitude profile must start at t=0")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            out.append("amplitude segment start times must be strictly increasing")
        for i, (_, z) in enumerate(self.segments):
            if not (z >= 0 and math.isfinite(z)):
                out.append(f"amplitude segment {i}: Z must be finite and >= 0, got {z!r}")
        return out

    @classmethod
    def constant(cls, z: float) -> AmplitudeProfile:
        return cls(((0.0, z),))

    def at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        starts = np.array([a for a, _ in self.segments])
        values = np.array([z for _, z in self.segments])
        idx = np.clip(np.searchsorted(starts, t, side="right") - 1, 0, None)
        return values[idx]


@dataclass(frozen=True)
class LossWindow:
    start: float
    duration: float

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True)
class DisturbanceConfig:
    """Additive disturbances and data-loss windows.

    ``noise_corner`` is the low-pass corner (rad/s) shaping the noise; None
    means ``1 / (10 dt)``. The filtered noise is scaled so its stationary
    standard deviation equals ``noise_std``. The 3rd harmonic on channel n is
    ``ratio * Z * cos(3 theta - 2 pi n / 3 + harmonic3_phase)``, which keeps
    the three channels zero-sum.
    """

    noise_std: float = 0.0
    noise_corner: float | None = None
    harmonic3_ratio: float = 0.0
    harmonic3_phase: float = 0.0
    notch_rate: float = 0.0
    notch_amplitude: float = 0.0
    data_loss_windows: tuple[LossWindow, ...] = field(default_factory=tuple)
    rng_seed: int = 0

    def __post_init__(self):
        windows = tuple(
            w if isinstance(w, LossWindow) else LossWindow(*w) for w in self.data_loss_windows
        )
        object.__setattr__(self, "data_loss_windows", windows)

    def problems(self, t_end: float | None = None) -> list[str]:
        out = []
        if not self.noise_std >= 0:
            out.append(f"noise_std must be >= 0, got {self.noise_std!r}")
        if self.noise_corner is not None and not self.noise_corner > 0:
            out.append(f"noise_corner must be > 0, got {self.noise_corner!r}")
        if not 0.0 <= self.harmonic3_ratio <= 0.5:
            out.append(f"harmonic3_ratio must lie in [0, 0.5], got {self.harmonic3_ratio!r}")
        if not self.notch_rate >= 0:
            out.append(f"notch_rate must be >= 0, got {self.notch_rate!r}")
        if not self.notch_amplitude >= 0:
            out.append(f"notch_amplitude must be >= 0, got {self.notch_amplitude!r}")
        windows = sorted(self.data_loss_windows, key=lambda w: w.start)
        for w in windows:
            if not (w.start >= 0 and w.duration > 0):
                out.append(f"data-loss window {w}: needs start >= 0 and duration > 0")
            elif t_end is not None and w.end > t_end:
                out.append(f"data-loss window {w} extends past the run length {t_end}")
        for a, b in zip(windows, windows[1:]):
            if b.start < a.end:
                out.append(f"data-loss windows overlap: {a} and {b}")
        return out


@dataclass(frozen=True)
class ThreePhaseSample:
    t: float
    za: float
    zb: float
    zc: float
    valid: bool = True


@dataclass(frozen=True)
class SignalTrace(Sequence):
    """Array-backed sequence of :class:`ThreePhaseSample` plus the ground truth."""

    t: np.ndarray
    za: np.ndarray
    zb: np.ndarray
    zc: np.ndarray
    valid: np.ndarray
    omega: np.ndarray
    theta: np.ndarray

    def __len__(self):
        return len(self.t)

    def __getitem__(self, k):
        if isinstance(k, slice):
            return [self[i] for i in range(*k.indices(len(self)))]
        return ThreePhaseSample(
            float(self.t[k]), float(self.za[k]), float(self.zb[k]), float(self.zc[k]),
            bool(self.valid[k]),
        )

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else 0.0

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SIGNAL_CSV_HEADER)
            for row in zip(self.t.tolist(), self.za.tolist(), self.zb.tolist(),
                           self.zc.tolist(), self.valid.tolist(), self.omega.tolist(),
                           self.theta.tolist()):
                w.writerow([repr(row[0]), repr(row[1]), repr(row[2]), repr(row[3]),
                            int(row[4]), repr(row[5]), repr(row[6])])


def _band_limited_noise(rng, n, std, corner, dt):
    a = math.exp(-corner * dt)
    white = rng.normal(0.0, std, n)
    # x0 drawn from the stationary law, so the process has std ``std`` from sample 0
    x0 = rng.normal(0.0, std)
    y, _ = lfilter([math.sqrt(1.0 - a * a)], [1.0, -a], white, zi=[a * x0])
    return y


def _notches(rng, n, rate, amplitude, dt):
    hits = rng.random(n) < rate * dt
    out = np.zeros(n)
    idx = np.flatnonzero(hits)
    out[idx] = amplitude * np.where(np.arange(len(idx)) % 2 == 0, 1.0, -1.0)
    return out


def generate(
    profile: FrequencyProfile,
    amp: AmplitudeProfile,
    dist: DisturbanceConfig | None = None,
    dt: float = 0.00025,
    t_end: float = 1.0,
    theta0: float = 0.0,
    reference: str = "cosine",
) -> SignalTrace:
    """Sample a three-phase signal on ``t = 0, dt, ..., <= t_end``."""
    dist = dist or DisturbanceConfig()
    problems = []
    if not dt > 0:
        problems.append(f"dt must be > 0, got {dt!r}")
    if not t_end > dt:
        problems.append(f"t_end must exceed dt, got t_end={t_end!r}, dt={dt!r}")
    problems.extend(dist.problems(t_end))
    if problems:
        raise ConfigError(problems)
    offset = reference_offset(reference)

    n = int(math.floor(t_end / dt + 1e-9)) + 1
    t = np.arange(n) * dt
    omega = profile.omega_at(t)
    jumps = profile.phase_jumps(t)
    increments = omega[:-1] * dt + jumps[1:]
    theta = wrap_2pi(theta0 + jumps[0] + np.concatenate(([0.0], np.cumsum(increments))))
    z = amp.at(t)

    rng = np.random.default_rng(dist.rng_seed)
    corner = dist.noise_corner if dist.noise_corner is not None else 1.0 / (10.0 * dt)
    ref_angle = theta - offset
    channels = []
    for n_idx, shift in enumerate(PHASE_SHIFTS):
        x = z * np.cos(ref_angle - shift)
        if dist.harmonic3_ratio:
            x = x + dist.harmonic3_ratio * z * np.cos(3.0 * ref_angle - shift + dist.harmonic3_phase)
        if dist.noise_std:
            x = x + _band_limited_noise(rng, n, dist.noise_std, corner, dt)
        if dist.notch_rate and dist.notch_amplitude:
            x = x + _notches(rng, n, dist.notch_rate, dist.notch_amplitude, dt)
        channels.append(x)

    valid = np.ones(n, dtype=bool)
    for w in dist.data_loss_windows:
        lost = (t >= w.start - 1e-12) & (t < w.end - 1e-12)
        idx = np.flatnonzero(lost)
        if len(idx) == 0:
            continue
        valid[idx] = False
        hold = idx[0] - 1
        for x in channels:
            x[idx] = x[hold] if hold >= 0 else 0.0

    return SignalTrace(t, channels[0], channels[1], channels[2], valid, omega, theta)


def normalize3(za: float, zb: float, zc: float, floor: float = EPS_N):
    """Scalar kernel of :func:`normalize`: returns ``(za, zb, zc, ok)``."""
    norm = math.sqrt(za * za + zb * zb + zc * zc)
    if not norm >= floor:
        return za, zb, zc, False
    return za / norm, zb / norm, zc / norm, True


def normalize(s: ThreePhaseSample, floor: float = EPS_N) -> ThreePhaseSample:
    """Divide the three channels by their Euclidean norm.

    A balanced input of any amplitude maps to peak ``sqrt(2/3)`` per channel.
    Below ``floor`` the values pass through unchanged and the sample is
    flagged invalid.
    """
    za, zb, zc, ok = normalize3(s.za, s.zb, s.zc, floor)
    return ThreePhaseSample(s.t, za, zb, zc, s.valid and ok)
