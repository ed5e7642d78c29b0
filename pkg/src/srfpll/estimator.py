"""Model-free online frequency estimator for one harmonic channel.

Per channel the estimator runs a second-order band-pass

    eta1' = eta2
    eta2' = -w^2 eta1 - 2 w eta2 + 2 w z

whose output ``nu = eta2`` tracks ``z`` with unit gain and zero phase when
the tuning frequency ``w`` equals the signal frequency, together with the
adaptation law ``w' = -gamma * sign(eta1) * (z - nu)``. Everything is
integrated with one explicit Euler step per sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError

# omega * dt must stay below this for the explicit Euler step
EULER_LIMIT = 0.5


@dataclass(frozen=True)
class EstimatorConfig:
    gamma: float = 4000.0
    omega_init: float = 120.0
    omega_floor: float = 1.0

    def problems(self, dt: float | None = None) -> list[str]:
        out = []
        if not self.gamma > 0:
            out.append(f"estimator gamma must be > 0, got {self.gamma!r}")
        if not self.omega_floor > 0:
            out.append(f"estimator omega_floor must be > 0, got {self.omega_floor!r}")
        if not self.omega_init > self.omega_floor:
            out.append(
                f"estimator omega_init ({self.omega_init!r}) must exceed omega_floor "
                f"({self.omega_floor!r})"
            )
        if dt is not None and not self.omega_init * dt < EULER_LIMIT:
            out.append(
                f"estimator omega_init * dt = {self.omega_init * dt:.3g} violates the "
                f"Euler stability limit {EULER_LIMIT}"
            )
        return out

    def validate(self, dt: float | None = None) -> EstimatorConfig:
        problems = self.problems(dt)
        if problems:
            raise ConfigError(problems)
        return self


@dataclass(frozen=True)
class EstimatorState:
    eta1: float
    eta2: float
    omega_tilde: float

    @classmethod
    def initial(cls, cfg: EstimatorConfig) -> EstimatorState:
        return cls(0.0, 0.0, cfg.omega_init)


def _sign(x: float) -> float:
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


def euler_kernel(eta1, eta2, w, z, dt, gamma, floor, valid=True):
    """One Euler step on plain floats; returns the new ``(eta1, eta2, w)``.

    With ``valid`` false the frequency is frozen and only the filter states
    integrate.
    """
    d2 = -w * w * eta1 - 2.0 * w * eta2 + 2.0 * w * z
    if valid:
        w_next = w - dt * gamma * _sign(eta1) * (z - eta2)
        if w_next < floor:
            w_next = floor
    else:
        w_next = w
    return eta1 + dt * eta2, eta2 + dt * d2, w_next


def estimator_step(
    state: EstimatorState, z_n: float, dt: float, cfg: EstimatorConfig, valid: bool = True
) -> EstimatorState:
    if not math.isfinite(z_n):
        raise NumericalError(f"estimator input is not finite: {z_n!r}")
    if not dt > 0:
        raise ConfigError(f"dt must be > 0, got {dt!r}")
    eta1, eta2, w = euler_kernel(
        state.eta1, state.eta2, state.omega_tilde, z_n, dt, cfg.gamma, cfg.omega_floor, valid
    )
    if not (math.isfinite(eta1) and math.isfinite(eta2) and math.isfinite(w)):
        raise NumericalError("estimator state diverged")
    return EstimatorState(eta1, eta2, w)


def estimate_series(z, dt: float, cfg: EstimatorConfig, valid=None) -> np.ndarray:
    """Run one estimator over a sampled channel; returns omega_tilde per sample.

    Entry k is the estimate after consuming sample k.
    """
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise NumericalError("estimator input contains non-finite samples")
    valid = np.ones(len(z), dtype=bool) if valid is None else np.asarray(valid, dtype=bool)
    out = np.empty(len(z))
    eta1 = eta2 = 0.0
    w = cfg.omega_init
    gamma, floor = cfg.gamma, cfg.omega_floor
    for k, (zk, ok) in enumerate(zip(z.tolist(), valid.tolist())):
        eta1, eta2, w = euler_kernel(eta1, eta2, w, zk, dt, gamma, floor, ok)
        out[k] = w
    return out


def average_estimate(wa: float, wb: float, wc: float) -> float:
    # fsum is correctly rounded, so the result does not depend on argument order;
    # the clamp absorbs the final division's rounding (e.g. three equal inputs)
    ws = (wa, wb, wc)
    return min(max(math.fsum(ws) / 3.0, min(ws)), max(ws))


def convergence_bound(gamma: float, z: float, omega: float, delta: float = 0.0) -> float:
    """Upper bound on the exponential convergence rate, ``gamma Z / (2 omega) + delta``.

    Use the largest expected ``omega`` for a conservative figure.
    """
    if omega == 0:
        raise ConfigError("convergence bound undefined for omega = 0")
    problems = [f"{name} must be >= 0, got {v!r}"
                for name, v in (("gamma", gamma), ("Z", z), ("delta", delta)) if not v >= 0]
    if not omega > 0:
        problems.append(f"omega must be > 0, got {omega!r}")
    if problems:
        raise ConfigError(problems)
    return 0.5 * gamma * z / omega + delta


def fit_decay_rate(t, eps, omega: float, start_fraction: float = 0.1,
                   floor_factor: float = 2.0) -> float:
    """Fit an exponential decay rate (1/s) to the estimation error ``eps``.

    The error chatters at twice the signal frequency, so ``|eps|`` is first
    averaged over consecutive periods of ``2 pi / omega``. The fit covers the
    envelope from the first period below ``start_fraction * |eps(0)|`` (the
    end of the initial reaching transient) until it first comes within
    ``floor_factor`` of the steady-state floor, taken as the median envelope
    over the last quarter of the record.
    """
    t = np.asarray(t, dtype=float)
    eps = np.abs(np.asarray(eps, dtype=float))
    dt = t[1] - t[0]
    per = max(1, int(round(2.0 * math.pi / omega / dt)))
    m = len(eps) // per
    if m < 8:
        raise ValueError("record too short for an envelope fit")
    env = eps[: m * per].reshape(m, per).mean(axis=1)
    tc = t[: m * per].reshape(m, per).mean(axis=1)
    floor = float(np.median(env[-max(2, m // 4):]))
    below = np.flatnonzero(env <= start_fraction * eps[0])
    if len(below) == 0:
        raise ValueError("error never leaves the initial transient")
    i0 = int(below[0])
    reached = np.flatnonzero(env[i0:] <= floor_factor * floor)
    i1 = i0 + int(reached[0]) if len(reached) else m - 1
    if i1 - i0 < 2:
        i1 = min(m - 1, i0 + 2)
    slope = np.polyfit(tc[i0: i1 + 1], np.log(env[i0: i1 + 1]), 1)[0]
    return float(-slope)
