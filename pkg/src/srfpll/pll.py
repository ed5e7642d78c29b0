"""SRF-PLL loop: PI regulator, VCO integrator and feed-forward injection.

Also holds the symmetrical-optimum tuner and the small-signal
frequency-domain analysis of the open loop

    H(s) = U (kp s + ki) / s^2 * 1 / (tau s + 1)

where ``U`` is the detector gain (``sqrt(2/3)`` after normalization) and
``tau`` models the one-sample delay.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import AnalysisError, ConfigError, NumericalError
from .signals import NORMALIZED_PEAK, wrap_2pi

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PiGains:
    kp: float
    ki: float

    def problems(self, tau: float | None = None) -> list[str]:
        out = []
        if not self.kp > 0:
            out.append(f"kp must be > 0, got {self.kp!r}")
        if not self.ki > 0:
            out.append(f"ki must be > 0, got {self.ki!r}")
        if not out and tau is not None and not self.kp / self.ki > 10.0 * tau:
            out.append(f"kp/ki = {self.kp / self.ki:.4g} s must exceed 10*tau = {10 * tau:.4g} s")
        return out


@dataclass(frozen=True)
class TunerInput:
    alpha: float = 40.0
    tau: float = 0.00025
    U: float = NORMALIZED_PEAK

    def problems(self) -> list[str]:
        out = []
        if not self.alpha > 1:
            out.append(f"alpha must be > 1, got {self.alpha!r}")
        if not self.tau > 0:
            out.append(f"tau must be > 0, got {self.tau!r}")
        if not self.U > 0:
            out.append(f"U must be > 0, got {self.U!r}")
        return out


@dataclass(frozen=True)
class PllState:
    theta_star: float = 0.0
    omega_star: float = 0.0
    integ: float = 0.0


def tune_symmetrical_optimum(inp: TunerInput) -> tuple[PiGains, float]:
    """PI gains placing ki/kp and 1/tau geometrically symmetric about the crossover.

    Returns ``(gains, omega_c)`` with ``omega_c = 1 / (alpha tau)``.
    """
    problems = inp.problems()
    if problems:
        raise ConfigError(problems)
    a, tau, u = inp.alpha, inp.tau, inp.U
    gains = PiGains(kp=1.0 / (u * a * tau), ki=1.0 / (u * a**3 * tau**2))
    return gains, 1.0 / (a * tau)


def pll_kernel(theta_star, integ, zq, omega_ff, kp, ki, dt, valid=True):
    """One loop update on plain floats; returns ``(theta_next, omega_star, integ)``.

    On invalid samples the detector output is ignored and the loop coasts
    at its current integrator value plus feed-forward.
    """
    e = -zq if valid else 0.0
    integ = integ + ki * e * dt
    omega = kp * e + integ + omega_ff
    theta = theta_star + omega * dt
    if theta >= TWO_PI or theta < 0.0:
        theta = wrap_2pi(theta)
    return theta, omega, integ


def pll_step(state: PllState, zq_normalized: float, omega_ff: float, gains: PiGains,
             dt: float, valid: bool = True) -> PllState:
    """Advance the loop by one sample.

    The PI acts on ``-zq`` (zq > 0 means the frame leads the signal), its
    output plus ``omega_ff`` is the loop frequency, and the angle integrates
    it with a forward-Euler step wrapped into [0, 2 pi).
    """
    if not (math.isfinite(zq_normalized) and math.isfinite(omega_ff)):
        raise NumericalError(f"non-finite PLL input: zq={zq_normalized!r}, omega_ff={omega_ff!r}")
    if not dt > 0:
        raise ConfigError(f"dt must be > 0, got {dt!r}")
    theta, omega, integ = pll_kernel(state.theta_star, state.integ, zq_normalized, omega_ff,
                                     gains.kp, gains.ki, dt, valid)
    return PllState(theta, omega, integ)


def open_loop(gains: PiGains, tau: float, U: float, omega):
    """Complex open-loop response H(j omega)."""
    s = 1j * np.asarray(omega, dtype=float)
    return U * (gains.kp * s + gains.ki) / s**2 / (tau * s + 1.0)


def open_loop_response(gains: PiGains, tau: float, U: float, omega):
    """Magnitude (dB) and continuous phase (deg) of H(j omega).

    The phase is assembled from its factors so it never wraps: -180 deg at
    both ends, with a single bump above -180 deg between ki/kp and 1/tau.
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0):
        raise ConfigError("omega must be > 0")
    mag = np.abs(open_loop(gains, tau, U, w))
    mag_db = 20.0 * np.log10(mag)
    phase = np.degrees(np.arctan2(gains.kp * w, gains.ki) - np.pi - np.arctan(tau * w))
    if np.ndim(omega) == 0:
        return float(mag_db), float(phase)
    return mag_db, phase


def frequency_error_response(gains: PiGains, tau: float, U: float, omega):
    """E(j omega) = (omega_in - omega_star) / omega_in = 1 / (1 + H(j omega))."""
    return 1.0 / (1.0 + open_loop(gains, tau, U, omega))


def phase_margin(gains: PiGains, tau: float, U: float, rtol: float = 1e-6) -> tuple[float, float]:
    """Find the 0 dB crossover by bisection and return ``(phi_m_deg, omega_c)``.

    The search runs in log-frequency over ``[ki/kp/100, 100/tau]``.
    """
    problems = gains.problems()
    if not tau > 0:
        problems.append(f"tau must be > 0, got {tau!r}")
    if not U > 0:
        problems.append(f"U must be > 0, got {U!r}")
    if problems:
        raise ConfigError(problems)
    lo, hi = gains.ki / gains.kp / 100.0, 100.0 / tau

    def gain_db(w):
        return open_loop_response(gains, tau, U, w)[0]

    if not (gain_db(lo) > 0.0 > gain_db(hi)):
        raise AnalysisError(f"no 0 dB crossover in [{lo:.4g}, {hi:.4g}] rad/s")
    while hi - lo > rtol * lo:
        mid = math.sqrt(lo * hi)
        if gain_db(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    wc = math.sqrt(lo * hi)
    return 180.0 + open_loop_response(gains, tau, U, wc)[1], wc


def steady_state_ramp_error(kappa: float, ki: float, U: float = NORMALIZED_PEAK) -> float:
    """Linearized ramp-tracking figure ``kappa / (U ki)``.

    For this type-2 loop it is the steady phase lag (rad) behind a frequency
    ramp of ``kappa`` rad/s^2; the steady frequency error itself decays to zero.
    """
    if not ki > 0:
        raise ConfigError(f"ki must be > 0, got {ki!r}")
    return kappa / (U * ki)


def ramp_phase_lag(kappa: float, ki: float, U: float = NORMALIZED_PEAK) -> float:
    """Steady phase lag with the sinusoidal detector: ``asin(kappa / (U ki))``."""
    x = steady_state_ramp_error(kappa, ki, U)
    if abs(x) >= 1.0:
        raise AnalysisError(f"ramp of {kappa} rad/s^2 exceeds the loop's hold-in limit")
    return math.asin(x)


def bode_data(gains: PiGains, tau: float, U: float, omega_min: float | None = None,
              omega_max: float | None = None, points: int = 400):
    """Log-spaced frequency grid with gain and phase, for tables and plots."""
    omega_min = omega_min or gains.ki / gains.kp / 10.0
    omega_max = omega_max or 10.0 / tau
    w = np.logspace(math.log10(omega_min), math.log10(omega_max), points)
    mag_db, phase = open_loop_response(gains, tau, U, w)
    return w, mag_db, phase


def write_bode_csv(path, omega, mag_db, phase_deg) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("omega", "mag_db", "phase_deg"))
        for row in zip(np.asarray(omega).tolist(), np.asarray(mag_db).tolist(),
                       np.asarray(phase_deg).tolist()):
            w.writerow([repr(v) for v in row])
