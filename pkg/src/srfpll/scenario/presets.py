"""Named scenarios for the three experiment classes.

``load-step-50`` / ``load-step-150``: constant electrical frequency with five
stepwise load changes (amplitude between 0.5 and 1.5, a short speed dip at
each step), band-limited noise, sparse notch spikes and one 0.05 s data-loss
window. ``ramp-startup``: 5 s at 50 rad/s, then a 100 rad/s^2 ramp; metrics
are taken over 9 <= t < 10 s, the tail of the ramp.

Every preset exists with estimated feed-forward (bare name) and without it
(``-noff`` suffix).
"""

from __future__ import annotations

from dataclasses import replace

from ..errors import ConfigError
from ..estimator import EstimatorConfig
from ..pll import TunerInput
from ..signals import AmplitudeProfile, DisturbanceConfig, FrequencyProfile, LossWindow, Segment
from .config import DEFAULT_DT, ScenarioConfig, SignalSpec

LOAD_STEP_TIMES = (1.0, 2.0, 3.0, 4.0, 5.0)
LOAD_STEP_LEVELS = (1.0, 1.5, 0.5, 1.25, 0.75, 1.0)
LOSS_START = 3.5
LOSS_DURATION = 0.05


def _load_step(omega: float, omega_init: float) -> ScenarioConfig:
    segments = [Segment("constant", LOAD_STEP_TIMES[0], omega=omega)]
    for a, b in zip(LOAD_STEP_TIMES, LOAD_STEP_TIMES[1:] + (6.0,)):
        # torque step: 0.1 s deceleration by 2 % of omega, 0.2 s recovery
        dip = 0.02 * omega
        segments.append(Segment("ramp", 0.1, kappa=-dip / 0.1))
        segments.append(Segment("ramp", 0.2, kappa=dip / 0.2))
        segments.append(Segment("constant", (b - a) - 0.3))
    amplitude = AmplitudeProfile(tuple(zip((0.0,) + LOAD_STEP_TIMES, LOAD_STEP_LEVELS)))
    disturbance = DisturbanceConfig(
        noise_std=0.02,
        notch_rate=20.0,
        notch_amplitude=0.1,
        data_loss_windows=(LossWindow(LOSS_START, LOSS_DURATION),),
    )
    return ScenarioConfig(
        name=f"load-step-{omega:g}",
        signal=SignalSpec(FrequencyProfile(tuple(segments)), amplitude, disturbance),
        dt=DEFAULT_DT,
        duration=6.0,
        tuner=TunerInput(alpha=40.0, tau=DEFAULT_DT),
        estimator=EstimatorConfig(gamma=4000.0, omega_init=omega_init),
        feedforward="estimated",
        windows=((0.0, 6.0), (1.0, 6.0)),
    )


def ramp_scenario(kappa: float = 100.0, hold: float = 5.0, duration: float = 10.0,
                  omega0: float = 50.0, name: str | None = None) -> ScenarioConfig:
    """Hold ``omega0`` for ``hold`` s, then ramp at ``kappa`` until ``duration``."""
    frequency = FrequencyProfile((
        Segment("constant", hold, omega=omega0),
        Segment("ramp", duration - hold, kappa=kappa),
    ))
    return ScenarioConfig(
        name=name or f"ramp-{kappa:g}",
        signal=SignalSpec(frequency),
        dt=DEFAULT_DT,
        duration=duration,
        tuner=TunerInput(alpha=40.0, tau=DEFAULT_DT),
        estimator=EstimatorConfig(gamma=4000.0, omega_init=90.0),
        feedforward="estimated",
        windows=((duration - 1.0, duration),),
    )


_BASE = {
    "load-step-50": lambda: _load_step(50.0, 120.0),
    "load-step-150": lambda: _load_step(150.0, 200.0),
    "ramp-startup": lambda: ramp_scenario(name="ramp-startup"),
}

PRESET_NAMES = tuple(n for base in _BASE for n in (base, f"{base}-noff"))


def get_preset(name: str) -> ScenarioConfig:
    base, noff = (name[:-5], True) if name.endswith("-noff") else (name, False)
    if base not in _BASE:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    cfg = _BASE[base]()
    if noff:
        cfg = replace(cfg, name=name, feedforward="off")
    return cfg.validate()
