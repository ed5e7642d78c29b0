"""Declarative scenario description and its YAML form.

A scenario file is a nested mapping. Validation gathers every problem
before raising, so a bad file is reported in one go.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from ..errors import ConfigError
from ..estimator import EstimatorConfig
from ..pll import PiGains, TunerInput, tune_symmetrical_optimum
from ..signals import (
    EPS_N,
    REFERENCE_OFFSETS,
    AmplitudeProfile,
    DisturbanceConfig,
    FrequencyProfile,
    LossWindow,
    Segment,
)

log = logging.getLogger(__name__)

DEFAULT_DT = 0.00025
FEEDFORWARD_MODES = ("off", "estimated", "constant")
DEFAULT_COLUMNS = {"t": "t", "za": "za", "zb": "zb", "zc": "zc"}


def parse_feedforward(value) -> tuple[str, float]:
    """``"off"``, ``"estimated"`` or ``"constant:<rad/s>"`` -> (mode, value)."""
    text = str(value).strip().lower()
    if text in ("off", "estimated"):
        return text, 0.0
    if text.startswith("constant:"):
        try:
            w = float(text.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"feedforward constant is not a number: {value!r}") from None
        if not math.isfinite(w):
            raise ConfigError(f"feedforward constant must be finite: {value!r}")
        return "constant", w
    raise ConfigError(f"feedforward must be off, estimated or constant:<value>, got {value!r}")


@dataclass(frozen=True)
class SignalSpec:
    frequency: FrequencyProfile
    amplitude: AmplitudeProfile = AmplitudeProfile()
    disturbance: DisturbanceConfig = DisturbanceConfig()
    theta0: float = 0.0


@dataclass(frozen=True)
class IngestSpec:
    path: str
    columns: dict = field(default_factory=lambda: dict(DEFAULT_COLUMNS))
    gap_factor: float = 1.5


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    signal: SignalSpec | None = None
    ingest: IngestSpec | None = None
    dt: float = DEFAULT_DT
    duration: float | None = None
    seed: int = 0
    phase_reference: str = "sine"
    tuner: TunerInput | None = None
    gains: PiGains | None = None
    estimator: EstimatorConfig = EstimatorConfig()
    feedforward: str = "estimated"
    theta_star0: float = 0.0
    omega_star0: float = 0.0
    normalization_floor: float = EPS_N
    allow_dt_mismatch: bool = False
    windows: tuple[tuple[float, float], ...] = ()
    paper_faithful_metrics: bool = False
    figures: bool = True

    def problems(self) -> list[str]:
        out = []
        if not self.name:
            out.append("name must be a non-empty string")
        if (self.signal is None) == (self.ingest is None):
            out.append("exactly one of 'signal' and 'ingest' must be given")
        if not self.dt > 0:
            out.append(f"dt must be > 0, got {self.dt!r}")
        if self.signal is not None:
            if self.duration is None or not self.duration > self.dt:
                out.append(f"duration must exceed dt for synthetic signals, got {self.duration!r}")
            else:
                out.extend(self.signal.disturbance.problems(self.duration))
        if self.ingest is not None:
            if not self.ingest.gap_factor > 1:
                out.append(f"ingest gap_factor must be > 1, got {self.ingest.gap_factor!r}")
            missing = [k for k in DEFAULT_COLUMNS if k not in self.ingest.columns]
            if missing:
                out.append(f"ingest columns missing mappings for {missing}")
        if self.phase_reference not in REFERENCE_OFFSETS:
            out.append(f"phase_reference must be one of {sorted(REFERENCE_OFFSETS)}")
        if self.tuner is not None and self.gains is not None:
            out.append("give either 'tuner' or 'gains', not both")
        if self.tuner is not None:
            out.extend(self.tuner.problems())
            if (self.tuner.tau > 0 and abs(self.tuner.tau - self.dt) > 1e-12 * self.dt
                    and not self.allow_dt_mismatch):
                out.append(f"dt ({self.dt}) differs from tuner tau ({self.tuner.tau}); "
                           "set allow_dt_mismatch to run such a study")
        if self.gains is not None:
            out.extend(self.gains.problems(self.tau))
        try:
            mode, _ = parse_feedforward(self.feedforward)
        except ConfigError as exc:
            out.extend(exc.problems)
            mode = None
        if mode == "estimated":
            out.extend(self.estimator.problems(self.dt if self.dt > 0 else None))
        if not self.normalization_floor > 0:
            out.append("normalization_floor must be > 0")
        for w in self.windows:
            if len(w) != 2 or not w[1] > w[0]:
                out.append(f"metric window {w!r} must be [start, end) with end > start")
        return out

    def validate(self) -> ScenarioConfig:
        problems = self.problems()
        if problems:
            raise ConfigError(problems)
        if self.tuner is not None and self.allow_dt_mismatch and self.tuner.tau != self.dt:
            log.warning("scenario %s: dt=%g differs from tuner tau=%g", self.name, self.dt,
                        self.tuner.tau)
        return self

    @property
    def tau(self) -> float:
        return self.tuner.tau if self.tuner is not None else self.dt

    def resolved_gains(self) -> PiGains:
        if self.gains is not None:
            return self.gains
        gains, _ = tune_symmetrical_optimum(self.tuner or TunerInput(tau=self.dt))
        return gains

    def with_overrides(self, seed=None, feedforward=None, paper_faithful=None) -> ScenarioConfig:
        changes = {}
        if seed is not None:
            changes["seed"] = int(seed)
            if self.signal is not None:
                dist = replace(self.signal.disturbance, rng_seed=int(seed))
                changes["signal"] = replace(self.signal, disturbance=dist)
        if feedforward is not None:
            changes["feedforward"] = str(feedforward)
        if paper_faithful is not None:
            changes["paper_faithful_metrics"] = bool(paper_faithful)
        return replace(self, **changes)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        d = {"name": self.name, "seed": self.seed, "dt": self.dt}
        if self.duration is not None:
            d["duration"] = self.duration
        d["phase_reference"] = self.phase_reference
        if self.signal is not None:
            d["signal"] = _signal_to_dict(self.signal)
        if self.ingest is not None:
            d["ingest"] = {"path": self.ingest.path, "columns": dict(self.ingest.columns),
                           "gap_factor": self.ingest.gap_factor}
        if self.tuner is not None:
            d["tuner"] = {"alpha": self.tuner.alpha, "tau": self.tuner.tau, "U": self.tuner.U}
        if self.gains is not None:
            d["gains"] = {"kp": self.gains.kp, "ki": self.gains.ki}
        d["estimator"] = {"gamma": self.estimator.gamma,
                          "omega_init": self.estimator.omega_init,
                          "omega_floor": self.estimator.omega_floor}
        d["feedforward"] = self.feedforward
        d["pll"] = {"theta_star0": self.theta_star0, "omega_star0": self.omega_star0}
        d["normalization_floor"] = self.normalization_floor
        d["allow_dt_mismatch"] = self.allow_dt_mismatch
        d["metrics"] = {"windows": [list(w) for w in self.windows],
                        "paper_faithful": self.paper_faithful_metrics}
        d["output"] = {"figures": self.figures}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ScenarioConfig:
        problems: list[str] = []
        if not isinstance(d, dict):
            raise ConfigError("scenario file must contain a mapping at the top level")
        known = {"name", "seed", "dt", "duration", "phase_reference", "signal", "ingest",
                 "tuner", "gains", "estimator", "feedforward", "pll", "normalization_floor",
                 "allow_dt_mismatch", "metrics", "output"}
        problems.extend(f"unknown key {k!r}" for k in d if k not in known)

        def section(key, allowed):
            sub = d.get(key) or {}
            if not isinstance(sub, dict):
                problems.append(f"'{key}' must be a mapping")
                return {}
            problems.extend(f"unknown key '{key}.{k}'" for k in sub if k not in allowed)
            return sub

        kwargs = {}
        for key, conv in (("name", str), ("seed", int), ("dt", float), ("duration", float),
                          ("phase_reference", str), ("feedforward", str),
                          ("normalization_floor", float), ("allow_dt_mismatch", bool)):
            if key in d and d[key] is not None:
                try:
                    kwargs[key] = conv(d[key])
                except (TypeError, ValueError):
                    problems.append(f"{key}: cannot interpret {d[key]!r}")
        kwargs.setdefault("name", "")

        if "signal" in d:
            try:
                kwargs["signal"] = _signal_from_dict(section("signal", {
                    "frequency", "amplitude", "disturbance", "theta0", "omega0"}),
                    kwargs.get("seed", 0))
            except ConfigError as exc:
                problems.extend(exc.problems)
            except (TypeError, ValueError, KeyError) as exc:
                problems.append(f"signal: {exc}")
        if "ingest" in d:
            sub = section("ingest", {"path", "columns", "gap_factor"})
            if "path" not in sub:
                problems.append("ingest.path is required")
            else:
                columns = dict(DEFAULT_COLUMNS)
                columns.update(sub.get("columns") or {})
                kwargs["ingest"] = IngestSpec(str(sub["path"]), columns,
                                              float(sub.get("gap_factor", 1.5)))
        if "tuner" in d:
            sub = section("tuner", {"alpha", "tau", "U"})
            kwargs["tuner"] = TunerInput(**{k: float(v) for k, v in sub.items()})
        if "gains" in d:
            sub = section("gains", {"kp", "ki"})
            if set(sub) != {"kp", "ki"}:
                problems.append("gains needs both kp and ki")
            else:
                kwargs["gains"] = PiGains(float(sub["kp"]), float(sub["ki"]))
        if "estimator" in d:
            sub = section("estimator", {"gamma", "omega_init", "omega_floor"})
            kwargs["estimator"] = EstimatorConfig(**{k: float(v) for k, v in sub.items()})
        if "pll" in d:
            sub = section("pll", {"theta_star0", "omega_star0"})
            for k, v in sub.items():
                kwargs[k] = float(v)
        if "metrics" in d:
            sub = section("metrics", {"windows", "paper_faithful"})
            try:
                kwargs["windows"] = tuple((float(a), float(b)) for a, b in sub.get("windows", []))
            except (TypeError, ValueError):
                problems.append("metrics.windows must be a list of [start, end] pairs")
            kwargs["paper_faithful_metrics"] = bool(sub.get("paper_faithful", False))
        if "output" in d:
            sub = section("output", {"figures"})
            kwargs["figures"] = bool(sub.get("figures", True))

        if problems:
            raise ConfigError(problems)
        cfg = cls(**kwargs)
        return cfg.validate()

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)

    @classmethod
    def from_yaml(cls, text: str) -> ScenarioConfig:
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"YAML parse error: {exc}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> ScenarioConfig:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from None
        cfg = cls.from_yaml(text)
        if cfg.ingest is not None and not Path(cfg.ingest.path).is_absolute():
            # ingest paths are relative to the scenario file
            cfg = replace(cfg, ingest=replace(cfg.ingest,
                                              path=str(path.parent / cfg.ingest.path)))
        return cfg

    def save(self, path) -> None:
        Path(path).write_text(self.to_yaml())


def _signal_to_dict(sig: SignalSpec) -> dict:
    segs = []
    for s in sig.frequency.segments:
        item = {"kind": s.kind, "duration": s.duration}
        if s.omega is not None:
            item["omega"] = s.omega
        if s.kind == "ramp":
            item["kappa"] = s.kappa
        if s.phase:
            item["phase"] = s.phase
        segs.append(item)
    dist = sig.disturbance
    return {
        "theta0": sig.theta0,
        "omega0": sig.frequency.omega0,
        "frequency": segs,
        "amplitude": [[a, z] for a, z in sig.amplitude.segments],
        "disturbance": {
            "noise_std": dist.noise_std,
            "noise_corner": dist.noise_corner,
            "harmonic3_ratio": dist.harmonic3_ratio,
            "harmonic3_phase": dist.harmonic3_phase,
            "notch_rate": dist.notch_rate,
            "notch_amplitude": dist.notch_amplitude,
            "data_loss": [{"start": w.start, "duration": w.duration}
                          for w in dist.data_loss_windows],
        },
    }


def _signal_from_dict(d: dict, seed: int) -> SignalSpec:
    segs = []
    for item in d.get("frequency") or []:
        item = dict(item)
        segs.append(Segment(
            kind=str(item.pop("kind")),
            duration=float(item.pop("duration")),
            omega=None if item.get("omega") is None else float(item.pop("omega")),
            kappa=float(item.pop("kappa", 0.0)),
            phase=float(item.pop("phase", 0.0)),
        ))
        item.pop("omega", None)
        if item:
            raise ConfigError(f"unknown frequency segment keys {sorted(item)}")
    frequency = FrequencyProfile(tuple(segs), omega0=float(d.get("omega0", 0.0)))
    amp_raw = d.get("amplitude", [[0.0, 1.0]])
    amplitude = AmplitudeProfile(tuple((float(a), float(z)) for a, z in amp_raw))
    dd = dict(d.get("disturbance") or {})
    windows = tuple(LossWindow(float(w["start"]), float(w["duration"]))
                    for w in dd.pop("data_loss", []) or [])
    allowed = {"noise_std", "noise_corner", "harmonic3_ratio", "harmonic3_phase",
               "notch_rate", "notch_amplitude"}
    unknown = sorted(set(dd) - allowed)
    if unknown:
        raise ConfigError(f"unknown disturbance keys {unknown}")
    corner = dd.pop("noise_corner", None)
    disturbance = DisturbanceConfig(
        noise_corner=None if corner is None else float(corner),
        data_loss_windows=windows,
        rng_seed=seed,
        **{k: float(v) for k, v in dd.items()},
    )
    return SignalSpec(frequency, amplitude, disturbance, float(d.get("theta0", 0.0)))
