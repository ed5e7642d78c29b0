from .config import IngestSpec, ScenarioConfig, SignalSpec, parse_feedforward
from .ingest import ingest_csv, loss_windows
from .presets import PRESET_NAMES, get_preset, ramp_scenario
from .runner import RunResult, run_scenario, simulate, source_signal

__all__ = [
    "IngestSpec", "ScenarioConfig", "SignalSpec", "parse_feedforward", "ingest_csv",
    "loss_windows", "PRESET_NAMES", "get_preset", "ramp_scenario", "RunResult",
    "run_scenario", "simulate", "source_signal",
]
