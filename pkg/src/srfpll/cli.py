"""Command-line entry point: ``srfpll {tune,bode,simulate,metrics,ingest-run,presets}``.

Exit codes: 0 success, 2 configuration error, 3 ingest error, 4 numerical
or analysis error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError, SrfPllError
from .metrics import RunTrace, summarize, write_metrics_json
from .pll import PiGains, TunerInput, bode_data, phase_margin, tune_symmetrical_optimum
from .pll import write_bode_csv
from .scenario import PRESET_NAMES, IngestSpec, ScenarioConfig, get_preset, run_scenario
from .scenario.config import DEFAULT_COLUMNS
from .signals import NORMALIZED_PEAK

log = logging.getLogger("srfpll")


def _common(p):
    p.add_argument("--error-json", action="store_true",
                   help="report failures as a JSON object on stderr")
    p.add_argument("-v", "--verbose", action="store_true")


def _tuner_args(p):
    p.add_argument("--alpha", type=float, default=40.0)
    p.add_argument("--tau", type=float, default=0.00025)
    p.add_argument("--U", type=float, default=NORMALIZED_PEAK, help="detector gain")


def _run_args(p):
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--ff", help="feed-forward override: off | estimated | constant:<rad/s>")
    p.add_argument("--paper-faithful-metrics", action="store_true",
                   help="use the raw (unwrapped) phase difference in the phase metrics")
    p.add_argument("--no-figures", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="srfpll", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tune", help="symmetrical-optimum PI gains, crossover and phase margin")
    _tuner_args(p)
    p.add_argument("--json", action="store_true")
    _common(p)

    p = sub.add_parser("bode", help="open-loop gain/phase table as CSV")
    _tuner_args(p)
    p.add_argument("--kp", type=float)
    p.add_argument("--ki", type=float)
    p.add_argument("--omega-min", type=float)
    p.add_argument("--omega-max", type=float)
    p.add_argument("--points", type=int, default=400)
    p.add_argument("--out", type=Path, help="CSV path (default: stdout)")
    p.add_argument("--figure", type=Path, help="also render the Bode plot to this file")
    _common(p)

    p = sub.add_parser("simulate", help="run a scenario file or preset")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path)
    src.add_argument("--preset", choices=PRESET_NAMES)
    _run_args(p)
    _common(p)

    p = sub.add_parser("metrics", help="recompute phase and waveform metrics from a trace CSV")
    p.add_argument("--trace", type=Path, required=True)
    p.add_argument("--window", type=float, nargs=2, action="append", metavar=("START", "END"))
    p.add_argument("--scenario", default="trace")
    p.add_argument("--paper-faithful-metrics", action="store_true")
    p.add_argument("--out", type=Path, help="metrics JSON path (default: stdout)")
    _common(p)

    p = sub.add_parser("ingest-run", help="run the loop on recorded three-phase data")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--config", type=Path, help="scenario file supplying loop settings")
    p.add_argument("--columns", default="",
                   help="role=header pairs, e.g. t=time,za=ia,zb=ib,zc=ic,theta=angle")
    p.add_argument("--gap-factor", type=float, default=1.5)
    _run_args(p)
    _common(p)

    p = sub.add_parser("presets", help="list presets or print one as a scenario file")
    p.add_argument("--dump", choices=PRESET_NAMES)
    _common(p)
    return parser


def _parse_columns(text: str) -> dict:
    columns = dict(DEFAULT_COLUMNS)
    for item in filter(None, (s.strip() for s in text.split(","))):
        role, sep, name = item.partition("=")
        if not sep or role not in ("t", "za", "zb", "zc", "theta", "omega", "valid"):
            raise ConfigError(f"bad column mapping {item!r}")
        columns[role] = name
    return columns


def _report_run(result, out: Path, figures: bool) -> None:
    paths = result.write(out, figures=figures)
    payload = {
        "scenario": result.config.name,
        "kp": result.gains.kp,
        "ki": result.gains.ki,
        "trace": str(paths["trace"]),
        "metrics": [s.to_json_dict() for s in result.summaries],
    }
    if "figures" in paths:
        payload["figures"] = [str(p) for p in paths["figures"]]
    print(json.dumps(payload, indent=2, allow_nan=False))


def cmd_tune(args) -> None:
    inp = TunerInput(args.alpha, args.tau, args.U)
    gains, wc = tune_symmetrical_optimum(inp)
    phi_m, wc_found = phase_margin(gains, inp.tau, inp.U)
    out = {
        "alpha": inp.alpha, "tau": inp.tau, "U": inp.U,
        "kp": gains.kp, "ki": gains.ki,
        "omega_c": wc, "omega_c_found": wc_found,
        "phase_margin_deg": phi_m,
        "phase_margin_closed_form_deg": math.degrees(math.atan(inp.alpha) - math.atan(1 / inp.alpha)),
    }
    if args.json:
        print(json.dumps(out, indent=2))
    else:
        for k, v in out.items():
            print(f"{k:>28s}  {v:.6g}")


def cmd_bode(args) -> None:
    if (args.kp is None) != (args.ki is None):
        raise ConfigError("--kp and --ki must be given together")
    if args.kp is not None:
        gains = PiGains(args.kp, args.ki)
        problems = gains.problems()
        if problems:
            raise ConfigError(problems)
    else:
        gains, _ = tune_symmetrical_optimum(TunerInput(args.alpha, args.tau, args.U))
    w, mag, phase = bode_data(gains, args.tau, args.U, args.omega_min, args.omega_max,
                              args.points)
    if args.out:
        write_bode_csv(args.out, w, mag, phase)
    else:
        print("omega,mag_db,phase_deg")
        for row in zip(w.tolist(), mag.tolist(), phase.tolist()):
            print(",".join(repr(v) for v in row))
    if args.figure:
        from .plotting import plot_bode

        phi_m, wc = phase_margin(gains, args.tau, args.U)
        plot_bode(w, mag, phase, args.figure, omega_c=wc, phi_m=phi_m,
                  corners=(gains.ki / gains.kp, 1.0 / args.tau))


def cmd_simulate(args) -> None:
    cfg = ScenarioConfig.load(args.config) if args.config else get_preset(args.preset)
    cfg = cfg.with_overrides(seed=args.seed, feedforward=args.ff,
                             paper_faithful=args.paper_faithful_metrics or None).validate()
    _report_run(run_scenario(cfg), args.out, cfg.figures and not args.no_figures)


def cmd_metrics(args) -> None:
    trace = RunTrace.from_csv(args.trace)
    windows = [tuple(w) for w in args.window] if args.window else [None]
    summaries = [summarize(trace, args.scenario, w, wrapped=not args.paper_faithful_metrics)
                 for w in windows]
    if args.out:
        write_metrics_json(args.out, summaries)
    print(json.dumps([s.to_json_dict() for s in summaries], indent=2, allow_nan=False))


def cmd_ingest_run(args) -> None:
    ingest = IngestSpec(str(args.input), _parse_columns(args.columns), args.gap_factor)
    if args.config:
        cfg = ScenarioConfig.load(args.config)
        cfg = replace(cfg, signal=None, ingest=ingest, duration=None)
    else:
        cfg = ScenarioConfig(name=args.input.stem, ingest=ingest)
    cfg = cfg.with_overrides(seed=args.seed, feedforward=args.ff,
                             paper_faithful=args.paper_faithful_metrics or None).validate()
    _report_run(run_scenario(cfg), args.out, cfg.figures and not args.no_figures)


def cmd_presets(args) -> None:
    if args.dump:
        sys.stdout.write(get_preset(args.dump).to_yaml())
    else:
        print("\n".join(PRESET_NAMES))


COMMANDS = {
    "tune": cmd_tune,
    "bode": cmd_bode,
    "simulate": cmd_simulate,
    "metrics": cmd_metrics,
    "ingest-run": cmd_ingest_run,
    "presets": cmd_presets,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except SrfPllError as exc:
        if args.error_json:
            payload = {"error": type(exc).__name__, "message": str(exc),
                       "exit_code": exc.exit_code}
            if isinstance(exc, ConfigError):
                payload["problems"] = exc.problems
            if getattr(exc, "row", None) is not None:
                payload["row"] = exc.row
            print(json.dumps(payload), file=sys.stderr)
        else:
            print(f"srfpll: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
