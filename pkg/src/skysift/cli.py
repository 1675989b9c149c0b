"""Command-line front door.

Global flags select the model config (JSON with keys m1, k1, m2, k2, q, T,
kf, prior1; built-in defaults otherwise), the seed, the output directory,
and the accuracy target.  Exit codes: 0 success, 2 configuration problem,
3 numerical-accuracy failure.
"""

import argparse
import json
import sys
from pathlib import Path

from .detector import (
    SufficientStatistics,
    detect_simplified,
    detector_from_scenario,
    fit_class_statistics,
    stream_update,
)
from .error_analysis import error_surface, total_error
from .errors import ConfigError, NumericalError
from .experiments import EXPERIMENT_NAMES, ExperimentConfig, run_experiment
from .model import Scenario
from .simulator import read_batch_csv, simulate_batch, write_batch_csv


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skysift",
        description="MAP classification of aerial objects from velocity-deviation series",
    )
    parser.add_argument("--config", type=Path, help="JSON model config")
    parser.add_argument("--seed", type=int, default=1, help="RNG seed (default 1)")
    parser.add_argument(
        "--out-dir", type=Path, default=Path("."), help="artifact directory"
    )
    parser.add_argument(
        "--accuracy", type=float, default=1e-6, help="error-probability accuracy target"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a labeled trial batch as CSV")
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--out", type=Path, help="output CSV (default <out-dir>/trials.csv)")

    p = sub.add_parser("detect", help="classify each trial of a CSV batch")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--out", type=Path, help="JSON-lines output (default stdout)")

    p = sub.add_parser("detect-stream", help="per-sample running decision for one trial")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--out", type=Path, help="JSON-lines output (default stdout)")

    p = sub.add_parser("fit", help="moment-match class statistics from labeled CSV")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--label", type=int, choices=(1, 2), help="fit only this class")
    p.add_argument("--out", type=Path, help="JSON output (default stdout)")

    p = sub.add_parser("error-total", help="exact total error probability (JSON)")
    p.add_argument("--out", type=Path, help="JSON output (default stdout)")

    p = sub.add_parser("error-surface", help="total error over parameter-ratio grid")
    p.add_argument("--gain-ratios", default="0.25,0.5,1,2,4")
    p.add_argument("--mass-ratios", default="0.25,0.5,1,2,4")
    p.add_argument("--out", type=Path, help="CSV output (default <out-dir>/surface.csv)")

    p = sub.add_parser("error-vs-horizon", help="exact error per horizon (CSV)")
    p.add_argument("--horizons", default="5,10,20,40")
    p.add_argument("--out", type=Path, help="CSV output (default stdout)")

    p = sub.add_parser("experiment", help="run a named study end to end")
    p.add_argument("name", choices=EXPERIMENT_NAMES)
    p.add_argument("--trials", type=int)
    return parser


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")


def _parse_floats(raw: str, flag: str) -> list:
    try:
        values = [float(v) for v in raw.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"{flag} expects comma-separated numbers, got {raw!r}") from exc
    if not values:
        raise ConfigError(f"{flag} must list at least one value")
    return values


def _cmd_simulate(scenario: Scenario, args) -> None:
    batch = simulate_batch(scenario, args.trials, args.seed)
    out = args.out or (args.out_dir / "trials.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_batch_csv(batch, out)


def _cmd_detect(scenario: Scenario, args) -> None:
    batch = read_batch_csv(args.input, period=scenario.sampling.period)
    detector = detector_from_scenario(scenario)
    lines = []
    for i, (_, series) in enumerate(batch.trials):
        report = detect_simplified(detector, SufficientStatistics.from_series(series.samples))
        lines.append(
            json.dumps(
                {
                    "trial": i,
                    "decision": report.decision,
                    "statistic": report.statistic,
                    "z": report.threshold,
                    "conditional_error": report.conditional_error,
                }
            )
        )
    _emit("\n".join(lines) + "\n", args.out)


def _cmd_detect_stream(scenario: Scenario, args) -> None:
    batch = read_batch_csv(args.input, period=scenario.sampling.period)
    if not (0 <= args.trial < len(batch.trials)):
        raise ConfigError(
            f"trial {args.trial} out of range; batch has {len(batch.trials)} trials"
        )
    detector = detector_from_scenario(scenario)
    _, series = batch.trials[args.trial]
    lines = []
    state = None
    for k, y in enumerate(series.samples):
        state = stream_update(state, float(y))
        report = detect_simplified(detector, state)
        lines.append(
            json.dumps(
                {
                    "trial": args.trial,
                    "k": k,
                    "y": float(y),
                    "decision": report.decision,
                    "statistic": report.statistic,
                    "z": report.threshold,
                    "conditional_error": report.conditional_error,
                }
            )
        )
    _emit("\n".join(lines) + "\n", args.out)


def _cmd_fit(scenario: Scenario, args) -> None:
    batch = read_batch_csv(args.input, period=scenario.sampling.period)
    labels = sorted({label for label, _ in batch.trials})
    if args.label is not None:
        if args.label not in labels:
            raise ConfigError(f"no trials with label {args.label} in {args.input}")
        labels = [args.label]
    fitted = {}
    for label in labels:
        series_set = [series for lab, series in batch.trials if lab == label]
        stats = fit_class_statistics(series_set)
        fitted[str(label)] = {"alpha": stats.alpha, "rho": stats.rho}
    _emit(json.dumps(fitted, indent=2) + "\n", args.out)


def _cmd_error_total(scenario: Scenario, args) -> None:
    report = total_error(scenario, args.accuracy)
    _emit(json.dumps(report.to_dict(), indent=2) + "\n", args.out)


def _cmd_error_surface(scenario: Scenario, args) -> None:
    surface = error_surface(
        scenario,
        _parse_floats(args.gain_ratios, "--gain-ratios"),
        _parse_floats(args.mass_ratios, "--mass-ratios"),
        args.accuracy,
    )
    out = args.out or (args.out_dir / "surface.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    surface.write_csv(out)


def _cmd_error_vs_horizon(scenario: Scenario, args) -> None:
    horizons = [int(v) for v in _parse_floats(args.horizons, "--horizons")]
    if any(k < 1 for k in horizons):
        raise ConfigError("--horizons values must be >= 1")
    base = scenario.to_dict()
    lines = ["kf,total_error"]
    for kf in horizons:
        report = total_error(Scenario.from_dict(dict(base, kf=kf)), args.accuracy)
        lines.append(f"{kf},{report.total_error!r}")
    _emit("\n".join(lines) + "\n", args.out)


def _cmd_experiment(scenario: Scenario, args) -> None:
    config = ExperimentConfig(
        scenario=scenario,
        name=args.name,
        out_dir=args.out_dir,
        seed=args.seed,
        accuracy=args.accuracy,
        n_trials=args.trials,
    )
    run_experiment(config)


_COMMANDS = {
    "simulate": _cmd_simulate,
    "detect": _cmd_detect,
    "detect-stream": _cmd_detect_stream,
    "fit": _cmd_fit,
    "error-total": _cmd_error_total,
    "error-surface": _cmd_error_surface,
    "error-vs-horizon": _cmd_error_vs_horizon,
    "experiment": _cmd_experiment,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        scenario = (
            Scenario.from_json(args.config) if args.config else Scenario.default()
        )
        _COMMANDS[args.command](scenario, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
