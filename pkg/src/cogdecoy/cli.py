"""Command-line entry point: run, analyze, sense, evaluate, recommend.

Exit codes: 0 success, 1 validation error, 2 runtime error.
"""

import argparse
import json
import logging
import sys

from .cogvuln import SensorConfig, load_sensor_config, normalize_beliefs, run_sensor, trajectory_csv
from .context import ContextBuilder
from .errors import ValidationError
from .harness import (
    analyze_events,
    evaluate_sensor_accuracy,
    load_experiment_config,
    load_report,
    per_bias_accuracy,
    run_batch,
)
from .range_model import BIASES, load_canonical_scenario, load_scenario_file, scenario_from_dict
from .tom import (
    DEFAULT_HORIZON,
    DEFAULT_SAMPLES,
    hypotheses_from_beliefs,
    recommend_with_summaries,
    recommendation_report,
)
from .telemetry import read_event_log

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_run(args, out):
    config = load_experiment_config(args.config)
    report = run_batch(config)
    out.write(_dump({
        "output_dir": config.output_dir,
        "sessions_ok": report.header["sessions_ok"],
        "sessions_failed": report.header["sessions_failed"],
        "aggregates": report.aggregates,
    }))


def cmd_analyze(args, out):
    scenario = load_scenario_file(args.scenario)
    events = read_event_log(args.events)
    found = analyze_events(events, scenario)
    out.write(_dump({
        "progress_rank": found["progress_rank"],
        "on_path_proportion": found["on_path_proportion"],
        "alert_counts": found["alert_counts"],
        "trigger_times": found["trigger_times"],
        "ekm_counts": [c.to_dict() for c in found["ekm_counts"]],
        "risk_tolerance": found["risk_tolerance"],
        "cognitive_reflection": found["cognitive_reflection"],
        "n_signals": len(found["signals"]),
    }))


def cmd_sense(args, out):
    cfg = load_sensor_config(args.config) if args.config else SensorConfig()
    scenario = load_scenario_file(args.scenario) if args.scenario else load_canonical_scenario()
    events = read_event_log(args.events)
    signals = analyze_events(events, scenario)["signals"]
    traj = run_sensor(signals, ContextBuilder(scenario, events, cfg), cfg)
    out.write(trajectory_csv(traj))


def cmd_evaluate(args, out):
    acc, matrix = evaluate_sensor_accuracy(load_report(args.report))
    out.write(_dump({
        "accuracy": acc,
        "labels": [b.value for b in BIASES],
        "matrix": matrix,
        "per_bias": per_bias_accuracy(matrix),
    }))


def _load_candidates(path):
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid candidates JSON: {exc}") from None
    items = doc.get("triggers", doc) if isinstance(doc, dict) else doc
    if not isinstance(items, list) or not items:
        raise ValidationError("candidates must be a nonempty list of triggers")
    stub = {"hosts": [], "edges": [], "attack_path": [], "entry_host": "", "triggers": items}
    return list(scenario_from_dict(stub).triggers)


def mean_beliefs(report):
    """Renormalized mean of the final session beliefs in a report."""
    rows = [r["final_beliefs"] for r in report.sessions if r.get("error") is None]
    if not rows:
        raise ValidationError("report has no completed sessions")
    mean = {b: sum(r[b.value] for r in rows) / len(rows) for b in BIASES}
    return normalize_beliefs(mean)


def cmd_recommend(args, out):
    report = load_report(args.report)
    path = args.scenario or report.header.get("config", {}).get("scenario_path")
    scenario = load_scenario_file(path) if path else load_canonical_scenario()
    candidates = _load_candidates(args.candidates)
    installed = {c.trigger_id for c in candidates}
    base = scenario.with_triggers([t for t in scenario.triggers if t.trigger_id not in installed])
    hyps = hypotheses_from_beliefs(mean_beliefs(report))
    weights = (args.w_time, args.w_alert)
    ranking, summaries = recommend_with_summaries(
        base, hyps, candidates, weights,
        horizon_steps=args.horizon, samples=args.samples, seed=args.seed)
    out.write(recommendation_report(ranking, summaries, hyps, weights))


def build_parser():
    p = argparse.ArgumentParser(prog="cogdecoy", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a batch experiment from a JSON config")
    r.add_argument("config")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("analyze", help="behavioral metrics for one event log")
    a.add_argument("events")
    a.add_argument("--scenario", required=True)
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("sense", help="belief trajectory CSV for one event log")
    s.add_argument("events")
    s.add_argument("--config", help="sensor config JSON")
    s.add_argument("--scenario", help="scenario JSON (default: canonical)")
    s.set_defaults(func=cmd_sense)

    e = sub.add_parser("evaluate", help="sensor accuracy from a batch report")
    e.add_argument("report")
    e.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("recommend", help="rank candidate triggers against a report's beliefs")
    c.add_argument("report")
    c.add_argument("--candidates", required=True)
    c.add_argument("--scenario")
    c.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    c.add_argument("--horizon", type=int, default=DEFAULT_HORIZON)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--w-time", type=float, default=1.0)
    c.add_argument("--w-alert", type=float, default=1.0)
    c.set_defaults(func=cmd_recommend)
    return p


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args, out)
    except (ValidationError, ValueError, KeyError, TypeError, FileNotFoundError,
            IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
