"""Batch experiment runner: simulate, sense, summarize, report."""

import json
import os
import statistics
from dataclasses import dataclass, field

from .agent import DEFAULT_BUDGET, ActionModel, BiasProfile, default_action_model
from .cogvuln import (
    SensorConfig,
    argmax_bias,
    load_sensor_config,
    normalize_beliefs,
    run_sensor,
    trajectory_csv,
)
from .context import ContextBuilder
from .errors import ConfigError, NoGroundTruth, ValidationError
from .mats import default_rules, map_events
from .metrics import (
    Condition,
    Division,
    SessionSummary,
    alert_counts,
    kruskal_wallis,
    mann_whitney_u,
    on_path_proportion,
    progress_rank,
    standardized_effect,
    summaries_csv,
    trigger_interaction_time,
)
from .range_model import BIASES, BiasKind, load_scenario_file
from .rule_sensors import apply_ekm, cognitive_reflection_score, ekm_rule_for, risk_tolerance_score
from .seeding import DERIVATION, derive_seed
from .simulation import simulate_session
from .telemetry import attribute_commands, commands_of, write_event_log

REPORT_VERSION = 1
FOCUS_HOST = "it-ubuntu-1"
GAP_THRESHOLD = 5.0
SURVEILLANCE_HORIZON = 60.0


@dataclass
class ExperimentConfig:
    scenario_path: str
    n_sessions_per_condition: int
    bias_cohort: list  # (BiasProfile, count)
    seed: int
    output_dir: str
    sensor_config_path: str | None = None
    conditions: tuple = (Condition.trigger, Condition.control)
    budget: float = DEFAULT_BUDGET
    action_model_path: str | None = None

    def __post_init__(self):
        self.conditions = tuple(Condition(c) for c in self.conditions)
        self.bias_cohort = [(p if isinstance(p, BiasProfile) else BiasProfile.from_dict(p), int(n))
                            for p, n in self.bias_cohort]
        if self.n_sessions_per_condition < 1:
            raise ValidationError("n_sessions_per_condition must be >= 1")
        if not self.bias_cohort:
            raise ValidationError("bias_cohort must be nonempty")
        if any(n < 1 for _, n in self.bias_cohort):
            raise ValidationError("cohort counts must be >= 1")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValidationError("seed must be an unsigned integer")
        if not self.conditions:
            raise ValidationError("conditions must be nonempty")

    def cohort(self):
        """Expanded profile list; sessions cycle through it by index."""
        return [p for p, n in self.bias_cohort for _ in range(n)]

    def to_dict(self):
        return {
            "scenario_path": self.scenario_path,
            "n_sessions_per_condition": self.n_sessions_per_condition,
            "bias_cohort": [{"profile": p.to_dict(), "count": n} for p, n in self.bias_cohort],
            "seed": self.seed,
            "sensor_config_path": self.sensor_config_path,
            "conditions": [c.value for c in self.conditions],
            "budget": self.budget,
            "action_model_path": self.action_model_path,
        }

    @classmethod
    def from_dict(cls, d, base_dir=""):
        def path(key):
            v = d.get(key)
            return None if v is None else os.path.join(base_dir, v)

        for key in ("scenario_path", "n_sessions_per_condition", "bias_cohort", "seed", "output_dir"):
            if key not in d:
                raise ConfigError(f"$.{key}", "missing")
        cohort = []
        for i, item in enumerate(d["bias_cohort"]):
            if "profile" not in item or "count" not in item:
                raise ConfigError(f"$.bias_cohort[{i}]", "expected {profile, count}")
            prof = item["profile"]
            if isinstance(prof, str):
                prof = BiasProfile.zero() if prof == "zero" else BiasProfile.archetype(BiasKind(prof))
            cohort.append((prof, item["count"]))
        return cls(
            scenario_path=path("scenario_path"),
            n_sessions_per_condition=int(d["n_sessions_per_condition"]),
            bias_cohort=cohort,
            seed=int(d["seed"]),
            output_dir=path("output_dir"),
            sensor_config_path=path("sensor_config_path"),
            conditions=tuple(d.get("conditions", ("trigger", "control"))),
            budget=float(d.get("budget", DEFAULT_BUDGET)),
            action_model_path=path("action_model_path"),
        )


def load_experiment_config(path):
    """Read a JSON config; relative paths resolve against its directory."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("$", f"invalid JSON: {exc}") from None
    try:
        return ExperimentConfig.from_dict(doc, os.path.dirname(os.path.abspath(path)))
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ConfigError("$", str(exc)) from None


@dataclass
class ExperimentReport:
    header: dict
    sessions: list  # per-session records (dicts)
    aggregates: dict = field(default_factory=dict)
    confusion: dict = field(default_factory=dict)
    tests: dict = field(default_factory=dict)

    def to_dict(self):
        return {"header": self.header, "sessions": self.sessions, "aggregates": self.aggregates,
                "confusion": self.confusion, "tests": self.tests}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict) or "sessions" not in d:
            raise ValidationError("report must be an object with a sessions list")
        return cls(d.get("header", {}), d["sessions"], d.get("aggregates", {}),
                   d.get("confusion", {}), d.get("tests", {}))


def load_report(path):
    with open(path, encoding="utf-8") as fh:
        try:
            return ExperimentReport.from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid report JSON: {exc}") from None


# -- one session ------------------------------------------------------------------

def analyze_events(events, scenario, installed=None, gap_threshold=GAP_THRESHOLD):
    """Behavioral metrics and rule-sensor outputs for one event log.

    ``installed`` names the triggers deployed in the session; interaction
    time for the others is reported as zero.
    """
    installed = {t.trigger_id for t in scenario.triggers} if installed is None else set(installed)
    commands = commands_of(events)
    attributed = attribute_commands(commands, scenario.host_table(), scenario.entry_host)
    signals = map_events(events, default_rules())
    times = {t.trigger_id: (trigger_interaction_time(events, t, gap_threshold)
                            if t.trigger_id in installed else 0.0)
             for t in scenario.triggers}
    return {
        "attributed": attributed,
        "signals": signals,
        "progress_rank": progress_rank(attributed, scenario, signals),
        "on_path_proportion": on_path_proportion(attributed, scenario),
        "alert_counts": alert_counts(events),
        "trigger_times": times,
        "ekm_counts": [apply_ekm(events, ekm_rule_for(t)) for t in scenario.triggers],
        "risk_tolerance": risk_tolerance_score(events, SURVEILLANCE_HORIZON),
        "cognitive_reflection": cognitive_reflection_score(commands),
    }


def _session(index, condition, profile, seed, scenario, cfg, model, budget):
    sid = f"{condition.value}-{index:04d}"
    live = scenario if condition is Condition.trigger else scenario.without_triggers()
    trace = simulate_session(live, profile, seed, budget=budget, model=model, actor=sid)
    events = trace.events
    found = analyze_events(events, scenario, installed=[t.trigger_id for t in live.triggers])
    signals = found["signals"]
    traj = run_sensor(signals, ContextBuilder(live, events, cfg, model, budget), cfg)
    final = normalize_beliefs(traj[-1])
    summary = SessionSummary(
        session_id=sid,
        condition=condition,
        division=Division.open,
        progress_rank=found["progress_rank"],
        on_path_proportion=found["on_path_proportion"],
        alert_counts=found["alert_counts"],
        trigger_times=found["trigger_times"],
        ekm_counts=found["ekm_counts"],
    )
    dominant = profile.dominant()
    record = {
        "session_id": sid,
        "index": index,
        "seed": seed,
        "error": None,
        "profile": profile.to_dict(),
        "dominant_bias": dominant.value if dominant else None,
        "inferred_bias": argmax_bias(final).value,
        "final_beliefs": {k.value: final[k] for k in BIASES},
        "n_events": len(events),
        "n_signals": len(signals),
        "n_actions": len(trace.actions),
        "risk_tolerance": found["risk_tolerance"],
        "cognitive_reflection": found["cognitive_reflection"],
        "summary": summary.to_dict(),
    }
    files = {"events.jsonl": write_event_log(events), "beliefs.csv": trajectory_csv(traj)}
    return record, summary, files


# -- aggregation ------------------------------------------------------------------

def _mean(xs):
    return statistics.fmean(xs) if xs else None


def _median(xs):
    return statistics.median(xs) if xs else None


def _aggregates(records, trigger_ids):
    out = {}
    for cond in Condition:
        rows = [r["summary"] for r in records if r["error"] is None and r["summary"]["condition"] == cond.value]
        if not rows:
            continue
        out[cond.value] = {
            "n": len(rows),
            "mean_on_path_proportion": _mean([r["on_path_proportion"] for r in rows]),
            "median_progress_rank": _median([r["progress_rank"] for r in rows]),
            "mean_progress_rank": _mean([r["progress_rank"] for r in rows]),
            "mean_alerts_total": _mean([sum(r["alert_counts"].values()) for r in rows]),
            f"mean_alerts_{FOCUS_HOST}": _mean([r["alert_counts"].get(FOCUS_HOST, 0) for r in rows]),
            "mean_trigger_times": {t: _mean([r["trigger_times"].get(t, 0.0) for r in rows])
                                   for t in trigger_ids},
        }
    return out


def confusion_matrix(records):
    """Ground-truth dominant bias (rows) by inferred argmax (columns)."""
    names = [b.value for b in BIASES]
    rows = {a: {b: 0 for b in names} for a in names}
    for r in records:
        if r.get("error") is None and r.get("dominant_bias") is not None:
            rows[r["dominant_bias"]][r["inferred_bias"]] += 1
    return {"labels": names, "rows": rows}


def _column(records, cond, key):
    vals = []
    for r in records:
        if r["error"] is None and r["summary"]["condition"] == cond:
            vals.append(key(r["summary"]))
    return vals


def _tests(records):
    measures = {
        "on_path_proportion": lambda s: s["on_path_proportion"],
        "progress_rank": lambda s: s["progress_rank"],
        f"alerts_{FOCUS_HOST}": lambda s: s["alert_counts"].get(FOCUS_HOST, 0),
    }
    out = {}
    for name, key in measures.items():
        t = _column(records, "trigger", key)
        c = _column(records, "control", key)
        if not t or not c:
            continue
        u, p = mann_whitney_u(t, c)
        h, kp = kruskal_wallis([t, c])
        out[name] = {"mann_whitney": {"U_trigger": u, "p": p},
                     "kruskal_wallis": {"H": h, "p": kp}}
        if len(t) + len(c) >= 3:
            coef, tstat, tp = standardized_effect(t, c)
            out[name]["standardized"] = {"coefficient": coef, "t": tstat, "p": tp}
    return out


# -- batch ------------------------------------------------------------------------------

def _write(path, text):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def run_batch(config):
    """Run every condition's sessions and write all artifacts."""
    scenario = load_scenario_file(config.scenario_path)
    cfg = load_sensor_config(config.sensor_config_path) if config.sensor_config_path else SensorConfig()
    if config.action_model_path:
        with open(config.action_model_path, encoding="utf-8") as fh:
            model = ActionModel.from_dict(json.load(fh))
    else:
        model = default_action_model()
    cohort = config.cohort()
    records, summaries = [], []
    for condition in config.conditions:
        for i in range(config.n_sessions_per_condition):
            profile = cohort[i % len(cohort)]
            seed = derive_seed(config.seed, i)
            try:
                record, summary, files = _session(i, condition, profile, seed, scenario, cfg,
                                                  model, config.budget)
            except Exception as exc:  # isolate the failure to this session
                dominant = profile.dominant()
                records.append({
                    "session_id": f"{condition.value}-{i:04d}", "index": i, "seed": seed,
                    "error": f"{type(exc).__name__}: {exc}", "profile": profile.to_dict(),
                    "dominant_bias": dominant.value if dominant else None,
                    "summary": {"condition": condition.value},
                })
                continue
            records.append(record)
            summaries.append(summary)
            for name, text in files.items():
                _write(os.path.join(config.output_dir, "sessions", record["session_id"], name), text)

    trigger_ids = [t.trigger_id for t in scenario.triggers]
    report = ExperimentReport(
        header={
            "version": REPORT_VERSION,
            "seed": config.seed,
            "seed_derivation": DERIVATION,
            "config": config.to_dict(),
            "sessions_ok": len(summaries),
            "sessions_failed": len(records) - len(summaries),
        },
        sessions=records,
        aggregates=_aggregates(records, trigger_ids),
        confusion=confusion_matrix(records),
        tests=_tests(records),
    )
    _write(os.path.join(config.output_dir, "report.json"), report.to_json())
    _write(os.path.join(config.output_dir, "summary.csv"), summaries_csv(summaries, FOCUS_HOST))
    return report


def evaluate_sensor_accuracy(report):
    """Fraction of sessions whose inferred argmax equals the dominant bias.

    Sessions without a unique dominant bias, or that failed, are excluded.
    Returns (accuracy, matrix) with the matrix as nested lists in bias order.
    """
    records = report.sessions if isinstance(report, ExperimentReport) else report["sessions"]
    eligible = [r for r in records if r.get("error") is None and r.get("dominant_bias")]
    if not eligible:
        raise NoGroundTruth("no session has a unique dominant bias")
    conf = confusion_matrix(eligible)
    names = conf["labels"]
    matrix = [[conf["rows"][a][b] for b in names] for a in names]
    correct = sum(matrix[i][i] for i in range(len(names)))
    return correct / len(eligible), matrix


def per_bias_accuracy(matrix):
    out = {}
    for i, b in enumerate(BIASES):
        n = sum(matrix[i])
        out[b.value] = matrix[i][i] / n if n else None
    return out
