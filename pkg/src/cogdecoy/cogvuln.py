"""Belief updaters mapping technique signals to per-bias beliefs."""

import csv
import io
import json
import re
from dataclasses import dataclass, field, fields
from functools import lru_cache
from importlib import resources

from .errors import (
    CogDecoyError,
    SalienceConfigEmpty,
    SensorError,
    UnknownTechniquePrior,
    UnknownTechniqueRisk,
    ValidationError,
)
from .range_model import BIASES, BiasKind

INITIAL_BELIEF = 0.2
UPDATE_ORDER = (
    BiasKind.LossAversion,
    BiasKind.BaseRateNeglect,
    BiasKind.Confirmation,
    BiasKind.SunkCost,
    BiasKind.Availability,
)


@dataclass(frozen=True)
class BeliefState:
    b: dict
    step_index: int = 0

    @classmethod
    def initial(cls, value=INITIAL_BELIEF):
        return cls({k: value for k in BIASES}, 0)

    def as_tuple(self):
        return tuple(self.b[k] for k in BIASES)


def _default_tables():
    text = resources.files("cogdecoy").joinpath("data/sensor_config.json").read_text("utf-8")
    return json.loads(text)


@dataclass(frozen=True)
class SensorConfig:
    eta_loss: float = 0.1
    eta_base: float = 0.07
    decay: float = 0.02
    eta_avail: float = 0.1
    alpha_sunk: float = 0.1
    technique_priors: dict = field(default_factory=lambda: dict(_default_tables()["technique_priors"]))
    detection_risk: dict = field(default_factory=lambda: dict(_default_tables()["detection_risk"]))
    salience_keywords: tuple = ("admin", "root", "master")
    salience_threshold: float = 0.8

    def __post_init__(self):
        object.__setattr__(self, "salience_keywords", tuple(self.salience_keywords))
        for name in ("eta_loss", "eta_base", "decay", "eta_avail", "alpha_sunk", "salience_threshold"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name}={v} outside [0,1]")
        for table in ("technique_priors", "detection_risk"):
            for k, v in getattr(self, table).items():
                if not 0.0 <= v <= 1.0:
                    raise ValidationError(f"{table}[{k}]={v} outside [0,1]")

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown sensor config keys {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["salience_keywords"] = list(self.salience_keywords)
        return d


def load_sensor_config(path):
    with open(path, encoding="utf-8") as fh:
        return SensorConfig.from_json(fh.read())


@dataclass(frozen=True)
class SignalContext:
    signal: object
    available_risks: tuple = ()
    prev_signal: object = None
    tally_snapshot: dict = field(default_factory=dict)
    target_sunk_cost: float = 0.0
    expected_future_value: float = 0.0
    target_name: str = ""
    re_engaged: bool = False


# -- updaters ------------------------------------------------------------------

def _risk(technique_id, cfg):
    try:
        return cfg.detection_risk[technique_id]
    except KeyError:
        raise UnknownTechniqueRisk(technique_id) from None


def update_loss_aversion(b, ctx, cfg):
    chosen = _risk(ctx.signal.technique_id, cfg)
    if not ctx.available_risks:
        return b
    top = max(ctx.available_risks)
    if chosen < top:
        return min(1.0, b + (1.0 - b) * cfg.eta_loss)
    if chosen > top or sum(1 for r in ctx.available_risks if r == top) == 1:
        return max(0.0, b - b * cfg.eta_loss)
    return b


def update_base_rate_neglect(b, ctx, cfg):
    prev = ctx.prev_signal
    if prev is None or prev.succeeded is None:
        return b
    same = prev.technique_id == ctx.signal.technique_id
    if same == prev.succeeded:
        return min(1.0, b + (1.0 - b) * cfg.eta_base)
    return max(0.0, b - cfg.decay)


def update_confirmation(b, ctx, cfg):
    tid = ctx.signal.technique_id
    try:
        prior = cfg.technique_priors[tid]
    except KeyError:
        raise UnknownTechniquePrior(tid) from None
    successes, tries = ctx.tally_snapshot.get(tid, (0, 0))
    rate = successes / tries if tries else prior
    if rate < prior:
        return min(1.0, b + (1.0 - b) * (prior - rate))
    return max(0.0, b - cfg.decay)


def sunk_cost_ratio(efv, sunk):
    return min(1.0, -efv / (-efv + sunk + 1.0))


def update_sunk_cost(b, ctx, cfg):
    efv = ctx.expected_future_value
    if ctx.re_engaged and efv < 0:
        return min(1.0, cfg.alpha_sunk * sunk_cost_ratio(efv, ctx.target_sunk_cost) + b)
    return b


def update_availability(b, ctx, cfg):
    if not ctx.target_name:
        return b
    if lexical_salience(ctx.target_name, cfg.salience_keywords) >= cfg.salience_threshold:
        return min(1.0, b + (1.0 - b) * cfg.eta_avail)
    return b


UPDATERS = {
    BiasKind.LossAversion: update_loss_aversion,
    BiasKind.BaseRateNeglect: update_base_rate_neglect,
    BiasKind.Confirmation: update_confirmation,
    BiasKind.SunkCost: update_sunk_cost,
    BiasKind.Availability: update_availability,
}


# -- lexical salience ------------------------------------------------------------

def edit_distance(a, b):
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


_TOKENS = re.compile(r"[a-z0-9]+")


def lexical_salience(name, keywords):
    """Similarity of ``name`` to privileged-sounding keywords, in [0, 1]."""
    if not keywords:
        raise SalienceConfigEmpty("salience keyword list is empty")
    return _salience(name, tuple(keywords))


@lru_cache(maxsize=4096)
def _salience(name, keywords):
    lowered = name.lower()
    kws = [k.lower() for k in keywords]
    if any(k in lowered for k in kws):
        return 1.0
    best = 0.0
    for tok in _TOKENS.findall(lowered) or [lowered]:
        for k in kws:
            score = 1.0 - edit_distance(tok, k) / max(len(tok), len(k))
            best = max(best, score)
    return max(0.0, best)


# -- aggregation -----------------------------------------------------------------

def normalize_beliefs(s):
    b = s.b if isinstance(s, BeliefState) else s
    total = sum(b[k] for k in BIASES)
    if total == 0:
        return {k: 1.0 / len(BIASES) for k in BIASES}
    return {k: b[k] / total for k in BIASES}


def argmax_bias(beliefs):
    """First bias (in declaration order) holding the maximum value."""
    b = beliefs.b if isinstance(beliefs, BeliefState) else beliefs
    return max(BIASES, key=lambda k: (b[k], -BIASES.index(k)))


def apply_updates(state, ctx, cfg):
    b = dict(state.b)
    for kind in UPDATE_ORDER:
        b[kind] = UPDATERS[kind](b[kind], ctx, cfg)
    return BeliefState(b, state.step_index + 1)


def _basic_contexts(signals):
    """Contexts derivable from the signal stream alone."""
    tally = {}
    prev = None
    for sig in signals:
        yield SignalContext(signal=sig, prev_signal=prev, tally_snapshot=dict(tally))
        s, t = tally.get(sig.technique_id, (0, 0))
        tally[sig.technique_id] = (s + int(bool(sig.succeeded)), t + 1)
        prev = sig


def _contexts(signals, scenario_context):
    if scenario_context is None:
        yield from _basic_contexts(signals)
    elif hasattr(scenario_context, "context"):
        for sig in signals:
            yield scenario_context.context(sig)
    else:
        yield from scenario_context


def run_sensor(signals, scenario_context=None, cfg=None, initial=None):
    """Belief trajectory over ``signals``; element 0 is the starting state.

    ``scenario_context`` is either a stateful builder exposing
    ``context(signal)``, a sequence of prepared :class:`SignalContext`
    aligned with ``signals``, or None for stream-only contexts.
    """
    cfg = cfg or SensorConfig()
    state = initial or BeliefState.initial()
    trajectory = [state]
    contexts = _contexts(signals, scenario_context)
    for i, sig in enumerate(signals):
        try:
            ctx = next(contexts)
            state = apply_updates(state, ctx, cfg)
        except StopIteration:
            raise SensorError(i, "context stream exhausted") from None
        except CogDecoyError as exc:
            raise SensorError(i, exc) from exc
        trajectory.append(state)
    return trajectory


def trajectory_csv(trajectory, first_signal_index=0):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = [k.value for k in BIASES]
    w.writerow(["step", "signal_index", *names, *(f"norm_{n}" for n in names)])
    for state in trajectory:
        norm = normalize_beliefs(state)
        sig = "" if state.step_index == 0 else first_signal_index + state.step_index - 1
        w.writerow([state.step_index, sig,
                    *(repr(state.b[k]) for k in BIASES),
                    *(repr(norm[k]) for k in BIASES)])
    return buf.getvalue()
