"""Theory-of-mind defender: bias hypotheses, paired rollouts, trigger ranking."""

import json
import math
from dataclasses import dataclass, field

from .agent import DEFAULT_BUDGET, BiasProfile
from .errors import HorizonEmpty, NotNormalized, ValidationError
from .range_model import BIASES, BiasKind
from .seeding import derive_seed
from .simulation import simulate_session
from .telemetry import EventKind

DEFAULT_HORIZON = 60
DEFAULT_SAMPLES = 8


@dataclass(frozen=True)
class AttackerHypothesis:
    bias: BiasKind
    profile: BiasProfile
    weight: float

    def __post_init__(self):
        if not 0.0 <= self.weight <= 1.0:
            raise ValidationError(f"hypothesis weight {self.weight} outside [0,1]")


@dataclass(frozen=True)
class Outcome:
    interaction_probability: float = 0.0
    time_diverted: float = 0.0
    alert_delta: float = 0.0

    def to_dict(self):
        return {
            "expected_interaction_probability": self.interaction_probability,
            "expected_time_diverted": self.time_diverted,
            "expected_alert_delta": self.alert_delta,
        }


@dataclass(frozen=True)
class PredictionSummary:
    trigger_id: str
    expected_interaction_probability: float
    expected_time_diverted: float
    expected_alert_delta: float
    sample_count: int
    per_hypothesis: dict = field(default_factory=dict)  # BiasKind -> (weight, Outcome)

    def __post_init__(self):
        if not 0.0 <= self.expected_interaction_probability <= 1.0:
            raise ValidationError("interaction probability outside [0,1]")
        if self.sample_count <= 0:
            raise ValidationError("sample_count must be > 0")

    def to_dict(self):
        return {
            "trigger_id": self.trigger_id,
            "expected_interaction_probability": self.expected_interaction_probability,
            "expected_time_diverted": self.expected_time_diverted,
            "expected_alert_delta": self.expected_alert_delta,
            "sample_count": self.sample_count,
            "per_hypothesis": {
                b.value: {"weight": w, **o.to_dict()}
                for b, (w, o) in self.per_hypothesis.items()
            },
        }


def hypotheses_from_beliefs(normalized):
    """One archetype hypothesis per bias, weighted by the normalized belief."""
    weights = {BiasKind(k): float(v) for k, v in dict(normalized).items()}
    if set(weights) != set(BIASES):
        raise NotNormalized("beliefs must cover all five biases")
    if any(v < 0 for v in weights.values()) or abs(sum(weights.values()) - 1.0) > 1e-9:
        raise NotNormalized(f"beliefs sum to {sum(weights.values())!r}, not 1")
    return [AttackerHypothesis(b, BiasProfile.archetype(b), weights[b]) for b in BIASES]


def _alerts(events):
    return sum(1 for e in events if e.kind is EventKind.alert)


def _paired_sample(base, treated, profile, trigger_id, seed, horizon, state, budget, model):
    kw = dict(budget=budget, model=model, max_steps=horizon, state=state)
    without = simulate_session(base, profile, seed, **kw)
    with_ = simulate_session(treated, profile, seed, **kw)
    touched = [a for _, a, _ in with_.actions if a.trigger_id == trigger_id]
    return (float(bool(touched)), sum(a.time_cost for a in touched),
            float(_alerts(with_.events) - _alerts(without.events)))


def counterfactual_rollout(scenario, hyps, candidate, horizon_steps=DEFAULT_HORIZON,
                           samples=DEFAULT_SAMPLES, seed=0, state=None,
                           budget=DEFAULT_BUDGET, model=None):
    """Mixture statistics of paired rollouts with and without ``candidate``.

    Every hypothesis uses the same per-sample seeds, and each seed drives
    both the baseline and the treated run, so summaries are exactly linear
    in the hypothesis weights.
    """
    if horizon_steps <= 0:
        raise HorizonEmpty("horizon_steps must be > 0")
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    if not scenario.has_host(candidate.host_id):
        raise ValidationError(f"candidate host {candidate.host_id!r} not in scenario")
    others = [t for t in scenario.triggers if t.trigger_id != candidate.trigger_id]
    base = scenario.with_triggers(others)
    treated = scenario.with_triggers([*others, candidate])
    seeds = [derive_seed(seed, i) for i in range(samples)]

    mix = [0.0, 0.0, 0.0]
    per = {}
    for h in hyps:
        if h.weight == 0.0:
            per[h.bias] = (0.0, Outcome())
            continue
        acc = [0.0, 0.0, 0.0]
        for s in seeds:
            r = _paired_sample(base, treated, h.profile, candidate.trigger_id, s,
                               horizon_steps, state, budget, model)
            for j in range(3):
                acc[j] += r[j]
        mean = [x / samples for x in acc]
        per[h.bias] = (h.weight, Outcome(*mean))
        for j in range(3):
            mix[j] += h.weight * mean[j]
    return PredictionSummary(candidate.trigger_id, min(1.0, max(0.0, mix[0])), mix[1], mix[2],
                             samples, per)


def score(summary, weights):
    w_time, w_alert = weights
    return w_time * summary.expected_time_diverted + w_alert * summary.expected_alert_delta


def rank_candidates(summaries, weights=(1.0, 1.0)):
    """(trigger_id, score) by descending score, ties by trigger id."""
    scored = [(s.trigger_id, score(s, weights)) for s in summaries]
    return sorted(scored, key=lambda p: (-p[1], p[0]))


def recommend_trigger(scenario, hyps, candidates, weights=(1.0, 1.0), **rollout):
    """Rank candidate triggers by w_time * time diverted + w_alert * alert delta."""
    return recommend_with_summaries(scenario, hyps, candidates, weights, **rollout)[0]


def recommend_with_summaries(scenario, hyps, candidates, weights=(1.0, 1.0), **rollout):
    if not candidates:
        raise ValidationError("candidates must be nonempty")
    summaries = [counterfactual_rollout(scenario, hyps, c, **rollout) for c in candidates]
    return rank_candidates(summaries, weights), summaries


def recommendation_report(ranking, summaries, hyps, weights):
    by_id = {s.trigger_id: s for s in summaries}
    doc = {
        "weights": {"time": weights[0], "alert": weights[1]},
        "hypotheses": {h.bias.value: h.weight for h in hyps},
        "ranking": [
            {"rank": i + 1, "trigger_id": tid,
             "score": score_ if math.isfinite(score_) else None,
             **by_id[tid].to_dict()}
            for i, (tid, score_) in enumerate(ranking)
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
