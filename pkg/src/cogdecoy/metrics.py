"""Behavioral-impact metrics and rank-based group tests."""

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.stats import chi2, norm, rankdata, t as student_t

from .errors import InsufficientGroups, ValidationError
from .patterns import first_match
from .telemetry import EventKind

DEFAULT_FLOOR = 0.5
EXACT_LIMIT = 8
LATERAL_PREFIXES = ("lateral-movement/", "initial-access/")


class Condition(str, Enum):
    trigger = "trigger"
    control = "control"


class Division(str, Enum):
    open = "open"
    expert = "expert"


@dataclass
class SessionSummary:
    session_id: str
    condition: Condition
    division: Division = Division.open
    progress_rank: int = 1
    on_path_proportion: float = 0.0
    alert_counts: dict = field(default_factory=dict)
    trigger_times: dict = field(default_factory=dict)
    ekm_counts: list = field(default_factory=list)

    def __post_init__(self):
        self.condition = Condition(self.condition)
        self.division = Division(self.division)
        if not 1 <= self.progress_rank <= 12:
            raise ValidationError(f"progress_rank {self.progress_rank} outside 1..12")
        if not 0.0 <= self.on_path_proportion <= 1.0:
            raise ValidationError("on_path_proportion outside [0,1]")

    def to_dict(self):
        return {
            "session_id": self.session_id,
            "condition": self.condition.value,
            "division": self.division.value,
            "progress_rank": self.progress_rank,
            "on_path_proportion": self.on_path_proportion,
            "alert_counts": dict(sorted(self.alert_counts.items())),
            "trigger_times": dict(sorted(self.trigger_times.items())),
            "ekm_counts": [c.to_dict() for c in self.ekm_counts],
        }


def summaries_csv(summaries, focus_host="it-ubuntu-1"):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["session_id", "condition", "division", "progress_rank", "on_path_proportion",
                "alerts_total", f"alerts_{focus_host}", "trigger_time_total"])
    for s in summaries:
        w.writerow([s.session_id, s.condition.value, s.division.value, s.progress_rank,
                    repr(s.on_path_proportion), sum(s.alert_counts.values()),
                    s.alert_counts.get(focus_host, 0), repr(sum(s.trigger_times.values()))])
    return buf.getvalue()


# -- behavioral metrics ----------------------------------------------------------

def progress_rank(attributed, scenario, signals=None):
    """Deepest attack-path rank reached, at least 1.

    With ``signals``, reach means a successful lateral move onto the host.
    Otherwise every host an attributed command points at counts.
    """
    if signals is not None:
        hosts = {s.target_host for s in signals
                 if s.succeeded and s.technique_id.startswith(LATERAL_PREFIXES)}
    else:
        hosts = {h for _, h in attributed}
    ranks = [scenario.host(h).path_rank for h in hosts if scenario.has_host(h)]
    return max([r for r in ranks if r is not None], default=1)


def on_path_proportion(attributed, scenario):
    total = len(attributed)
    if total == 0:
        return 0.0
    path = scenario.on_path
    return sum(1 for _, h in attributed if h in path) / total


def detectability_count(events, host):
    return sum(1 for e in events if e.kind is EventKind.alert and e.host == host)


def alert_counts(events):
    out = {}
    for e in events:
        if e.kind is EventKind.alert:
            out[e.host] = out.get(e.host, 0) + 1
    return out


def trigger_interaction_time(events, trigger, gap_threshold, floor=DEFAULT_FLOOR):
    """Minutes spent on a trigger, from runs of matching commands.

    A run is a maximal chain of matching commands at the trigger host with
    gaps no larger than ``gap_threshold``; each run counts its span plus
    ``floor``.
    """
    if gap_threshold <= 0:
        raise ValidationError("gap_threshold must be > 0")
    patterns = tuple(trigger.biased_signatures) + tuple(trigger.rational_signatures)
    times = sorted(e.timestamp for e in events
                   if e.kind is EventKind.command and e.host == trigger.host_id
                   and first_match(patterns, e.payload) is not None)
    if not times:
        return 0.0
    total = 0.0
    start = prev = times[0]
    for t in times[1:]:
        if t - prev > gap_threshold:
            total += prev - start + floor
            start = t
        prev = t
    return total + prev - start + floor


# -- rank tests ----------------------------------------------------------------------

def _tie_term(ranked_values):
    _, counts = np.unique(ranked_values, return_counts=True)
    return float(np.sum(counts.astype(float) ** 3 - counts))


def _exact_tail(ranks, n_a, u_obs):
    """Two-sided permutation p-value of U using a rank-sum count table."""
    doubled = np.rint(np.asarray(ranks) * 2).astype(int)
    total = int(doubled.sum())
    # table[k][s]: number of k-subsets with doubled rank sum s
    dtype = np.int64 if math.comb(len(ranks), n_a) < 2 ** 62 else object
    table = [np.zeros(total + 1, dtype=dtype) for _ in range(n_a + 1)]
    table[0][0] = 1
    for r in doubled:
        for k in range(n_a, 0, -1):
            table[k][r:] = table[k][r:] + table[k - 1][: total + 1 - r]
    counts = table[n_a]
    n_b = len(ranks) - n_a
    mu = n_a * n_b / 2.0
    offset = n_a * (n_a + 1) / 2.0
    dev_obs = abs(u_obs - mu)
    hit = 0
    for s in np.nonzero(counts)[0]:
        u = s / 2.0 - offset
        if abs(u - mu) >= dev_obs - 1e-9:
            hit += counts[s]
    return min(1.0, float(hit) / math.comb(len(ranks), n_a))


def mann_whitney_u(a, b, method="auto"):
    """Mann-Whitney U for ``a`` and two-sided p.

    ``method`` is "auto" (exact when the smaller sample has at most eight
    values), "exact" or "asymptotic" (normal with tie and continuity
    correction plus an Edgeworth kurtosis term).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValidationError("both samples must be nonempty")
    n_a, n_b = a.size, b.size
    pooled = np.concatenate([a, b])
    ranks = rankdata(pooled)
    u = float(ranks[:n_a].sum() - n_a * (n_a + 1) / 2.0)
    if np.all(pooled == pooled[0]):
        return u, 1.0
    if method == "auto":
        method = "exact" if min(n_a, n_b) <= EXACT_LIMIT else "asymptotic"
    if method == "exact":
        return u, _exact_tail(ranks, n_a, u)
    if method != "asymptotic":
        raise ValueError(f"unknown method {method!r}")
    n = n_a + n_b
    mu = n_a * n_b / 2.0
    var = n_a * n_b / 12.0 * ((n + 1) - _tie_term(ranks) / (n * (n - 1)))
    if var <= 0:
        return u, 1.0
    z = max(0.0, abs(u - mu) - 0.5) / math.sqrt(var)
    # one-term Edgeworth correction for the (negative) excess kurtosis of U
    g2 = -6.0 * (n_a ** 2 + n_b ** 2 + n_a * n_b + n) / (5.0 * n_a * n_b * (n + 1))
    tail = norm.sf(z) + norm.pdf(z) * g2 / 24.0 * (z ** 3 - 3.0 * z)
    return u, float(min(1.0, max(0.0, 2.0 * tail)))


def kruskal_wallis(groups):
    """Kruskal-Wallis H with tie correction and its chi-square p-value."""
    if len(groups) < 2:
        raise InsufficientGroups("need at least two groups")
    arrays = [np.asarray(g, dtype=float) for g in groups]
    if any(g.size == 0 for g in arrays):
        raise ValidationError("groups must be nonempty")
    pooled = np.concatenate(arrays)
    n = pooled.size
    ranks = rankdata(pooled)
    correction = 1.0 - _tie_term(ranks) / (n ** 3 - n)
    if correction <= 0:
        return 0.0, 1.0
    h, start = 0.0, 0
    for g in arrays:
        r = ranks[start:start + g.size]
        h += r.sum() ** 2 / g.size
        start += g.size
    h = (12.0 / (n * (n + 1)) * h - 3.0 * (n + 1)) / correction
    h = max(0.0, h)
    return float(h), float(min(1.0, chi2.sf(h, len(arrays) - 1)))


def standardized_effect(treated, control):
    """Condition coefficient on a z-scored outcome, with its t statistic.

    Regresses the pooled z-scored values on an intercept and a treated
    indicator, so the coefficient reads like Cohen's d.  Returns
    (coefficient, t, two-sided p) with n - 2 degrees of freedom.
    """
    x = np.asarray(treated, dtype=float)
    y = np.asarray(control, dtype=float)
    if x.size == 0 or y.size == 0 or x.size + y.size < 3:
        raise ValidationError("need nonempty groups and at least three values")
    pooled = np.concatenate([x, y])
    sd = pooled.std()
    if sd == 0:
        return 0.0, 0.0, 1.0
    z = (pooled - pooled.mean()) / sd
    zx, zy = z[:x.size], z[x.size:]
    coef = zx.mean() - zy.mean()
    df = pooled.size - 2
    resid = np.concatenate([zx - zx.mean(), zy - zy.mean()])
    s2 = float(resid @ resid) / df
    if s2 == 0:
        return float(coef), math.copysign(math.inf, coef), 0.0
    t = coef / math.sqrt(s2 * (1 / x.size + 1 / y.size))
    return float(coef), float(t), float(2 * student_t.sf(abs(t), df))
