"""Expert-knowledge rule counters and surveillance scores over event logs."""

import csv
import io
import json
import re
from dataclasses import dataclass, field

from .errors import ConfigError, HorizonEmpty
from .patterns import first_match
from .telemetry import EventKind

AGGRESSIVE_PATTERNS = ("nmap *-T4*", "nmap *-T5*", "hydra*", "msfconsole*")
VERIFICATION_COMMANDS = frozenset({"sudo -l", "id", "groups"})
_PIPE_TO_FILTER = re.compile(r"\|\s*(grep|awk)\b")


@dataclass(frozen=True)
class EkmRule:
    trigger_id: str
    host_scope: frozenset
    biased_patterns: tuple
    rational_patterns: tuple
    exclusions: tuple = ()
    window: tuple | None = None
    version: int = 1

    def __post_init__(self):
        object.__setattr__(self, "host_scope", frozenset(self.host_scope))
        for name in ("biased_patterns", "rational_patterns", "exclusions"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        overlap = set(self.biased_patterns) & set(self.rational_patterns)
        if overlap:
            raise ConfigError("$.biased_patterns", f"shared with rational: {sorted(overlap)}")
        if self.window is not None:
            start, end = self.window
            if not start < end:
                raise ConfigError("$.window", "start must precede end")
            object.__setattr__(self, "window", (float(start), float(end)))

    def to_dict(self):
        return {
            "trigger_id": self.trigger_id,
            "host_scope": sorted(self.host_scope),
            "biased_patterns": list(self.biased_patterns),
            "rational_patterns": list(self.rational_patterns),
            "exclusions": list(self.exclusions),
            "window": list(self.window) if self.window else None,
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, d):
        for key in ("trigger_id", "host_scope", "biased_patterns", "rational_patterns"):
            if key not in d:
                raise ConfigError(f"$.{key}", "missing")
        window = d.get("window")
        return cls(
            trigger_id=d["trigger_id"],
            host_scope=frozenset(d["host_scope"]),
            biased_patterns=tuple(d["biased_patterns"]),
            rational_patterns=tuple(d["rational_patterns"]),
            exclusions=tuple(d.get("exclusions", ())),
            window=tuple(window) if window else None,
            version=int(d.get("version", 1)),
        )


def load_ekm_rules(text):
    doc = json.loads(text)
    items = doc["rules"] if isinstance(doc, dict) else doc
    return [EkmRule.from_dict(d) for d in items]


@dataclass(frozen=True)
class EkmCounts:
    trigger_id: str
    biased_count: int = 0
    rational_count: int = 0
    biased_indices: tuple = field(default_factory=tuple)
    rational_indices: tuple = field(default_factory=tuple)

    @property
    def matched_event_indices(self):
        return tuple(sorted(self.biased_indices + self.rational_indices))

    def to_dict(self):
        return {
            "trigger_id": self.trigger_id,
            "biased": self.biased_count,
            "rational": self.rational_count,
        }


def ekm_b211_rule():
    return EkmRule(
        trigger_id="B.2.1.1",
        host_scope=frozenset({"it-ubuntu-1"}),
        biased_patterns=("su *-adm*", "ssh *-adm*"),
        rational_patterns=("sudo -l", "id", "groups"),
    )


def ekm_l121_rule():
    return EkmRule(
        trigger_id="L.12.1",
        host_scope=frozenset({"site-proxy"}),
        biased_patterns=("ssh *protected-data*", "su *protected-data*"),
        rational_patterns=("*jndi*",),
    )


def ekm_rule_for(trigger):
    """Rule derived from a trigger's own signatures, scoped to its host."""
    return EkmRule(
        trigger_id=trigger.trigger_id,
        host_scope=frozenset({trigger.host_id}),
        biased_patterns=tuple(trigger.biased_signatures),
        rational_patterns=tuple(trigger.rational_signatures),
    )


def _first_contact(events, rule):
    for e in events:
        if e.host in rule.host_scope and e.kind is EventKind.command:
            if first_match(rule.biased_patterns + rule.rational_patterns, e.payload) is not None:
                return e.timestamp
    return None


def apply_ekm(events, rule):
    """Count biased and rational command events for one trigger.

    The optional window is relative to the first matching command in
    scope.  Exclusions win over both pattern lists.
    """
    lo = hi = None
    if rule.window is not None:
        t0 = _first_contact(events, rule)
        if t0 is None:
            return EkmCounts(rule.trigger_id)
        lo, hi = t0 + rule.window[0], t0 + rule.window[1]
    biased, rational = [], []
    for i, e in enumerate(events):
        if e.kind is not EventKind.command or e.host not in rule.host_scope:
            continue
        if lo is not None and not lo <= e.timestamp <= hi:
            continue
        if first_match(rule.exclusions, e.payload) is not None:
            continue
        if first_match(rule.biased_patterns, e.payload) is not None:
            biased.append(i)
        elif first_match(rule.rational_patterns, e.payload) is not None:
            rational.append(i)
    return EkmCounts(rule.trigger_id, len(biased), len(rational), tuple(biased), tuple(rational))


def ekm_csv(rows):
    """``rows`` are (participant, EkmCounts) pairs."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["participant", "trigger", "biased", "rational"])
    for participant, c in rows:
        w.writerow([participant, c.trigger_id, c.biased_count, c.rational_count])
    return buf.getvalue()


# -- surveillance scores --------------------------------------------------------

def _clamp01(x):
    return min(1.0, max(0.0, x))


def risk_tolerance_score(events, horizon, alert_cap=20, command_weight=0.5, alert_weight=0.5,
                         patterns=AGGRESSIVE_PATTERNS):
    """Early aggressive tooling and early alert volume, combined into [0, 1]."""
    if horizon <= 0:
        raise HorizonEmpty("horizon must be > 0")
    early = [e for e in events if e.timestamp <= horizon]
    commands = [e.payload for e in early if e.kind is EventKind.command]
    alerts = sum(1 for e in early if e.kind is EventKind.alert)
    frac = (sum(1 for c in commands if first_match(patterns, c) is not None) / len(commands)
            if commands else 0.0)
    return _clamp01(command_weight * frac + alert_weight * alerts / alert_cap)


def _verifies(command):
    return command.strip() in VERIFICATION_COMMANDS or bool(_PIPE_TO_FILTER.search(command))


def cognitive_reflection_score(commands):
    if not commands:
        return 0.0
    n = len(commands)
    verification = sum(1 for c in commands if _verifies(c)) / n
    repeats = sum(1 for a, b in zip(commands, commands[1:]) if a == b)
    return _clamp01(verification - repeats / n)

