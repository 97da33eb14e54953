"""Rule-table mapping from telemetry records to technique signals."""

import json
from dataclasses import dataclass
from importlib import resources

from .errors import AmbiguousMapping, ConfigError
from .patterns import compile_pattern, matches
from .telemetry import SESSION_OPEN, EventKind

DEFAULT_SUCCESS_WINDOW = 1.0


@dataclass(frozen=True)
class TechniqueSignal:
    technique_id: str
    timestamp: float
    target_host: str
    succeeded: bool | None
    source_events: tuple

    def to_dict(self):
        return {
            "technique_id": self.technique_id,
            "timestamp": self.timestamp,
            "target_host": self.target_host,
            "succeeded": self.succeeded,
            "source_events": list(self.source_events),
        }


@dataclass(frozen=True)
class MappingRule:
    rule_id: str
    event_kind: EventKind
    payload_pattern: str
    technique_id: str


@dataclass(frozen=True)
class RuleTable:
    rules: tuple
    vocabulary: frozenset
    success_window: float = DEFAULT_SUCCESS_WINDOW

    def __iter__(self):
        return iter(self.rules)

    def __len__(self):
        return len(self.rules)


def validate_rules(rules, vocabulary):
    """Raise ConfigError on the first invalid rule."""
    seen = set()
    for i, r in enumerate(rules):
        path = f"$.rules[{i}]"
        if r.rule_id in seen:
            raise ConfigError(f"{path}.rule_id", f"duplicate rule id {r.rule_id}")
        seen.add(r.rule_id)
        try:
            compile_pattern(r.payload_pattern)
        except ValueError:
            raise ConfigError(f"{path}.payload_pattern", "pattern is empty") from None
        if vocabulary is not None and r.technique_id not in vocabulary:
            raise ConfigError(f"{path}.technique_id", f"{r.technique_id!r} not in vocabulary")


def rules_from_json(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON: {exc}") from None
    if isinstance(doc, list):
        doc = {"rules": doc}
    if not isinstance(doc, dict) or not isinstance(doc.get("rules"), list):
        raise ConfigError("$.rules", "expected a list of rules")
    rules = []
    for i, d in enumerate(doc["rules"]):
        path = f"$.rules[{i}]"
        for key in ("rule_id", "event_kind", "payload_pattern", "technique_id"):
            if not isinstance(d.get(key), str):
                raise ConfigError(f"{path}.{key}", "missing or not a string")
        try:
            kind = EventKind(d["event_kind"])
        except ValueError:
            raise ConfigError(f"{path}.event_kind", f"unknown kind {d['event_kind']!r}") from None
        rules.append(MappingRule(d["rule_id"], kind, d["payload_pattern"], d["technique_id"]))
    vocab = doc.get("vocabulary")
    vocab = frozenset(vocab) if vocab is not None else frozenset(r.technique_id for r in rules)
    validate_rules(rules, vocab)
    window = float(doc.get("success_window", DEFAULT_SUCCESS_WINDOW))
    return RuleTable(tuple(rules), vocab, window)


def default_rules():
    text = resources.files("cogdecoy").joinpath("data/mapping_rules.json").read_text("utf-8")
    return rules_from_json(text)


def load_rules(path):
    with open(path, encoding="utf-8") as fh:
        return rules_from_json(fh.read())


def _technique_for(event, index, rules):
    hits = [r for r in rules if r.event_kind is event.kind and matches(r.payload_pattern, event.payload)]
    if not hits:
        return None
    if len({r.technique_id for r in hits}) > 1:
        raise AmbiguousMapping(index, [r.rule_id for r in hits])
    return hits[0].technique_id


def map_events(events, rules, success_window=None):
    """Collapse matching events into time-ordered technique signals.

    Events of one action share a timestamp, host and technique and form a
    single signal.  Success is taken from the command record when present,
    otherwise a session-open on the target within ``success_window``
    minutes marks a success.
    """
    if isinstance(rules, RuleTable):
        window = rules.success_window if success_window is None else success_window
        rules = rules.rules
    else:
        window = DEFAULT_SUCCESS_WINDOW if success_window is None else success_window
    order = sorted(range(len(events)), key=lambda i: events[i].timestamp)
    groups = []
    open_by_key = {}
    for i in order:
        e = events[i]
        tech = _technique_for(e, i, rules)
        if tech is None:
            continue
        key = (tech, e.host, e.timestamp)
        g = open_by_key.get(key)
        if g is None:
            g = {"technique": tech, "host": e.host, "ts": e.timestamp, "idx": []}
            open_by_key[key] = g
            groups.append(g)
        g["idx"].append(i)

    signals = []
    for g in groups:
        signals.append(TechniqueSignal(
            technique_id=g["technique"],
            timestamp=g["ts"],
            target_host=g["host"],
            succeeded=_success(g, events, order, window),
            source_events=tuple(g["idx"]),
        ))
    return signals


def _success(group, events, order, window):
    commands = [events[i] for i in group["idx"] if events[i].kind is EventKind.command]
    if not commands:
        return None
    flag = commands[0].succeeded
    if flag is not None:
        return flag
    t0 = group["ts"]
    for i in order:
        e = events[i]
        if e.timestamp < t0:
            continue
        if e.timestamp > t0 + window:
            break
        if e.kind is EventKind.session and e.payload == SESSION_OPEN and e.host == group["host"]:
            return True
    return False
