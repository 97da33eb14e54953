"""Schematic telemetry: emission from agent actions, JSONL I/O, attribution."""

import json
import logging
import re
from dataclasses import dataclass
from enum import Enum

from .errors import ParseError

log = logging.getLogger(__name__)

FIELDS = ("timestamp", "kind", "host", "actor", "payload", "succeeded")
SESSION_OPEN = "session-open"
SESSION_CLOSE = "session-close"
SESSION_DELAY = 0.5


class EventKind(str, Enum):
    command = "command"
    alert = "alert"
    flow = "flow"
    session = "session"


@dataclass(frozen=True)
class EventRecord:
    timestamp: float
    kind: EventKind
    host: str
    actor: str
    payload: str
    succeeded: bool | None = None
    soc_visible: bool | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", EventKind(self.kind))
        object.__setattr__(self, "timestamp", round(float(self.timestamp), 3))
        if self.timestamp < 0:
            raise ValueError("timestamp must be >= 0")
        if not self.payload:
            raise ValueError(f"{self.kind.value} record needs a payload")

    def to_dict(self):
        d = {
            "timestamp": self.timestamp,
            "kind": self.kind.value,
            "host": self.host,
            "actor": self.actor,
            "payload": self.payload,
            "succeeded": self.succeeded,
        }
        if self.soc_visible is not None:
            d["soc_visible"] = self.soc_visible
        return d


def alert_signature(technique_id):
    return f"SIG-{technique_id}"


def emit_events(action, succeeded, state_clock, host_sensitivity, rng, actor="session-0"):
    """Telemetry produced by one attacker action.

    Order is command, flow (cross-host only), alert (sampled), session-open
    (successful lateral moves only).  Exactly one uniform draw is consumed.
    """
    t = state_clock
    target = action.target_host
    lateral = getattr(action, "lateral", False)
    source = getattr(action, "source_host", None)
    command = getattr(action, "command", "") or action.technique_id
    out = [EventRecord(t, EventKind.command, target, actor, command,
                       None if lateral else bool(succeeded))]
    if source is not None and source != target:
        out.append(EventRecord(t, EventKind.flow, target, actor, f"{source}->{target}"))
    p_alert = min(1.0, action.p_detect * host_sensitivity)
    if rng.random() < p_alert:
        out.append(EventRecord(t, EventKind.alert, target, actor,
                               alert_signature(action.technique_id)))
    if lateral and succeeded:
        out.append(EventRecord(t + SESSION_DELAY, EventKind.session, target, actor, SESSION_OPEN))
    return out


# -- JSONL --------------------------------------------------------------------

def format_event(e):
    return json.dumps(e.to_dict(), ensure_ascii=False)


def write_event_log(events):
    return "".join(format_event(e) + "\n" for e in events)


def parse_event_log(text, warnings=None):
    """Parse newline-delimited event records, preserving order.

    Out-of-order timestamps are accepted; a message is appended to
    ``warnings`` (when given) and logged.
    """
    events = []
    last_ts = None
    # split on LF only: JSON strings may legally hold other line separators
    for n, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(n, f"invalid JSON ({exc.msg})") from None
        events.append(_record(d, n))
        ts = events[-1].timestamp
        if last_ts is not None and ts < last_ts:
            msg = f"line {n}: timestamp {ts} earlier than previous {last_ts}"
            log.warning(msg)
            if warnings is not None:
                warnings.append(msg)
        last_ts = ts
    return events


def _record(d, n):
    if not isinstance(d, dict):
        raise ParseError(n, "record must be an object")
    missing = [f for f in FIELDS if f not in d]
    if missing:
        raise ParseError(n, f"missing fields {missing}")
    extra = set(d) - set(FIELDS) - {"soc_visible"}
    if extra:
        raise ParseError(n, f"unknown fields {sorted(extra)}")
    ts = d["timestamp"]
    if isinstance(ts, bool) or not isinstance(ts, (int, float)) or ts < 0:
        raise ParseError(n, f"bad timestamp {ts!r}")
    try:
        kind = EventKind(d["kind"])
    except ValueError:
        raise ParseError(n, f"unknown kind {d['kind']!r}") from None
    for f in ("host", "actor", "payload"):
        if not isinstance(d[f], str):
            raise ParseError(n, f"{f} must be a string")
    if not d["payload"]:
        raise ParseError(n, "empty payload")
    if d["succeeded"] is not None and not isinstance(d["succeeded"], bool):
        raise ParseError(n, "succeeded must be true, false or null")
    soc = d.get("soc_visible")
    if soc is not None and not isinstance(soc, bool):
        raise ParseError(n, "soc_visible must be boolean")
    return EventRecord(ts, kind, d["host"], d["actor"], d["payload"], d["succeeded"], soc)


def read_event_log(path, warnings=None):
    with open(path, encoding="utf-8") as fh:
        return parse_event_log(fh.read(), warnings)


# -- attribution ---------------------------------------------------------------

_TOKEN_SPLIT = re.compile(r"[\s@:/'\"=,;|&()\[\]<>]+")


def first_mention(command, host_table):
    """Host id of the leftmost name or IP mentioned in ``command``."""
    for token in _TOKEN_SPLIT.split(command):
        if token and token in host_table:
            return host_table[token]
    return None


def attribute_commands(commands, host_table, initial_host):
    """Attach each command to the most recently mentioned host.

    A mention reassigns from the mentioning command onward; commands before
    any mention go to ``initial_host``.
    """
    current = initial_host
    out = []
    for cmd in commands:
        hit = first_mention(cmd, host_table)
        if hit is not None:
            current = hit
        out.append((cmd, current))
    return out


def commands_of(events):
    return [e.payload for e in events if e.kind is EventKind.command]
