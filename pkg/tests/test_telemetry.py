import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cogdecoy.agent import ActionSpec
from cogdecoy.errors import ParseError
from cogdecoy.telemetry import (
    EventKind,
    EventRecord,
    attribute_commands,
    emit_events,
    parse_event_log,
    write_event_log,
)


def local(p_detect=0.0):
    return ActionSpec("discovery/file-and-directory", "web", p_detect, 1.0, 0.2, 3.0, command="ls -la")


def ssh(p_detect=1.0):
    return ActionSpec("lateral-movement/remote-services", "db", p_detect, 1.0, 1.0, 12.0,
                      command="ssh svc@db", lateral=True, source_host="web")


def test_local_zero_detection():
    out = emit_events(local(), True, 4.0, 1.0, np.random.default_rng(0))
    assert [e.kind for e in out] == [EventKind.command]
    assert out[0].succeeded is True and out[0].timestamp == 4.0


def test_lateral_certain_detection():
    out = emit_events(ssh(), True, 10.0, 1.0, np.random.default_rng(0))
    assert [e.kind for e in out] == [EventKind.command, EventKind.flow, EventKind.alert, EventKind.session]
    assert out[2].payload == "SIG-lateral-movement/remote-services"
    assert out[3].payload == "session-open"


def test_failed_lateral_has_no_session():
    out = emit_events(ssh(0.0), False, 10.0, 1.0, np.random.default_rng(0))
    assert [e.kind for e in out] == [EventKind.command, EventKind.flow]


def _alert_count(n, p, sens, seed):
    rng = np.random.default_rng(seed)
    a = local(p)
    return sum(any(e.kind is EventKind.alert for e in emit_events(a, True, 0.0, sens, rng)) for _ in range(n))


def test_binomial_1000():
    n, p = 1000, 0.3
    assert abs(_alert_count(n, p, 1.0, 1) - n * p) <= 3 * math.sqrt(n * p * (1 - p))


def test_binomial_10000_with_sensitivity():
    n, p = 10_000, 0.4 * 0.5
    assert abs(_alert_count(n, 0.4, 0.5, 2) - n * p) <= 3 * math.sqrt(n * p * (1 - p))


def test_emission_determinism():
    a = [emit_events(ssh(0.5), True, 1.0, 1.0, np.random.default_rng(9)) for _ in range(2)]
    assert a[0] == a[1]


TABLE = {"site-proxy": "site-proxy", "10.0.0.5": "site-proxy", "it-ubuntu-1": "it-ubuntu-1",
         "10.1.0.11": "it-ubuntu-1"}


def test_attribution_example():
    cmds = ["nmap 10.0.0.5", "ls", "ssh it-ubuntu-1", "id"]
    got = attribute_commands(cmds, TABLE, "kali")
    assert [h for _, h in got] == ["site-proxy", "site-proxy", "it-ubuntu-1", "it-ubuntu-1"]
    assert [c for c, _ in got] == cmds


def test_attribution_no_mentions():
    assert [h for _, h in attribute_commands(["ls", "id", "whoami"], TABLE, "kali")] == ["kali"] * 3


def test_attribution_leftmost_wins():
    got = attribute_commands(["scp it-ubuntu-1:/x site-proxy:/y"], TABLE, "kali")
    assert got[0][1] == "it-ubuntu-1"


@given(st.lists(st.sampled_from(["ls", "id", "ssh site-proxy", "ping 10.1.0.11", "cat x", "nc it-ubuntu-1 22"])))
def test_attribution_changes_only_at_mentions(cmds):
    got = attribute_commands(cmds, TABLE, "kali")
    assert len(got) == len(cmds)
    for (prev_c, prev_h), (c, h) in zip(got, got[1:]):
        if h != prev_h:
            assert any(tok in c for tok in TABLE)


def test_parse_empty():
    assert parse_event_log("") == []


def test_unknown_kind_line_number():
    good = write_event_log([EventRecord(0.0, "command", "web", "s", "ls", True)])
    with pytest.raises(ParseError) as exc:
        parse_event_log(good + '{"timestamp": 1, "kind": "foo", "host": "h", "actor": "a", '
                        '"payload": "p", "succeeded": null}\n')
    assert exc.value.line == 2


@pytest.mark.parametrize("line", [
    "not json",
    '{"timestamp": -1, "kind": "command", "host": "h", "actor": "a", "payload": "p", "succeeded": null}',
    '{"timestamp": 1, "kind": "command", "host": "h", "actor": "a", "payload": "", "succeeded": null}',
    '{"timestamp": 1, "kind": "command", "host": "h", "actor": "a", "payload": "p"}',
    '{"timestamp": 1, "kind": "command", "host": "h", "actor": "a", "payload": "p", "succeeded": 1}',
    '{"timestamp": 1, "kind": "command", "host": "h", "actor": "a", "payload": "p", "succeeded": null, "x": 1}',
])
def test_malformed_lines(line):
    with pytest.raises(ParseError):
        parse_event_log(line + "\n")


def test_out_of_order_warns():
    text = write_event_log([EventRecord(5.0, "command", "h", "a", "ls"), EventRecord(1.0, "command", "h", "a", "id")])
    warnings = []
    events = parse_event_log(text, warnings)
    assert [e.timestamp for e in events] == [5.0, 1.0]
    assert len(warnings) == 1


def test_soc_visible_optional():
    e = EventRecord(1.0, "alert", "h", "a", "SIG-x", None, soc_visible=True)
    text = write_event_log([e])
    assert '"soc_visible": true' in text
    assert parse_event_log(text) == [e]


events_strategy = st.lists(st.builds(
    EventRecord,
    timestamp=st.floats(0, 1e4, allow_nan=False).map(lambda x: round(x, 3)),
    kind=st.sampled_from(list(EventKind)),
    host=st.text(min_size=1, max_size=8),
    actor=st.text(max_size=8),
    payload=st.text(min_size=1, max_size=30),
    succeeded=st.sampled_from([None, True, False]),
))


@given(events_strategy)
def test_round_trip(events):
    text = write_event_log(events)
    parsed = parse_event_log(text)
    assert write_event_log(parsed) == text
