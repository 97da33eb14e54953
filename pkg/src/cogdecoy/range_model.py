"""Enterprise range scenario: hosts, reachability, attack path and triggers."""

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources

from .errors import ConfigError, MalformedTriggerId, ScenarioInvalid, UnknownBiasCode
from .patterns import compile_pattern


class BiasKind(str, Enum):
    LossAversion = "LossAversion"
    BaseRateNeglect = "BaseRateNeglect"
    Confirmation = "Confirmation"
    SunkCost = "SunkCost"
    Availability = "Availability"


BIASES = tuple(BiasKind)

BIAS_LETTERS = {
    "B": BiasKind.BaseRateNeglect,
    "L": BiasKind.LossAversion,
    "A": BiasKind.Availability,
    "C": BiasKind.Confirmation,
    "S": BiasKind.SunkCost,
}
LETTER_OF = {v: k for k, v in BIAS_LETTERS.items()}


class ArtifactKind(str, Enum):
    account = "account"
    file = "file"
    alias = "alias"
    proxy_note = "proxy_note"
    service = "service"


@dataclass(frozen=True)
class Artifact:
    kind: ArtifactKind
    name: str
    grants_privilege: bool = True
    salience_tags: tuple = ()


@dataclass(frozen=True)
class HostNode:
    host_id: str
    display_name: str
    ip: str
    subnet: str
    path_rank: int | None = None
    artifacts: tuple = ()
    alert_sensitivity: float = 1.0


@dataclass(frozen=True)
class TriggerSpec:
    trigger_id: str
    bias_targets: frozenset
    host_id: str
    class_code: int
    biased_signatures: tuple = ()
    rational_signatures: tuple = ()
    interaction_time_cost: float = 0.0


@dataclass(frozen=True)
class Scenario:
    hosts: tuple
    edges: tuple
    attack_path: tuple
    triggers: tuple
    entry_host: str
    seed: int = 0
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        index = {
            "host": {h.host_id: h for h in self.hosts},
            "adj": {h.host_id: set() for h in self.hosts},
        }
        for a, b in self.edges:
            index["adj"].setdefault(a, set()).add(b)
            index["adj"].setdefault(b, set()).add(a)
        index["adj"] = {k: tuple(sorted(v)) for k, v in index["adj"].items()}
        object.__setattr__(self, "_index", index)

    def host(self, host_id):
        return self._index["host"][host_id]

    def has_host(self, host_id):
        return host_id in self._index["host"]

    def neighbors(self, host_id):
        return self._index["adj"].get(host_id, ())

    def connected(self, a, b):
        return b in self._index["adj"].get(a, ())

    @property
    def on_path(self):
        return frozenset(self.attack_path)

    def triggers_at(self, host_id):
        return [t for t in self.triggers if t.host_id == host_id]

    def host_table(self):
        """Map every display name, host id and IP to its host id."""
        table = {}
        for h in self.hosts:
            table[h.host_id] = h.host_id
            table[h.display_name] = h.host_id
            table[h.ip] = h.host_id
        return table

    def without_triggers(self):
        return Scenario(self.hosts, self.edges, self.attack_path, (), self.entry_host, self.seed)

    def with_triggers(self, triggers):
        return Scenario(self.hosts, self.edges, self.attack_path, tuple(triggers),
                        self.entry_host, self.seed)


# -- trigger ids -------------------------------------------------------------

_ID_RE = re.compile(r"([A-Za-z])\.([0-9]+(?:\.[0-9]+)*)")


def parse_trigger_id(code):
    """Split a trigger code such as ``"B.2.1.1"`` into (bias, class, instance)."""
    if not isinstance(code, str) or not code:
        raise MalformedTriggerId(f"malformed trigger id {code!r}")
    letter = code[0]
    if letter.isalpha() and letter not in BIAS_LETTERS:
        raise UnknownBiasCode(f"unknown bias letter {letter!r} in {code!r}")
    m = _ID_RE.fullmatch(code)
    if m is None:
        raise MalformedTriggerId(f"malformed trigger id {code!r}")
    numbers = m.group(2).split(".")
    # leading zeros would break parse/render identity
    if any(len(n) > 1 and n.startswith("0") for n in numbers):
        raise MalformedTriggerId(f"malformed trigger id {code!r}")
    numbers = [int(n) for n in numbers]
    return BIAS_LETTERS[letter], numbers[0], numbers[1:]


def render_trigger_id(bias, class_code, instance=()):
    return ".".join([LETTER_OF[BiasKind(bias)], str(class_code), *map(str, instance)])


# -- validation --------------------------------------------------------------

_IP_RE = re.compile(r"([0-9]{1,3})\.([0-9]{1,3})\.([0-9]{1,3})\.([0-9]{1,3})")


def validate_scenario(s):
    """Return a list of invariant violations; empty means valid."""
    out = []
    seen = set()
    for h in s.hosts:
        if h.host_id in seen:
            out.append(f"host_id {h.host_id} duplicated")
        seen.add(h.host_id)
        m = _IP_RE.fullmatch(h.ip or "")
        if m is None or any(int(g) > 255 for g in m.groups()):
            out.append(f"hosts[{h.host_id}].ip {h.ip!r} is not a dotted quad")
        if not 0.0 <= h.alert_sensitivity <= 1.0:
            out.append(f"hosts[{h.host_id}].alert_sensitivity outside [0,1]")
        if h.path_rank is not None and not 1 <= h.path_rank <= 12:
            out.append(f"hosts[{h.host_id}].path_rank {h.path_rank} outside 1..12")
        for a in h.artifacts:
            if not a.name:
                out.append(f"hosts[{h.host_id}].artifacts name empty")
    ranks = {}
    for h in s.hosts:
        if h.path_rank is not None:
            ranks.setdefault(h.path_rank, []).append(h.host_id)
    for r in sorted(ranks):
        if len(ranks[r]) > 1:
            out.append(f"path_rank {r} duplicated")
    for a, b in s.edges:
        for end in (a, b):
            if end not in seen:
                out.append(f"edge ({a}, {b}) references unknown host {end}")
    for i, hid in enumerate(s.attack_path):
        if hid not in seen:
            out.append(f"attack_path[{i}] unknown host {hid}")
    for i in range(1, len(s.attack_path)):
        if not s.connected(s.attack_path[i - 1], s.attack_path[i]):
            out.append(f"attack_path not connected at index {i}")
    if len(set(s.attack_path)) != len(s.attack_path):
        out.append("attack_path repeats a host")
    if not s.attack_path or s.entry_host != s.attack_path[0]:
        out.append("entry_host is not attack_path[0]")
    tids = set()
    for t in s.triggers:
        if t.trigger_id in tids:
            out.append(f"trigger {t.trigger_id} duplicated")
        tids.add(t.trigger_id)
        try:
            bias, cls, _ = parse_trigger_id(t.trigger_id)
        except (UnknownBiasCode, MalformedTriggerId) as exc:
            out.append(f"triggers[{t.trigger_id}].trigger_id {exc}")
        else:
            if cls != t.class_code:
                out.append(f"triggers[{t.trigger_id}].class_code {t.class_code} != {cls}")
            if bias not in t.bias_targets:
                out.append(f"triggers[{t.trigger_id}].bias_targets missing {bias.value}")
        if not 1 <= len(t.bias_targets) <= 2:
            out.append(f"triggers[{t.trigger_id}].bias_targets must hold 1 or 2 biases")
        if t.host_id not in seen:
            out.append(f"triggers[{t.trigger_id}].host_id {t.host_id} unknown")
        if set(t.biased_signatures) & set(t.rational_signatures):
            out.append(f"triggers[{t.trigger_id}] biased and rational signatures overlap")
        for p in (*t.biased_signatures, *t.rational_signatures):
            try:
                compile_pattern(p)
            except ValueError:
                out.append(f"triggers[{t.trigger_id}] empty signature pattern")
    return out


# -- (de)serialisation ---------------------------------------------------------

def _req(obj, key, path, types):
    if not isinstance(obj, dict) or key not in obj:
        raise ConfigError(f"{path}.{key}", "missing required field")
    val = obj[key]
    if not isinstance(val, types) or (isinstance(val, bool) and bool not in _as_tuple(types)):
        raise ConfigError(f"{path}.{key}", f"expected {_type_names(types)}, got {type(val).__name__}")
    return val


def _as_tuple(t):
    return t if isinstance(t, tuple) else (t,)


def _type_names(types):
    return "/".join(t.__name__ for t in _as_tuple(types))


def _artifact(d, path):
    kind = _req(d, "kind", path, str)
    try:
        kind = ArtifactKind(kind)
    except ValueError:
        raise ConfigError(f"{path}.kind", f"unknown artifact kind {kind!r}") from None
    tags = d.get("salience_tags", [])
    if not isinstance(tags, list) or not all(isinstance(x, str) for x in tags):
        raise ConfigError(f"{path}.salience_tags", "expected list of strings")
    return Artifact(
        kind=kind,
        name=_req(d, "name", path, str),
        grants_privilege=d.get("grants_privilege", True) is True,
        salience_tags=tuple(tags),
    )


def _host(d, path):
    rank = d.get("path_rank")
    if rank is not None and (not isinstance(rank, int) or isinstance(rank, bool)):
        raise ConfigError(f"{path}.path_rank", "expected integer or null")
    sens = d.get("alert_sensitivity", 1.0)
    if not isinstance(sens, (int, float)) or isinstance(sens, bool):
        raise ConfigError(f"{path}.alert_sensitivity", "expected number")
    arts = d.get("artifacts", [])
    if not isinstance(arts, list):
        raise ConfigError(f"{path}.artifacts", "expected list")
    return HostNode(
        host_id=_req(d, "host_id", path, str),
        display_name=_req(d, "display_name", path, str),
        ip=_req(d, "ip", path, str),
        subnet=_req(d, "subnet", path, str),
        path_rank=rank,
        artifacts=tuple(_artifact(a, f"{path}.artifacts[{i}]") for i, a in enumerate(arts)),
        alert_sensitivity=float(sens),
    )


def _strlist(d, key, path):
    val = d.get(key, [])
    if not isinstance(val, list) or not all(isinstance(x, str) for x in val):
        raise ConfigError(f"{path}.{key}", "expected list of strings")
    return val


def _trigger(d, path):
    targets = _strlist(d, "bias_targets", path)
    try:
        targets = frozenset(BiasKind(b) for b in targets)
    except ValueError as exc:
        raise ConfigError(f"{path}.bias_targets", str(exc)) from None
    cost = d.get("interaction_time_cost", 0.0)
    if not isinstance(cost, (int, float)) or isinstance(cost, bool):
        raise ConfigError(f"{path}.interaction_time_cost", "expected number")
    return TriggerSpec(
        trigger_id=_req(d, "trigger_id", path, str),
        bias_targets=targets,
        host_id=_req(d, "host_id", path, str),
        class_code=_req(d, "class_code", path, int),
        biased_signatures=tuple(_strlist(d, "biased_signatures", path)),
        rational_signatures=tuple(_strlist(d, "rational_signatures", path)),
        interaction_time_cost=float(cost),
    )


def scenario_from_dict(doc):
    if not isinstance(doc, dict):
        raise ConfigError("$", "top level must be an object")
    hosts = _req(doc, "hosts", "$", list)
    edges = _req(doc, "edges", "$", list)
    for i, e in enumerate(edges):
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(x, str) for x in e)):
            raise ConfigError(f"$.edges[{i}]", "expected [host_id, host_id]")
    path = _req(doc, "attack_path", "$", list)
    if not all(isinstance(x, str) for x in path):
        raise ConfigError("$.attack_path", "expected list of host ids")
    triggers = doc.get("triggers", [])
    if not isinstance(triggers, list):
        raise ConfigError("$.triggers", "expected list")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("$.seed", "expected unsigned integer")
    return Scenario(
        hosts=tuple(_host(h, f"$.hosts[{i}]") for i, h in enumerate(hosts)),
        edges=tuple((a, b) for a, b in edges),
        attack_path=tuple(path),
        triggers=tuple(_trigger(t, f"$.triggers[{i}]") for i, t in enumerate(triggers)),
        entry_host=_req(doc, "entry_host", "$", str),
        seed=seed,
    )


def load_scenario(config_text):
    """Parse and fully validate a JSON scenario document."""
    try:
        doc = json.loads(config_text)
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON: {exc}") from None
    s = scenario_from_dict(doc)
    violations = validate_scenario(s)
    if violations:
        raise ScenarioInvalid(violations)
    return s


def scenario_to_dict(s):
    return {
        "hosts": [
            {
                "host_id": h.host_id,
                "display_name": h.display_name,
                "ip": h.ip,
                "subnet": h.subnet,
                "path_rank": h.path_rank,
                "artifacts": [
                    {
                        "kind": a.kind.value,
                        "name": a.name,
                        "grants_privilege": a.grants_privilege,
                        "salience_tags": list(a.salience_tags),
                    }
                    for a in h.artifacts
                ],
                "alert_sensitivity": h.alert_sensitivity,
            }
            for h in s.hosts
        ],
        "edges": [[a, b] for a, b in s.edges],
        "attack_path": list(s.attack_path),
        "triggers": [
            {
                "trigger_id": t.trigger_id,
                "bias_targets": sorted(b.value for b in t.bias_targets),
                "host_id": t.host_id,
                "class_code": t.class_code,
                "biased_signatures": list(t.biased_signatures),
                "rational_signatures": list(t.rational_signatures),
                "interaction_time_cost": t.interaction_time_cost,
            }
            for t in s.triggers
        ],
        "entry_host": s.entry_host,
        "seed": s.seed,
    }


def dump_scenario(s):
    return json.dumps(scenario_to_dict(s), indent=2) + "\n"


def canonical_scenario_text():
    return resources.files("cogdecoy").joinpath("data/canonical_scenario.json").read_text("utf-8")


def load_canonical_scenario():
    return load_scenario(canonical_scenario_text())


def load_scenario_file(path):
    with open(path, encoding="utf-8") as fh:
        return load_scenario(fh.read())
