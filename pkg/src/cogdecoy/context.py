"""Defender-side reconstruction of the decision context behind each signal.

The defender knows the range it built, so it can replay the observed
signal stream through a shadow attacker state and recover what was on the
menu when each technique was chosen.  Commands from the raw telemetry are
used to pin each signal to a concrete menu entry.
"""

from .agent import (
    AttackerState,
    apply_outcome,
    default_action_model,
    enumerate_actions,
    salience_name,
)
from .cogvuln import SensorConfig, SignalContext
from .telemetry import EventKind


class ContextBuilder:
    """Stateful builder feeding :func:`cogdecoy.cogvuln.run_sensor`.

    Call :meth:`context` once per signal, in stream order.  Resuming a
    stream in chunks with the same builder gives the same contexts as one
    pass over the concatenated stream.
    """

    def __init__(self, scenario, events=None, cfg=None, model=None, budget=None):
        self.scenario = scenario
        self.events = list(events or [])
        self.cfg = cfg or SensorConfig()
        self.model = model or default_action_model()
        self.shadow = AttackerState.initial(scenario) if budget is None \
            else AttackerState.initial(scenario, budget)
        self.prev = None
        self.engaged = set()
        self.invested = {}
        self._open = None  # (target_host, timestamp) of the previous signal

    def _command(self, signal):
        for i in signal.source_events:
            if 0 <= i < len(self.events):
                e = self.events[i]
                if e.kind is EventKind.command:
                    return e.payload
        return None

    def _match(self, signal, menu):
        cmd = self._command(signal)
        cands = [a for a in menu
                 if a.technique_id == signal.technique_id and a.target_host == signal.target_host]
        if cmd is not None:
            exact = [a for a in cands if a.command == cmd]
            if exact:
                return exact[0]
        return cands[0] if cands else None

    def _risks(self, menu):
        risks = self.cfg.detection_risk
        return tuple(sorted({risks[a.technique_id] for a in menu if a.technique_id in risks}))

    def _efv(self, action, state):
        s, t = state.tally.get(action.technique_id, (0, 0))
        prior = self.cfg.technique_priors.get(action.technique_id, 0.5)
        rate = s / t if t else prior
        return rate * action.reward - action.p_detect - action.time_cost / state.budget

    def context(self, signal):
        sh = self.shadow
        if self._open is not None:
            host, t0 = self._open
            self.invested[host] = self.invested.get(host, 0.0) + max(0.0, signal.timestamp - t0)
        self._open = (signal.target_host, signal.timestamp)
        sh.clock = min(sh.budget, max(sh.clock, signal.timestamp))

        menu = enumerate_actions(sh, self.scenario, self.model) if sh.clock < sh.budget else []
        action = self._match(signal, menu)
        key = action.key if action is not None else f"{signal.technique_id}@{signal.target_host}"

        if action is not None:
            efv = self._efv(action, sh)
            name = salience_name(action, self.scenario)
        else:
            efv = 0.0
            name = self.scenario.host(signal.target_host).display_name \
                if self.scenario.has_host(signal.target_host) else signal.target_host
        risks = self._risks(menu)
        if not risks and signal.technique_id in self.cfg.detection_risk:
            risks = (self.cfg.detection_risk[signal.technique_id],)

        ctx = SignalContext(
            signal=signal,
            available_risks=risks,
            prev_signal=self.prev,
            tally_snapshot=dict(sh.tally),
            target_sunk_cost=self.invested.get(signal.target_host, 0.0) / sh.budget,
            expected_future_value=efv,
            target_name=name,
            re_engaged=key in self.engaged,
        )

        ok = bool(signal.succeeded)
        if action is not None:
            self.shadow = apply_outcome(sh, action, ok)
        else:
            s, t = sh.tally.get(signal.technique_id, (0, 0))
            sh.tally[signal.technique_id] = (s + int(ok), t + 1)
        self.engaged.add(key)
        self.prev = signal
        return ctx


def build_contexts(signals, scenario, events=None, cfg=None, model=None, budget=None):
    builder = ContextBuilder(scenario, events, cfg, model, budget)
    return [builder.context(s) for s in signals]

