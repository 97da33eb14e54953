"""Attacker session loop with telemetry emission."""

from dataclasses import dataclass, field

import numpy as np

from .agent import DEFAULT_BUDGET, AttackerState, step
from .errors import SessionComplete
from .telemetry import emit_events


@dataclass
class SessionTrace:
    state: AttackerState
    events: list = field(default_factory=list)
    actions: list = field(default_factory=list)  # (clock, ActionSpec, succeeded)


def session_streams(seed):
    """Independent decision and telemetry generators for one session seed."""
    dec, tel = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(dec), np.random.default_rng(tel)


def simulate_session(scenario, profile, seed, budget=DEFAULT_BUDGET, model=None,
                     max_steps=None, state=None, actor="session-0"):
    """Run the policy from ``state`` (default: entry host) and record telemetry.

    Stops when the budget is spent, the menu is empty or ``max_steps``
    actions have been taken.
    """
    decide, observe = session_streams(seed)
    state = state.copy() if state is not None else AttackerState.initial(scenario, budget)
    trace = SessionTrace(state)
    n = 0
    while max_steps is None or n < max_steps:
        t = state.clock
        try:
            state, action, ok = step(state, scenario, profile, decide, model)
        except SessionComplete:
            break
        sens = scenario.host(action.target_host).alert_sensitivity
        trace.events.extend(emit_events(action, ok, t, sens, observe, actor))
        trace.actions.append((t, action, ok))
        n += 1
    trace.state = state
    return trace
