"""scikit-learn facade over the CogVuln sensor.

Each sample is one session's event log (a list of EventRecord or JSONL
text).  ``transform`` gives the final normalized beliefs, one column per
bias, and ``predict`` gives the argmax bias name.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .cogvuln import SensorConfig, argmax_bias, normalize_beliefs, run_sensor
from .context import ContextBuilder
from .mats import default_rules, map_events
from .range_model import BIASES, load_canonical_scenario
from .telemetry import parse_event_log


class CogVulnSensor(TransformerMixin, BaseEstimator):
    """Stateless bias sensor; ``fit`` only validates the parameters."""

    def __init__(self, scenario=None, eta_loss=0.1, eta_base=0.07, decay=0.02, eta_avail=0.1,
                 alpha_sunk=0.1, salience_threshold=0.8):
        self.scenario = scenario
        self.eta_loss = eta_loss
        self.eta_base = eta_base
        self.decay = decay
        self.eta_avail = eta_avail
        self.alpha_sunk = alpha_sunk
        self.salience_threshold = salience_threshold

    def _config(self):
        return SensorConfig(eta_loss=self.eta_loss, eta_base=self.eta_base, decay=self.decay,
                            eta_avail=self.eta_avail, alpha_sunk=self.alpha_sunk,
                            salience_threshold=self.salience_threshold)

    def fit(self, X, y=None):
        self.config_ = self._config()
        self.scenario_ = self.scenario if self.scenario is not None else load_canonical_scenario()
        self.rules_ = default_rules()
        self.feature_names_out_ = np.array([b.value for b in BIASES], dtype=object)
        self.n_features_in_ = 1
        return self

    def _beliefs(self, events):
        if isinstance(events, str):
            events = parse_event_log(events)
        signals = map_events(events, self.rules_)
        builder = ContextBuilder(self.scenario_, events, self.config_)
        final = run_sensor(signals, builder, self.config_)[-1]
        return normalize_beliefs(final)

    def transform(self, X):
        if not hasattr(self, "config_"):
            self.fit(X)
        rows = [self._beliefs(ev) for ev in X]
        return np.array([[r[b] for b in BIASES] for r in rows], dtype=float).reshape(len(rows), len(BIASES))

    def predict(self, X):
        Z = self.transform(X)
        return np.array([argmax_bias(dict(zip(BIASES, z))).value for z in Z], dtype=object)

    def score(self, X, y):
        return float(np.mean(self.predict(X) == np.asarray(y, dtype=object)))

    def get_feature_names_out(self, input_features=None):
        return np.array([b.value for b in BIASES], dtype=object)
