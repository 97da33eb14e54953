"""Exception hierarchy shared by every subsystem."""


class CogDecoyError(Exception):
    """Base class for all package errors."""


class ValidationError(CogDecoyError):
    """Input failed validation (maps to CLI exit code 1)."""


class UnknownBiasCode(ValidationError):
    pass


class MalformedTriggerId(ValidationError):
    pass


class ConfigError(ValidationError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class ScenarioInvalid(ValidationError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class StateInconsistent(CogDecoyError):
    pass


class SessionComplete(CogDecoyError):
    """Raised by the attacker policy when no action remains."""


class ParseError(ValidationError):
    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class AmbiguousMapping(CogDecoyError):
    def __init__(self, event_index, rule_ids):
        self.event_index = event_index
        self.rule_ids = list(rule_ids)
        super().__init__(
            f"event {event_index} matches rules with different techniques: "
            + ", ".join(self.rule_ids)
        )


class UnknownTechniqueRisk(CogDecoyError):
    pass


class UnknownTechniquePrior(CogDecoyError):
    pass


class SalienceConfigEmpty(ValidationError):
    pass


class SensorError(CogDecoyError):
    def __init__(self, signal_index, cause):
        self.signal_index = signal_index
        self.cause = cause
        super().__init__(f"signal {signal_index}: {cause}")


class NotNormalized(ValidationError):
    pass


class HorizonEmpty(ValidationError):
    pass


class InsufficientGroups(ValidationError):
    pass


class NoGroundTruth(CogDecoyError):
    pass
