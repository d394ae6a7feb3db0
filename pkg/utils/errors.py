"""Exception hierarchy for Copter."""


class CopterError(Exception):
    """Base class for every error raised by Copter services."""


class DataError(CopterError, ValueError):
    """Input data or model files do not satisfy their contract."""


class ConfigError(DataError):
    """Configuration file or override is malformed."""


# ===== NETWORK =====

class ParseError(DataError):
    """A CSV row could not be parsed."""

    def __init__(self, line: int, reason: str, source: str = ""):
        self.line = line
        self.reason = reason
        self.source = source
        where = f"{source}:{line}" if source else f"line {line}"
        super().__init__(f"{where}: {reason}")


class DanglingReference(DataError):
    """An edge references a node or schedule that does not exist."""

    def __init__(self, edge_id: str, missing: str):
        self.edge_id = edge_id
        self.missing = missing
        super().__init__(f"edge {edge_id!r} references missing {missing!r}")


class InvariantViolation(DataError):
    """A graph, schedule or query invariant does not hold."""


class NoService(CopterError):
    """No remaining departure on a scheduled edge."""

    def __init__(self, edge_id: str, departure_time: float):
        self.edge_id = edge_id
        self.departure_time = departure_time
        super().__init__(f"no departure on edge {edge_id!r} at or after t={departure_time:g}s")


# ===== MODE LANGUAGES =====

class RegexSyntaxError(DataError):
    """Malformed mode regular expression."""

    def __init__(self, position: int, reason: str, text: str = ""):
        self.position = position
        self.reason = reason
        self.text = text
        super().__init__(f"position {position}: {reason} in {text!r}")


class EmptyLanguage(CopterError):
    """No language element is eligible for a traveler."""


# ===== PLANNING =====

class UnknownEvaluative(DataError):
    """A cost weight names an evaluative function that does not exist."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown evaluative function {name!r}")


# ===== MODELS =====

class SchemaMismatch(DataError):
    """Attributes or features do not conform to a model's schema."""


class EmptyDataset(DataError):
    """A dataset has no usable rows."""


class Degenerate(DataError):
    """The choice data cannot identify the model parameters."""


class LengthMismatch(DataError):
    """Predictions and truth have different lengths."""


class Separable(DataError):
    """Outcomes are perfectly separated by the covariate."""


class AllSameOutcome(DataError):
    """Every record has the same outcome."""


# ===== SIMULATION =====

class InsufficientTrials(DataError):
    """Fewer than two trials per condition."""


class EmptySource(DataError):
    """A population source has no rows."""
