"""Exception types shared across the engine."""


class ChoreBenchError(Exception):
    """Base class for all engine errors."""


class TdlError(ChoreBenchError):
    """Malformed or invalid task definition source."""

    def __init__(self, message, source=None, line=None, col=None):
        self.source = source
        self.line = line
        self.col = col
        where = ""
        if source:
            where = f" [{source}]"
        if line is not None:
            where += f" (line {line}, col {col})"
        super().__init__(message + where)


class LibraryError(ChoreBenchError):
    """Cross-task resolution failure (duplicate name, missing target, cycle, arity)."""


class WorldError(ChoreBenchError):
    """Invalid world state or unknown property."""


class DefinitionError(ChoreBenchError):
    """A structurally valid task that cannot be evaluated (e.g. missing anchor)."""


class ScenarioError(ChoreBenchError):
    """Scenario generation could not satisfy task preconditions."""


class PlanningError(ChoreBenchError):
    """No path to the requested target."""


class ReplayDivergence(ChoreBenchError):
    def __init__(self, index, message):
        self.index = index
        super().__init__(f"replay diverged at action {index}: {message}")


class ProtocolViolation(ChoreBenchError):
    """Peer sent a message the wire protocol does not allow."""
