"""Exception hierarchy.

Every error raised by the package derives from :class:`NetworkError`, and the
validation-flavoured ones also derive from :class:`ValueError` so callers that
only know about the builtin keep working.
"""


class NetworkError(Exception):
    """Base class for all package errors."""


class GraphError(NetworkError, ValueError):
    """Malformed graph input."""


class DuplicateEdge(GraphError):
    pass


class NonPositiveResistance(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class IsolatedVertexSpecMismatch(GraphError):
    """A declared vertex has no incident edge, or a weight table misses one."""


class UnknownVertex(NetworkError, KeyError):
    pass


class BadSpec(NetworkError, ValueError):
    """Unparseable or out-of-range generator specification."""


class BadDepth(NetworkError, ValueError):
    pass


class Disconnected(NetworkError, ValueError):
    pass


class EdgeNotInGraph(NetworkError, KeyError):
    pass


class WitnessOutsideTruncation(NetworkError, ValueError):
    pass


class NotSeparable(NetworkError, ValueError):
    pass


class DominanceViolated(NetworkError, AssertionError):
    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class DomainMismatch(NetworkError, ValueError):
    """A vertex function does not match the host graph."""


class BoundaryDataMissing(NetworkError, KeyError):
    pass


class DisconnectedFromBoundary(NetworkError, ValueError):
    pass


class SolverDiverged(NetworkError, RuntimeError):
    pass


class HostTooLarge(NetworkError, ValueError):
    pass


class NotAChain(NetworkError, ValueError):
    pass


class IncompleteBoundaryCondition(NetworkError, KeyError):
    pass


class MethodCapExceeded(NetworkError, ValueError):
    pass


class StepFailure(NetworkError, RuntimeError):
    pass


class CheckFailed(NetworkError, AssertionError):
    """A numerical invariant did not hold.

    ``invariant`` names the property and ``sample`` carries a JSON-friendly
    description of the offending input.
    """

    def __init__(self, invariant, message="", sample=None):
        super().__init__(f"{invariant}: {message}" if message else invariant)
        self.invariant = invariant
        self.sample = sample

    def to_dict(self):
        return {"invariant": self.invariant, "message": str(self), "sample": self.sample}


class BoundViolated(CheckFailed):
    pass


class ConfigError(NetworkError, ValueError):
    pass
