"""Exception hierarchy shared across the package."""


class SwarmOptError(Exception):
    """Base class for all package errors."""


class ConfigError(SwarmOptError, ValueError):
    pass


# space
class PointOutOfSpace(SwarmOptError, ValueError):
    pass


class UnitCoordinateOutOfRange(SwarmOptError, ValueError):
    pass


class ContinuousDimensionInGrid(SwarmOptError, ValueError):
    pass


# gp
class NotPositiveDefinite(SwarmOptError, ArithmeticError):
    pass


class AllCandidatesFailed(SwarmOptError, ArithmeticError):
    pass


# acquisition
class BatchDegenerate(SwarmOptError):
    pass


# strategy
class GridExhausted(SwarmOptError):
    pass


class NoCompletedTrials(SwarmOptError):
    pass


class UnknownTrial(SwarmOptError, KeyError):
    pass


class DuplicateTell(SwarmOptError):
    pass


# transport
class PortClosed(SwarmOptError, ConnectionError):
    pass


class WouldBlock(SwarmOptError):
    pass


class AgentSpawnFailure(SwarmOptError):
    pass


class ProtocolError(SwarmOptError):
    """A peer violated the coordinator/agent message protocol."""
