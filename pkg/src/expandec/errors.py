"""Exception types shared across the package."""


class ExpandecError(Exception):
    """Base class for all package errors."""


class FormatError(ExpandecError):
    """Malformed graph text or invalid construction input."""


class DegenerateCut(ExpandecError):
    """Cut statistics requested for the empty set or the full vertex set."""


class MissingEdge(ExpandecError):
    """Edge removal requested for an edge that is not present."""


class TooLarge(ExpandecError):
    """Instance exceeds the size an exhaustive oracle is willing to handle."""


class Disconnected(ExpandecError):
    """Operation requires a connected graph."""


class BadPhi(ExpandecError):
    """Conductance parameter outside the accepted range."""


class BadEpsilon(ExpandecError):
    """Edge-fraction parameter outside (0, 1)."""


class Infeasible(ExpandecError):
    """Generator parameters admit no graph (e.g. odd degree sum)."""


class BandwidthExceeded(ExpandecError):
    """A single message exceeded the per-edge per-round bit budget."""

    def __init__(self, edge, bits, budget):
        super().__init__(f"message of {bits} bits on edge {edge} exceeds budget {budget}")
        self.edge = edge
        self.bits = bits
        self.budget = budget


class DepthExceeded(ExpandecError):
    """Split recursion ran past its proven depth bound (bug signal)."""


class LevelOverflow(ExpandecError):
    """Trim phase tried to advance past the last level (bug signal)."""


class IterationOverflow(ExpandecError):
    """Trim phase exceeded its per-level iteration budget (bug signal)."""


class BudgetExceeded(ExpandecError):
    """Decomposition removed more edges than its contract allows."""


class VerificationError(ExpandecError):
    """Run output failed re-verification against the original graph."""
