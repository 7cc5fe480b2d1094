"""Exception types shared across the package."""


class BipmatchError(Exception):
    """Base class for all domain errors raised by this package."""


class ConditioningFailed(BipmatchError):
    """Degree sampling could not produce two sequences with equal totals."""


class EmptyNeighborhood(BipmatchError):
    """A matching criterion was asked to choose from zero candidates."""


class HalfEdgeImbalance(BipmatchError):
    """Internal guard: the open half-edge counts of the two sides diverged."""


class DegenerateMeasure(BipmatchError):
    """A moment required as a denominator fell below the numeric floor."""


class StepTooLarge(BipmatchError):
    """An integration step moved some mass by more than the trust threshold."""


class InvalidParameter(BipmatchError):
    """A model parameter is outside its admissible range."""


class GraphFormatError(BipmatchError):
    """An edge-list file or string could not be parsed."""
