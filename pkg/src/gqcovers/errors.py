"""Exception classes shared across the package.

User-input problems raise ValueError subclasses; violations of facts the
engine is supposed to be able to rely on (which would indicate an upstream
bug, not bad input) raise ConsistencyViolation; search limits raise
BudgetExceeded.
"""


class EmptyGeometryError(ValueError):
    """Structure has no points and no lines; distinct from an axiom failure."""


class MissingCoordinatesError(ValueError):
    """Operation needs ambient coordinates but the geometry carries none."""


class HypothesisError(ValueError):
    """The stated hypotheses of the requested check do not hold for the input."""


class ConsistencyViolation(RuntimeError):
    """A structural invariant the engine relies on failed; indicates an
    internal bug rather than bad user input."""


class BudgetExceeded(RuntimeError):
    """A configurable search budget (node or closure count) was exhausted."""
