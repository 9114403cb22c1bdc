"""Exception types shared across the package."""


class PlanarColorError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(PlanarColorError):
    """Invalid parameter (nonfinite intensity, window too small, bad schedule)."""


class PreconditionError(PlanarColorError):
    """An operation's documented precondition does not hold."""


class DegenerateInput(PlanarColorError):
    """Geometric input the map builder cannot triangulate (collinear, duplicates)."""


class SymmetryDetected(PlanarColorError):
    """The configuration admits a nontrivial symmetry: signatures cannot separate
    points, so no canonical local choice exists."""


class BoundaryCensored(PlanarColorError):
    """The query's answer would depend on unobserved territory beyond the window;
    we refuse to answer rather than guess."""


class ExhaustionFailed(PlanarColorError):
    """No cycle survived the construction; carries coverage statistics."""

    def __init__(self, message, stats=None):
        super().__init__(message)
        self.stats = stats or {}


class SurgeryFailed(PlanarColorError):
    """No admissible connector pair found for an odd cycle that required surgery."""


class FourColorBudgetExceeded(PlanarColorError):
    """Exact 4-coloring search exceeded its node budget."""


class InternalInvariantViolation(PlanarColorError):
    """A property the construction guarantees was observed to fail; always a bug
    or a corridor-width issue, never to be silenced."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class FormatError(PlanarColorError):
    """Artifact text could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
