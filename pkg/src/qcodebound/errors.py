"""Exception hierarchy shared by all modules."""


class QCodeBoundError(Exception):
    """Base class for package errors."""


class DimensionError(QCodeBoundError, ValueError):
    """Operands have incompatible lengths, moduli or matrix sizes."""


class ValidationError(QCodeBoundError, ValueError):
    """Input data violates a structural requirement (TP, CP, normalization)."""


class ResourceError(QCodeBoundError):
    """An exact enumeration or dense simulation cap would be exceeded."""


class InvariantViolation(QCodeBoundError):
    """A checked mathematical identity or inequality failed."""


class SolverInconsistencyError(InvariantViolation):
    """Two independent solvers disagree beyond tolerance."""


class UnsupportedDimensionError(QCodeBoundError, ValueError):
    """Operation is only defined for a specific local dimension."""
