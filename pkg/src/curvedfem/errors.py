"""Exception types raised across the package."""


class CurvedFemError(Exception):
    """Base class for all package errors."""


class DegenerateTriangle(CurvedFemError, ValueError):
    pass


class NonpositiveJacobian(CurvedFemError, ValueError):
    """A curved correction is not orientation preserving somewhere on its core."""

    def __init__(self, message, element=None):
        super().__init__(message)
        self.element = element


class NewtonDivergence(CurvedFemError, RuntimeError):
    pass


class PointOutsideElement(CurvedFemError, ValueError):
    pass


class UnsupportedDegree(CurvedFemError, ValueError):
    pass


class EmptyMesh(CurvedFemError, ValueError):
    pass


class DimensionMismatch(CurvedFemError, ValueError):
    pass


class NotConverged(CurvedFemError, RuntimeError):
    """Raised by the iterative solver; carries the final ``SolveStats``."""

    def __init__(self, message, stats=None):
        super().__init__(message)
        self.stats = stats


class InvalidRateInput(CurvedFemError, ValueError):
    pass


class DegenerateRHS(CurvedFemError, ArithmeticError):
    pass
