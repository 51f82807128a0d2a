"""Exception hierarchy shared by all cellhom modules."""


class CellhomError(Exception):
    """Base class for every error raised by cellhom."""


class DomainError(CellhomError, ValueError):
    """A scalar argument lies outside its admissible range."""


class SingularMatrixError(CellhomError, ArithmeticError):
    def __init__(self, det, message=None):
        self.det = det
        super().__init__(message or f"matrix is singular (det = {det:.3e})")


class SymmetryError(CellhomError, ValueError):
    """A matrix does not have the symmetry an operation requires."""


class DefinitenessError(CellhomError, ValueError):
    """Effective moduli are not all positive."""


class GeometryError(CellhomError, ValueError):
    """The periodicity cell description is invalid."""


class MeshError(CellhomError, ValueError):
    """Mesh generation or element evaluation failed."""


class SolverError(CellhomError, RuntimeError):
    def __init__(self, message, residuals=None):
        self.residuals = list(residuals or [])
        super().__init__(message)


class ConfigError(CellhomError, ValueError):
    """A run configuration could not be parsed or validated."""
