"""
Exception hierarchy shared by the geometry, meshing, solver and analysis layers.
"""

from typing import Optional, Sequence


class LabError(Exception):
    """Base class for every error raised by the laboratory."""


class ConfigError(LabError):
    """Experiment configuration could not be loaded or validated."""

    def __init__(self, message: str, errors: Optional[Sequence[str]] = None):
        super().__init__(message)
        self.errors = list(errors or [])


class GeometryError(LabError, ValueError):
    """Invalid polygon, profile or dumbbell parameters."""


class InfeasiblePlacementError(GeometryError):
    """An obstacle translate leaves the domain or violates the clearance."""

    def __init__(self, message: str, y: Optional[Sequence[float]] = None, clearance: Optional[float] = None):
        super().__init__(message)
        self.y = tuple(y) if y is not None else None
        self.clearance = clearance


class MeshingError(LabError):
    """The mesher rejected its input."""


class MeshQualityError(MeshingError):
    """Requested angle bound could not be reached."""

    def __init__(self, message: str, worst_angle: float, feature: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.worst_angle = worst_angle
        self.feature = tuple(feature) if feature is not None else None


class SolverError(LabError):
    """Factorization or eigensolver failure."""


class SolverConvergenceError(SolverError):
    """Eigenpairs did not reach the requested residual within the iteration budget."""

    def __init__(self, message: str, residuals: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.residuals = list(residuals or [])


class SignConventionError(SolverError):
    """A ground state has genuinely mixed sign."""


class AnalysisError(LabError, ValueError):
    """A diagnostic was asked for something the data cannot provide."""


class InapplicableHypothesisError(LabError):
    """The assumptions behind a diagnostic (for example lambda < mu for connector decay) do not hold.

    This is reported rather than counted as a failure.
    """


class OracleError(LabError, ValueError):
    """Reference computation outside its supported range."""
