"""Exception hierarchy."""

from __future__ import annotations

from typing import Any


class StokesMagnetoError(Exception):
    """Root of every error raised by this package."""


class ConfigError(StokesMagnetoError):
    """Experiment configuration or input file is invalid."""


class GridMismatchError(StokesMagnetoError):
    """Fields or samples live on incompatible grids."""


class ComponentMismatchError(StokesMagnetoError):
    """A field has the wrong number of components for the operation."""


class ZeroMeanError(StokesMagnetoError):
    """A negative-order multiplier was applied to a field with nonzero mean."""


class AliasError(StokesMagnetoError):
    """A pseudo-spectral product would not be alias-free on this grid."""


class ParameterRangeError(StokesMagnetoError):
    """Physical or numerical parameters lie outside the admissible range."""


class IndexRelationError(StokesMagnetoError):
    """Exponents of an interpolation inequality violate its index relation."""


class PreconditionError(StokesMagnetoError):
    """An operation's input fails a measured precondition."""

    def __init__(self, message: str, residual: float | None = None) -> None:
        super().__init__(message)
        self.residual = residual


class QuadratureError(StokesMagnetoError):
    """Adaptive quadrature did not converge."""


class SimulationAbort(StokesMagnetoError):
    """Time stepping stopped before reaching the final time."""

    def __init__(self, message: str, t: float) -> None:
        super().__init__(message)
        self.t = t


class BlowUpError(SimulationAbort):
    """Non-finite values or runaway growth of the magnetic energy."""


class CFLError(SimulationAbort):
    """Time step exceeds the advective stability budget."""


class CheckFailure(StokesMagnetoError):
    """A verification check did not meet its acceptance threshold."""

    def __init__(self, message: str, report: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.report = report or {}
