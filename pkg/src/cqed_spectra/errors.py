"""Exception and warning types shared by every solver module.

The hierarchy is shallow on purpose.  The command-line front end only needs to
tell three families apart (bad input, solver failure, file-system trouble), and
it maps them to distinct exit codes.
"""

from __future__ import annotations


class CqedError(Exception):
    """Base class of all package errors."""


class InputError(CqedError, ValueError):
    """A precondition on user-supplied parameters is violated."""


class SolverError(CqedError, RuntimeError):
    """A numerical procedure failed to deliver a trustworthy answer."""


class SchemaError(InputError):
    """A scenario file does not satisfy the published schema."""


class IoError(CqedError, OSError):
    """Reading or writing an artifact failed."""


# -- circuit --------------------------------------------------------------
class NonPositiveEnergy(InputError):
    pass


class OutOfRangePosition(InputError):
    pass


# -- transmon -------------------------------------------------------------
class TruncationTooSmall(InputError):
    pass


class SumNotConverged(SolverError):
    pass


# -- spectra --------------------------------------------------------------
class RootBracketFailure(SolverError):
    pass


class NewtonDiverged(SolverError):
    def __init__(self, mode_index: int, message: str = "") -> None:
        self.mode_index = mode_index
        super().__init__(message or f"Newton iteration diverged for mode {mode_index}")


class RootCollision(SolverError):
    def __init__(self, indices: tuple[int, int], message: str = "") -> None:
        self.indices = indices
        super().__init__(message or f"seeds {indices} converged to the same root")


class NonPositiveEntry(InputError):
    pass


# -- greens / linear ------------------------------------------------------
class PoleProximity(InputError):
    pass


class BarePoleProximity(InputError):
    pass


class MisclassifiedPole(SolverError):
    def __init__(self, last_good_chi_g: float, message: str = "") -> None:
        self.last_good_chi_g = last_good_chi_g
        super().__init__(message or f"pole tracking lost after chi_g={last_good_chi_g:g}")


class DegeneratePole(SolverError):
    pass


# -- mspt -----------------------------------------------------------------
class NonPositiveEigenvalue(SolverError):
    pass


class UnboundedInitialCondition(InputError):
    pass


class NonProductState(InputError):
    pass


# -- volterra -------------------------------------------------------------
class StepUnstable(SolverError):
    pass


class DimensionMismatch(InputError):
    pass


class TruncationWarning(UserWarning):
    """Raised through :mod:`warnings` when a Fock-dimension bump test fails."""


# -- rabi -----------------------------------------------------------------
class SeriesNotConverged(SolverError):
    pass


# -- dispersive -----------------------------------------------------------
class OnResonance(InputError):
    pass


class IntegralDiverges(SolverError):
    """Flagged outcome of the continuum quadrature for unsuppressed couplings."""


class UnstablePoleWarning(UserWarning):
    """A root of the truncated characteristic function lies in ``Re s > 0``."""
