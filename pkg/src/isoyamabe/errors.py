"""Exception hierarchy shared across the solver."""

from __future__ import annotations


class IsoYamabeError(Exception):
    """Base class for all solver errors."""


class InvalidSpecError(IsoYamabeError, ValueError):
    """Isoparametric data violate a structural constraint."""


class UnsupportedGeometryError(IsoYamabeError):
    """Operation is only defined for a subset of geometries (e.g. ell=2)."""


class IntegrationError(IsoYamabeError):
    """Adaptive integration broke down; carries the last accepted state."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class BracketError(IsoYamabeError, ValueError):
    """A root bracket does not contain a sign change."""


class LiftInconsistencyError(IsoYamabeError):
    """No lift of the phase angle agrees with the observed zero count."""


class ConsistencyError(IsoYamabeError):
    """Two independent routes to the same quantity disagree."""


class BudgetError(IsoYamabeError):
    """Adaptive refinement exceeded its sample budget."""


class RangeError(IsoYamabeError):
    """A requested angle is not attained inside the scanned range."""


class SeedRejectedError(IsoYamabeError):
    """Root refinement from a seed diverged."""


class WrongBranchError(IsoYamabeError):
    """A converged match has the wrong number of zeroes."""


class NotFoundError(IsoYamabeError):
    """No seed refined to a solution with the requested zero count."""
