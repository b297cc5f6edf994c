"""Exception taxonomy shared across the laboratory.

Every failure mode that callers are expected to branch on gets its own
class; generic misuse stays with the builtin ValueError/TypeError.
"""

from __future__ import annotations


class SkewlocError(Exception):
    """Base class for all laboratory-specific failures."""


class ConfigError(SkewlocError):
    """Invalid or inconsistent configuration (bad schedule, bad flag value)."""


class SingularityGuard(SkewlocError):
    """An orbit point landed within the guard tolerance of the potential pole.

    Attributes
    ----------
    site : int or None
        Lattice site whose orbit point triggered the guard.
    distance : float or None
        Circle distance of the offending point to the pole locus.
    """

    def __init__(self, msg: str, site: int | None = None, distance: float | None = None):
        super().__init__(msg)
        self.site = site
        self.distance = distance


class IllConditioned(SkewlocError):
    """Matrix inversion exceeded the configured condition cap."""

    def __init__(self, msg: str, cond: float | None = None):
        super().__init__(msg)
        self.cond = cond


class DecayViolation(SkewlocError):
    """Hopping coefficients do not respect the declared exponential envelope."""


class SymmetryViolation(SkewlocError):
    """Hopping coefficients are not hermitian under offset negation."""


class ConvergenceFailure(SkewlocError):
    """An iterative or library solver failed to converge."""


class InsufficientData(SkewlocError):
    """Too few points in the requested regime to produce a meaningful fit."""


class InfeasibleCover(SkewlocError):
    """The requested interval cannot be covered by windows of the given size."""


class HypothesisFailed(SkewlocError):
    """Patching hypotheses failed on one or more sub-windows.

    Attributes
    ----------
    windows : list
        The offending sub-windows.
    report : object or None
        Partial verification report gathered before the failure.
    """

    def __init__(self, msg: str, windows=None, report=None):
        super().__init__(msg)
        self.windows = list(windows) if windows is not None else []
        self.report = report


class TruncationBreach(SkewlocError):
    """Wave-function mass reached the edge of the truncated momentum lattice."""
