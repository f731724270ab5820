"""Semantic exception hierarchy shared by all mmsekit modules.

Every failure mode that callers may want to catch programmatically gets its
own class; generic misuse (wrong argument types, malformed shapes) raises
plain ValueError/TypeError instead.
"""

__all__ = [
    "MmsekitError",
    "RankDeficient",
    "RankDeficientEverywhere",
    "RankDeficiencyRateExceeded",
    "NotSymmetric",
    "NotPSD",
    "NonFiniteSample",
    "ToleranceNotMet",
    "DomainError",
    "NumericalUnderflow",
    "DegenerateWeights",
    "UnsupportedStrategy",
    "EmptyGrid",
    "WrongChannel",
    "PriorHasNoDensity",
    "SoundnessViolation",
]


class MmsekitError(Exception):
    """Base class for all semantic mmsekit failures."""


class RankDeficient(MmsekitError):
    """A matrix required to have full column rank does not, numerically."""


class RankDeficientEverywhere(MmsekitError):
    """Every probe point of a grid produced a rank-deficient Jacobian."""


class RankDeficiencyRateExceeded(MmsekitError):
    """Rank-deficient draws occurred too often for an almost-sure assumption."""


class NotSymmetric(MmsekitError):
    """A matrix required to be symmetric is not, beyond tolerance."""


class NotPSD(MmsekitError):
    """A matrix required to be positive semidefinite has a negative eigenvalue."""


class NonFiniteSample(MmsekitError):
    """A Monte Carlo integrand produced NaN or infinity."""


class ToleranceNotMet(MmsekitError):
    """Adaptive quadrature could not reach the requested tolerance."""


class DomainError(MmsekitError):
    """A point lies outside the domain of a channel or prior."""


class NumericalUnderflow(MmsekitError):
    """All sampled conditional densities underflowed; the estimate is meaningless."""


class DegenerateWeights(MmsekitError):
    """Importance weights collapsed onto too few samples (tiny effective size)."""


class UnsupportedStrategy(MmsekitError):
    """The requested marginal strategy cannot serve this operation or model pair."""


class EmptyGrid(MmsekitError):
    """A grid-based operation received no probe points."""


class WrongChannel(MmsekitError):
    """An operation specialized to one channel family received another."""


class PriorHasNoDensity(MmsekitError):
    """A density-based quantity was requested for a discrete or mixed prior."""


class SoundnessViolation(MmsekitError):
    """A reported lower bound exceeded its MMSE reference beyond tolerance."""
