"""Exception hierarchy.

Every numerical failure raised by the library derives from :class:`SVLabError`;
the class name is what the CLI reports, so names are kept stable.
"""


class SVLabError(Exception):
    """Base class for all library errors."""


class UsageError(SVLabError, ValueError):
    """Invalid user input (bad config, bad flag combination)."""


# model_core
class NonFiniteParameter(UsageError):
    pass


class NonPositiveRate(UsageError):
    pass


class UnsupportedGamma(UsageError):
    pass


class UnknownPreset(UsageError, KeyError):
    pass


# sde_engine
class StabilityGuard(UsageError):
    """dt * a exceeds the accuracy guard, or other malformed SimConfig."""


class MemoryCapExceeded(SVLabError):
    pass


class LagNotOnGrid(UsageError):
    pass


class InsufficientHorizon(SVLabError):
    pass


class NonFiniteState(SVLabError):
    """A trajectory overflowed; Euler steps can explode for superlinear coefficients."""


# moment_engine
class ChainDoesNotClose(SVLabError):
    pass


class ToleranceNotMet(SVLabError):
    pass


class UnsupportedExponents(SVLabError):
    pass


class NotGarch(SVLabError):
    pass


class DivergentMoment(SVLabError):
    pass


# stationary_dist
class NonPositiveArgument(SVLabError, ValueError):
    pass


class NotNormalizable(SVLabError):
    pass


class QuadratureFailure(SVLabError):
    pass


class UnnormalizedInput(SVLabError):
    pass


class MomentDiverges(SVLabError):
    pass


# short_time
class DegenerateExponent(SVLabError):
    pass


class UnsupportedClass(SVLabError):
    pass


class OutOfDomain(SVLabError, ValueError):
    pass


class MinimizationFailure(SVLabError):
    pass


# autocorr
class UnsupportedOrder(SVLabError):
    pass


class NonPositiveResidual(SVLabError):
    pass


# estimators
class InsufficientTail(SVLabError):
    pass


class DegenerateSample(SVLabError):
    pass


class EmptySample(SVLabError):
    pass


class NonMonotoneCdf(SVLabError):
    pass
