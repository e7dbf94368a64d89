"""Exception types shared across the package."""


class LevyEstError(Exception):
    """Base class for all package-specific errors."""


class NonPositiveGap(LevyEstError):
    """A sampling gap is zero or negative."""


class GapExceedsDeltaMax(LevyEstError):
    """A sampling gap exceeds the declared upper bound."""


class LengthMismatch(LevyEstError):
    """Observations and weights disagree in length."""


class NoJumpRepresentation(LevyEstError):
    """The model has no pure-jump representation."""


class NoDensity(LevyEstError):
    """The requested marginal law has no square-integrable density."""


class GridTooNarrow(LevyEstError):
    """The frequency grid does not cover the requested cutoff 1/h."""


class PlanTooSmall(LevyEstError):
    """Too few observations for the cross-validation block plan."""


class NoRootInUnitInterval(LevyEstError):
    """The implicit bandwidth equation has no root in (0, 1]."""


class BracketFailure(LevyEstError):
    """Root bracketing or the monotonicity pre-scan failed."""


class ConfigError(LevyEstError):
    """Invalid experiment configuration."""
