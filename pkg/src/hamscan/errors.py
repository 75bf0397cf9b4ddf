"""Exception types shared across the package."""


class HamscanError(Exception):
    """Base class for all package-specific failures."""


class AllWeightsZero(HamscanError):
    """Every particle weight underflowed to zero during a Bayes update."""


class DegenerateCovariance(HamscanError):
    """Posterior covariance contains non-finite entries."""


class DegeneratePrior(HamscanError):
    """A particle cloud cannot supply two usable hypothesis draws."""


class NonUniformLocal(HamscanError):
    """A local cloud was merged back without uniform weights."""


class ConfigError(HamscanError):
    """Run configuration failed validation."""
