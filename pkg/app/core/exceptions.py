class PricingLabError(Exception):
    """Base class for every error raised by the pricing services."""


class ConfigError(PricingLabError, ValueError):
    """Invalid input: bad spec document, out-of-range parameter, violated precondition."""


class AssumptionError(ConfigError):
    """A structural hypothesis (continuous distribution, moment bound) does not hold."""


class StatisticalError(PricingLabError):
    """Runtime statistical failure, e.g. a Monte Carlo estimate that does not converge."""
