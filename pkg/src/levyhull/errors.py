"""Exception types shared across the package."""


class LevyHullError(Exception):
    """Base class for all package errors."""


class ParameterError(LevyHullError, ValueError):
    """A model or operation parameter is outside its admissible domain."""


class RegimeError(LevyHullError, ValueError):
    """The model does not satisfy the assumptions of the requested statistic."""


class PathError(LevyHullError, ValueError):
    """A path record or face sequence is malformed or inconsistent."""


class TruncationError(LevyHullError, ValueError):
    """A truncated stick record is too coarse for the requested quantity."""


class UnsupportedExactnessError(LevyHullError, ValueError):
    """Exact jump records were requested for a model without finite activity."""


class DivergentIntegralError(LevyHullError, ArithmeticError):
    """An integral against the jump measure diverges for these parameters."""


class SampleSizeError(LevyHullError, ValueError):
    """A statistical routine received fewer data points than it supports."""


class ConfigError(LevyHullError, ValueError):
    """An experiment configuration is invalid or inconsistent."""
