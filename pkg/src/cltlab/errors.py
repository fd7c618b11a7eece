"""Exception types shared across the package."""


class CltLabError(Exception):
    """Base class for all package-specific errors."""


class NotStochastic(CltLabError):
    """A transition matrix has a malformed shape, negative entries, or bad row sums."""


class Reducible(CltLabError):
    """The transition graph is not strongly connected, so ergodicity fails."""


class WindowMismatch(CltLabError):
    """A word does not match the coordinate window of a cylinder function."""


class SidednessMismatch(CltLabError):
    """An operation requires the other sidedness (invertible vs. non-invertible shift)."""


class InvalidIndex(CltLabError):
    """A filtration or coordinate index is out of range for the model."""


class CapExceeded(CltLabError):
    """A cylinder table would exceed the configured window cap."""


class Diverging(CltLabError):
    """A series shows no decay and cannot be summed at the requested damping."""


class NonSummable(CltLabError):
    """Series terms fail to fall below tolerance within the iteration budget."""


class DegenerateSigma(CltLabError):
    """A distributional test was requested with (numerically) zero variance."""


class ConfigError(CltLabError):
    """An experiment configuration file is malformed or inconsistent."""
