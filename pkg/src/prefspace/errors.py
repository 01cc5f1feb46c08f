"""Exception types raised by the library."""


class DegenerateSample(ValueError):
    """A minimal sample set does not determine a model (coincident or collinear points)."""


class PoolExhausted(RuntimeError):
    """Too many consecutive degenerate draws while sampling a model pool."""


class FormatError(ValueError):
    """A dataset or config file is malformed."""


class SingleClass(ValueError):
    """ROC AUC requested for labels containing a single class."""
