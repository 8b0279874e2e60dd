"""Exceptions raised by the localization library."""


class LocalizationError(Exception):
    """Base class for all library errors."""


class Unlocalizable(LocalizationError):
    """No anchor is reachable from the node."""


class NotNeighbors(LocalizationError):
    """A range measurement was requested for a pair that shares no edge."""


class EmptyNeighborhood(LocalizationError):
    """A ranging fitness was built from zero neighbors."""


class InsufficientAnchors(LocalizationError):
    """Fewer than two anchors are mutually reachable."""


class NoEstimates(LocalizationError):
    """Every unknown node was skipped, so no error can be averaged."""


class ConfigError(LocalizationError, ValueError):
    """Invalid run configuration or serialized input."""
