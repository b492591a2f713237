"""Exception types shared across the seamcheck package."""


class SeamcheckError(Exception):
    """Base class for every error raised by this package."""


class MalformedFile(SeamcheckError):
    """Image bytes are not a parseable PPM or PNG file."""


class UnsupportedFormat(SeamcheckError):
    """The file parses but uses a feature outside the supported subset."""


class KernelTooLarge(SeamcheckError):
    """Smoothing kernel does not fit inside the image."""


class DegenerateHistogram(SeamcheckError):
    """Fewer than two occupied intensity levels; no threshold can split the histogram."""


class EmptyImage(SeamcheckError):
    """Binary image contains no foreground pixels."""


class NoSupport(SeamcheckError):
    """No foreground pixel lies near the candidate path."""


class PathOutsideImage(SeamcheckError):
    """No sample point of the path lands inside the image."""


class OverlappingBands(SeamcheckError):
    """Configured color bands are not pairwise disjoint."""


class ConfigError(SeamcheckError):
    """Inspection configuration is malformed or inconsistent."""


class SpecInvalid(SeamcheckError):
    """Scene specification violates its invariants."""
