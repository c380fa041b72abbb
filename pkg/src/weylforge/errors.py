"""Exception types raised across weylforge."""


class WeylforgeError(Exception):
    """Base class for all library errors."""


class SingularInput(WeylforgeError, ValueError):
    pass


class AmbiguousCommensurability(WeylforgeError):
    """The integer-relation search could neither confirm nor rule out a
    common generator at the configured denominator bound."""


class OutOfRange(WeylforgeError, ValueError):
    pass


class RankTolerance(WeylforgeError):
    """Singular values sit too close to the rank threshold to decide."""


class DegenerateMetric(WeylforgeError, ValueError):
    pass


class NotWeyl(WeylforgeError):
    pass


class NotClosed(WeylforgeError):
    pass


class PathDependence(WeylforgeError):
    pass
