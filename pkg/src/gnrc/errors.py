"""Exception types raised across the package."""


class GnrcError(Exception):
    """Base class for all package errors."""


class SpaceMismatch(GnrcError, ValueError):
    pass


class NotSelfAdjoint(GnrcError, ValueError):
    pass


class NotPositive(GnrcError, ValueError):
    pass


class SpectrumHit(GnrcError, ValueError):
    """The resolvent point lies (numerically) on the spectrum."""


class InvalidResolvent(GnrcError, ValueError):
    """A supplied resolvent array fails the pseudo-resolvent check."""


class NotContraction(GnrcError, ValueError):
    pass


class ZeroMap(GnrcError, ValueError):
    pass


class IndexOutOfRange(GnrcError, IndexError):
    pass


class MalformedTestVector(GnrcError, ValueError):
    pass


class EmptyIntersection(GnrcError, ValueError):
    pass


class DegenerateEdge(GnrcError, ValueError):
    pass


class InsufficientModes(GnrcError, ValueError):
    pass


class ConfigError(GnrcError):
    """Base class for configuration problems (CLI exit code 2)."""


class ParseError(ConfigError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if field is not None:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)


class ValidationError(ConfigError):
    def __init__(self, message, invariant=None):
        self.invariant = invariant
        super().__init__(message)
