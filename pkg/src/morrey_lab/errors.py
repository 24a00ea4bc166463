"""Exception hierarchy shared by all morrey_lab modules."""


class MorreyError(Exception):
    """Base class for every error raised by the library."""


class ComputeError(MorreyError):
    """A numerical computation could not deliver a trustworthy value."""


class SingularPoint(ComputeError):
    pass


class DimensionMismatch(MorreyError, ValueError):
    pass


class Divergent(ComputeError):
    """An integral is infinite; carries the offending exponent when known."""

    def __init__(self, message, exponent=None):
        super().__init__(message)
        self.exponent = exponent


class QuadratureFailure(ComputeError):
    pass


class ParameterOrder(MorreyError, ValueError):
    pass


class RangeError(MorreyError, ValueError):
    pass


class SkippedEntry(ComputeError):
    pass


class AdmissibilityError(MorreyError, ValueError):
    """A weight does not satisfy the hypotheses of the embedding theorem."""


class ConfigError(MorreyError, ValueError):
    pass
