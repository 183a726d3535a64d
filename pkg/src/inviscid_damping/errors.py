"""Exception hierarchy shared by all modules."""


class DampingError(Exception):
    """Base class for every error raised by this package."""


class NonMonotone(DampingError):
    pass


class BadParams(DampingError):
    pass


class OutOfRange(DampingError):
    pass


class PoleAtEndpoint(DampingError):
    pass


class EndpointLayer(DampingError):
    """The critical layer sits on a channel wall; only one branch exists."""


class NoConvergence(DampingError):
    pass


class NotApplicable(DampingError):
    pass


class TooCloseToSpectrum(DampingError):
    pass


class ContourThroughZero(DampingError):
    pass


class EmbeddingEigenvalue(DampingError):
    pass


class DiscreteSpectrumPresent(DampingError):
    pass


class InsufficientWindow(DampingError):
    pass


class StepTooLarge(DampingError):
    pass


class SingularSystem(DampingError):
    pass


class ConfigError(DampingError):
    pass
