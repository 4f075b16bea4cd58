"""Exception hierarchy shared across the package."""


class SpectralGNError(Exception):
    """Base class for all errors raised by spectral_gn."""


class ShapeMismatch(SpectralGNError, ValueError):
    pass


class WidthMismatch(ShapeMismatch):
    """Graphs in a batch disagree on node, edge or global feature width."""


class InvalidGraph(SpectralGNError, ValueError):
    pass


class NonSymmetricGraph(InvalidGraph):
    pass


class SelfLoop(InvalidGraph):
    pass


class EmptyGraph(InvalidGraph):
    pass


class NotSymmetric(SpectralGNError, ValueError):
    """Matrix handed to the eigensolver is not symmetric."""


class NoConvergence(SpectralGNError, RuntimeError):
    pass


class SegmentIdOutOfRange(SpectralGNError, IndexError):
    pass


class DisconnectedPair(SpectralGNError, ValueError):
    pass


class ConnectivityFailure(SpectralGNError, RuntimeError):
    pass


class DegenerateInput(SpectralGNError, ValueError):
    pass


class BadImageShape(SpectralGNError, ValueError):
    pass


class IDXError(SpectralGNError, ValueError):
    pass


class BadMagic(IDXError):
    pass


class CountMismatch(IDXError):
    pass


class Truncated(IDXError):
    pass


class NaNLoss(SpectralGNError, FloatingPointError):
    pass


class ConfigError(SpectralGNError, ValueError):
    pass
