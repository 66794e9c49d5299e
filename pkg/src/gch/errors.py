"""Exception types raised by the solvers and the run tooling."""


class GchError(Exception):
    """Base class for every error raised by this package."""


class UnknownPreset(GchError, KeyError):
    pass


class CorruptData(GchError, ValueError):
    pass


class GridTooSmall(GchError, ValueError):
    pass


class StateCorrupt(GchError, ValueError):
    pass


class OutOfDomain(GchError, ValueError):
    pass


class NumericalBlowup(GchError, FloatingPointError):
    pass


class EnergyBoundViolated(GchError):
    pass


class BreakingImminent(GchError):
    """The Eulerian oracle met a gradient it cannot resolve."""


class WindowTooSmall(GchError, ValueError):
    pass


class WindowMismatch(GchError, ValueError):
    pass


class MissingArtifacts(GchError, FileNotFoundError):
    pass


class ConfigError(GchError, ValueError):
    pass
