"""Exception types raised by optoweak."""


class OptoweakError(Exception):
    """Base class for every error raised by this package."""


class TruncationError(OptoweakError):
    """A state has non-negligible population at the top of the truncated Fock basis."""

    def __init__(self, message, required_dim=None):
        super().__init__(message)
        self.required_dim = required_dim


class ConvergenceError(OptoweakError):
    """A matrix function failed its internal accuracy check."""


class DimensionMismatch(OptoweakError, ValueError):
    pass


class DarkPortVanished(OptoweakError):
    """Post-selection probability is below the conditioning floor."""

    def __init__(self, probability):
        super().__init__(f"post-selection probability {probability:.3e} is below the floor")
        self.probability = probability


class OrthogonalSelection(OptoweakError):
    """Weak value requested for a post-selection orthogonal to the input."""


class EmptyScan(OptoweakError):
    """Every grid point of a scan had a vanishing post-selection probability."""


class ConfigError(OptoweakError):
    def __init__(self, message, line=None, key=None):
        where = f"line {line}: " if line is not None else ""
        what = f"{key}: " if key is not None else ""
        super().__init__(f"{where}{what}{message}")
        self.line = line
        self.key = key
