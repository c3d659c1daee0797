"""Exception types raised across the package."""


class LipmonoError(Exception):
    """Base class for every error raised by lipmono."""


class ShapeError(LipmonoError, ValueError):
    """Array dimensions are incompatible."""


class RangeError(LipmonoError, ValueError):
    """A numeric range is empty or inverted."""


class ConfigError(LipmonoError, ValueError):
    """Invalid hyperparameter, policy or configuration value."""


class StateError(LipmonoError, RuntimeError):
    """Objects used together were not produced by each other (tape, optimizer state)."""


class CertificationError(LipmonoError, RuntimeError):
    """Stored weights violate the Lipschitz budget."""


class OracleError(LipmonoError, ArithmeticError):
    """A verification oracle produced a non-finite value."""


class DataError(LipmonoError, ValueError):
    """Malformed data or targets."""


class RecipeError(DataError):
    """A dataset recipe does not match the file it describes."""


class TrainingError(LipmonoError, RuntimeError):
    """Training diverged."""

    def __init__(self, message: str, epoch: int):
        super().__init__(f"{message} (epoch {epoch})")
        self.epoch = epoch


class CheckpointError(LipmonoError, ValueError):
    """A checkpoint file cannot be parsed."""
