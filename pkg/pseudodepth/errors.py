"""Exception hierarchy shared by every module."""

from pathlib import Path
from typing import Optional, Union


class PseudoDepthError(Exception):
    """Base class for all errors raised by the package."""


class InvalidInputError(PseudoDepthError, ValueError):
    """An input violates a precondition (non-finite values, bad range)."""


class ShapeMismatchError(InvalidInputError):
    """Two inputs that must share a shape do not."""


class ConfigError(PseudoDepthError):
    """The run configuration is invalid or references missing paths."""


class DatasetError(PseudoDepthError):
    """A dataset directory or file is missing or malformed."""

    def __init__(self, message: str, path: Optional[Union[str, Path]] = None) -> None:
        self.path = Path(path) if path is not None else None
        super().__init__(f"{message}: {path}" if path is not None else message)


class CheckpointError(PseudoDepthError):
    """A checkpoint file is missing, truncated, corrupted or incompatible."""


class TrainingDivergedError(PseudoDepthError):
    """A training loss became non-finite."""

    def __init__(self, message: str, last_good_checkpoint: Optional[Path] = None) -> None:
        self.last_good_checkpoint = last_good_checkpoint
        super().__init__(message)
