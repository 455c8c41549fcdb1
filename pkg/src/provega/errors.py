"""Exception types shared across the engine."""

from __future__ import annotations


class ProvegaError(Exception):
    """Base class for all engine errors."""


class SpecSyntaxError(ProvegaError):
    """The specification document is not well-formed JSON."""


class ValidationError(ProvegaError):
    """A spec value is invalid; `path` names the offending property."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.reason = message


class MissingProcessorError(ValidationError):
    """process/mixed chunking declared without a processor block."""


class IoError(ProvegaError):
    """A data file could not be read."""


class FormatError(ProvegaError):
    """A data file is malformed; `record` is the offending line/record number."""

    def __init__(self, record: int, message: str):
        super().__init__(f"record {record}: {message}")
        self.record = record


class EmptyDatasetError(ProvegaError):
    """The data source yielded zero rows."""


class ConnectError(ProvegaError):
    """A WebSocket endpoint could not be reached."""


class ProtocolError(ProvegaError):
    """A wire message violates the protocol schema."""

    def __init__(self, message: str, path: str | None = None):
        super().__init__(message if path is None else f"{path}: {message}")
        self.path = path


class InvalidPlanError(ProvegaError):
    """Chunk planning was asked for an impossible partition."""


class ProcessorError(ProvegaError):
    """A processor iteration failed."""


class IllegalTransitionError(ProvegaError):
    """A control action is not permitted in the current session status."""


class ConflictError(ProvegaError):
    """A changeset referenced ids inconsistent with the dataset state."""


class EmptyHistoryError(ProvegaError):
    """step_backward with no recorded history."""


class HistoryEvictedError(ProvegaError):
    """step_backward past the bounded history capacity."""


class InsufficientDataError(ProvegaError):
    """A processor was initialized with fewer rows than it requires."""


class InvalidBinningError(ValidationError):
    """Density binning parameters out of range."""


class BindingError(ProvegaError):
    """A quality binding names a column absent from the data header."""


class BindError(ProvegaError):
    """The requested server port is not free."""
