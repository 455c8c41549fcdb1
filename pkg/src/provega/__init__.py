"""Declarative progressive visualization engine.

Specifications are ordinary JSON visualization documents extended with one
top-level `provega` block that declares how the view progresses: chunked data
loading, iterative processing, steering controls, and quality monitoring.
Sessions emit keyed changesets so views update in place instead of redrawing.
"""

from .clock import MonotonicClock, VirtualClock
from .data_source import (
    DataSourceDescriptor,
    Row,
    descriptor_from_document,
    file_source,
    inline_source,
    load_complete,
    websocket_source,
)
from .errors import (
    BindError,
    BindingError,
    ConflictError,
    ConnectError,
    EmptyDatasetError,
    EmptyHistoryError,
    FormatError,
    HistoryEvictedError,
    IllegalTransitionError,
    InsufficientDataError,
    InvalidBinningError,
    InvalidPlanError,
    IoError,
    MissingProcessorError,
    ProcessorError,
    ProtocolError,
    ProvegaError,
    SpecSyntaxError,
    ValidationError,
)
from .quality import QualitySample, QualityTracker, estimate_etc
from .scheduler import (
    ChunkPlan,
    Emission,
    Session,
    SessionState,
    merge_changesets,
    plan_chunks,
    run_to_completion,
)
from .server import EngineServer, connect_generator, pump_generator
from .spec_model import (
    ProvegaSpec,
    default_spec_for,
    normalize_document,
    parse_spec,
    serialize_spec,
)
from .store import Changeset, ChangeReport, ChangesetStore, Rect

__version__ = "0.1.0"

__all__ = [
    "BindError",
    "BindingError",
    "ChangeReport",
    "Changeset",
    "ChangesetStore",
    "ChunkPlan",
    "ConflictError",
    "ConnectError",
    "DataSourceDescriptor",
    "EmptyDatasetError",
    "EmptyHistoryError",
    "Emission",
    "EngineServer",
    "FormatError",
    "HistoryEvictedError",
    "IllegalTransitionError",
    "InsufficientDataError",
    "InvalidBinningError",
    "InvalidPlanError",
    "IoError",
    "MissingProcessorError",
    "MonotonicClock",
    "ProcessorError",
    "ProtocolError",
    "ProvegaError",
    "ProvegaSpec",
    "QualitySample",
    "QualityTracker",
    "Rect",
    "Row",
    "Session",
    "SessionState",
    "SpecSyntaxError",
    "ValidationError",
    "VirtualClock",
    "connect_generator",
    "default_spec_for",
    "descriptor_from_document",
    "estimate_etc",
    "file_source",
    "inline_source",
    "load_complete",
    "merge_changesets",
    "normalize_document",
    "parse_spec",
    "plan_chunks",
    "pump_generator",
    "run_to_completion",
    "serialize_spec",
    "websocket_source",
]
