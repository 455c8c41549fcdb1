"""Parse, validate, and normalize progression specification documents.

A specification is a JSON document: an ordinary host visualization spec plus
one top-level `provega` object. Everything outside `provega` passes through
untouched; everything inside it is validated strictly, with unknown keys
rejected by path.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

from . import processors as processor_registry
from .data_source import DataSourceDescriptor, descriptor_from_document
from .errors import MissingProcessorError, SpecSyntaxError, ValidationError

CHUNKING_TYPES = ("data", "process", "mixed")
READING_METHODS = ("ascending", "descending", "random")
MODES = ("monitoring", "exploration")
QUALITY_METRICS = ("absolute_progress", "relative_progress", "stability", "certainty")

DEFAULT_HIGHLIGHT_MS = 600
DEFAULT_FREQUENCY_MS = 250
MAX_SEED = (1 << 64) - 1


@dataclass(frozen=True)
class ReadingConfig:
    method: str
    chunk_size: int
    frequency: int
    seed: int = 0
    # chunk_size was a placeholder from default_spec_for; recompute at load
    auto_sized: bool = False


@dataclass(frozen=True)
class ProcessorConfig:
    name: str
    parameters: dict


@dataclass(frozen=True)
class ChunkingConfig:
    type: str
    reading: ReadingConfig | None = None
    processor: ProcessorConfig | None = None


@dataclass(frozen=True)
class Binding:
    """Quality metric source: off, the builtin estimator, or a data column."""

    kind: str  # off | builtin | field
    field: str | None = None

    def to_json(self):
        if self.kind == "field":
            return {"field": self.field}
        return self.kind


BINDING_OFF = Binding("off")
BINDING_BUILTIN = Binding("builtin")


@dataclass(frozen=True)
class ControlConfig:
    pause_enabled: bool = True
    stop_enabled: bool = True
    step_enabled: bool = False
    mode: str = "monitoring"
    min_rendering_frequency: int | None = None
    ack_flow_control: bool = False
    ack_window: int = 1


@dataclass(frozen=True)
class HighlightConfig:
    enabled: bool = False
    highlight_duration: int = DEFAULT_HIGHLIGHT_MS


@dataclass(frozen=True)
class ChangeConfig:
    mark: HighlightConfig = HighlightConfig()
    area: HighlightConfig = HighlightConfig()


@dataclass(frozen=True)
class QualityBindings:
    absolute_progress: Binding = BINDING_OFF
    relative_progress: Binding = BINDING_OFF
    stability: Binding = BINDING_OFF
    certainty: Binding = BINDING_OFF

    def items(self):
        return [(m, getattr(self, m)) for m in QUALITY_METRICS]

    def field_names(self):
        return [b.field for _, b in self.items() if b.kind == "field"]


@dataclass(frozen=True)
class MonitoringConfig:
    aliveness: bool = False
    progress: bool = False
    etc: bool = False
    quality: QualityBindings = QualityBindings()
    change: ChangeConfig = ChangeConfig()


@dataclass(frozen=True)
class ProgressionConfig:
    chunking: ChunkingConfig
    control: ControlConfig = ControlConfig()
    monitoring: MonitoringConfig = MonitoringConfig()


@dataclass(frozen=True)
class VisualizationConfig:
    visual_stability: bool = True


@dataclass(frozen=True)
class ProvegaSpec:
    """A validated specification: host document plus normalized progression."""

    base_view: dict
    progression: ProgressionConfig
    visualization: VisualizationConfig = VisualizationConfig()
    interaction: object = None  # reserved, retained verbatim
    guidance: object = None  # reserved, retained verbatim
    warnings: tuple = ()

    def to_document(self) -> dict:
        doc = dict(self.base_view)
        doc["provega"] = self.provega_block()
        return doc

    def provega_block(self) -> dict:
        chunking: dict = {"type": self.progression.chunking.type}
        reading = self.progression.chunking.reading
        if reading is not None:
            chunking["reading"] = {
                "method": reading.method,
                "chunk_size": reading.chunk_size,
                "frequency": reading.frequency,
                "seed": reading.seed,
            }
        proc = self.progression.chunking.processor
        if proc is not None:
            chunking["processor"] = {"name": proc.name, **proc.parameters}
        control = self.progression.control
        control_block = {
            "pause": control.pause_enabled,
            "stop": control.stop_enabled,
            "step": control.step_enabled,
            "mode": control.mode,
            "ack": {"enabled": control.ack_flow_control, "window": control.ack_window},
        }
        if control.min_rendering_frequency is not None:
            control_block["min_rendering_frequency"] = control.min_rendering_frequency
        mon = self.progression.monitoring
        block = {
            "progression": {
                "chunking": chunking,
                "control": control_block,
                "monitoring": {
                    "aliveness": mon.aliveness,
                    "progress": mon.progress,
                    "etc": mon.etc,
                    "quality": {m: b.to_json() for m, b in mon.quality.items()},
                    "change": {
                        "mark": _highlight_to_json(mon.change.mark),
                        "area": _highlight_to_json(mon.change.area),
                    },
                },
            },
            "visualization": {"visual_stability": self.visualization.visual_stability},
        }
        if self.interaction is not None:
            block["interaction"] = self.interaction
        if self.guidance is not None:
            block["guidance"] = self.guidance
        return block


def _highlight_to_json(h: HighlightConfig) -> dict:
    return {"enabled": h.enabled, "highlight_duration": h.highlight_duration}


def parse_spec(document: str, data_override: str | None = None) -> ProvegaSpec:
    """Parse and normalize a specification document.

    All defaults are filled; unknown keys under `provega` are rejected with a
    path-bearing ValidationError; keys outside `provega` pass through.
    """
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as e:
        raise SpecSyntaxError(f"malformed document: {e}") from e
    if not isinstance(doc, dict):
        raise SpecSyntaxError("specification must be a JSON object")
    return normalize_document(doc, data_override=data_override)


def normalize_document(doc: dict, data_override: str | None = None) -> ProvegaSpec:
    if "provega" not in doc:
        raise ValidationError("provega", "provega block required")
    base_view = {k: _deep_copy(v) for k, v in doc.items() if k != "provega"}
    block = doc["provega"]
    _require_object("provega", block)
    _reject_unknown("provega", block,
                    {"progression", "visualization", "interaction", "guidance"})

    warnings: list[str] = []
    descriptor = descriptor_from_document(base_view, data_override)
    progressive = descriptor.is_progressive if descriptor is not None else None

    progression = _normalize_progression(
        block.get("progression"), progressive, warnings,
        descriptor=descriptor, override_active=data_override is not None,
    )
    visualization = _normalize_visualization(block.get("visualization"))
    return ProvegaSpec(
        base_view=base_view,
        progression=progression,
        visualization=visualization,
        interaction=_deep_copy(block.get("interaction")),
        guidance=_deep_copy(block.get("guidance")),
        warnings=tuple(warnings),
    )


def serialize_spec(spec: ProvegaSpec) -> str:
    return json.dumps(spec.to_document(), indent=2, allow_nan=False)


def default_spec_for(source: DataSourceDescriptor) -> ProvegaSpec:
    """A runnable data-chunking spec with defaults for the given source.

    chunk_size is ceil(n/100) clamped to >= 1; when the row count is unknown
    until the file is read, a placeholder of 1 is used and recomputed at load.
    """
    if source.kind == "inline":
        data_block = {"values": [dict(r) for r in source.records]}
    elif source.kind == "file":
        data_block = {"url": source.path}
    else:
        data_block = {"url": source.url}
    base_view = {"data": data_block}
    if source.is_progressive:
        chunking = ChunkingConfig(type="data")
    else:
        n = source.declared_row_count
        if n is None:
            reading = ReadingConfig("ascending", 1, DEFAULT_FREQUENCY_MS,
                                    auto_sized=True)
        else:
            reading = ReadingConfig(
                "ascending", max(1, math.ceil(n / 100)), DEFAULT_FREQUENCY_MS
            )
        chunking = ChunkingConfig(type="data", reading=reading)
    return ProvegaSpec(base_view=base_view, progression=ProgressionConfig(chunking))


def sized_chunk(n: int) -> int:
    return max(1, math.ceil(n / 100))


# --- normalization internals -------------------------------------------------


def _normalize_progression(block, progressive, warnings, descriptor=None,
                           override_active=False) -> ProgressionConfig:
    path = "provega.progression"
    if block is None:
        raise ValidationError(path, "progression block required")
    _require_object(path, block)
    _reject_unknown(path, block, {"chunking", "control", "monitoring"})
    chunking = _normalize_chunking(block.get("chunking"), progressive, warnings,
                                   descriptor, override_active)
    control = _normalize_control(block.get("control"))
    monitoring = _normalize_monitoring(block.get("monitoring"))
    return ProgressionConfig(chunking=chunking, control=control, monitoring=monitoring)


def _normalize_chunking(block, progressive, warnings, descriptor=None,
                        override_active=False) -> ChunkingConfig:
    path = "provega.progression.chunking"
    if block is None:
        raise ValidationError(path, "chunking block required")
    _require_object(path, block)
    _reject_unknown(path, block, {"type", "reading", "processor"})
    ctype = block.get("type")
    if ctype not in CHUNKING_TYPES:
        raise ValidationError(f"{path}.type",
                              f"expected one of {list(CHUNKING_TYPES)}, got {ctype!r}")

    reading = None
    if "reading" in block:
        if progressive is True:
            raise ValidationError(
                f"{path}.reading",
                "progressive (WebSocket) input owns chunk production; "
                "reading must be absent",
            )
        reading = _normalize_reading(block["reading"], warnings)
    elif progressive is False and ctype in ("data", "mixed"):
        if not override_active:
            raise ValidationError(
                f"{path}.reading",
                f"complete input with type={ctype} requires a reading block",
            )
        # A data override turned a generator spec into a complete input;
        # fall back to the default reading rather than rejecting the spec.
        n = descriptor.declared_row_count if descriptor is not None else None
        if n is None:
            reading = ReadingConfig("ascending", 1, DEFAULT_FREQUENCY_MS,
                                    auto_sized=True)
        else:
            reading = ReadingConfig("ascending", sized_chunk(n),
                                    DEFAULT_FREQUENCY_MS)
        warnings.append(f"{path}.reading: defaulted for the overriding data source")

    processor = None
    if ctype in ("process", "mixed") and "processor" not in block:
        raise MissingProcessorError(
            f"{path}.processor", f"type={ctype} requires a processor"
        )
    if "processor" in block:
        processor = _normalize_processor(block["processor"])
    return ChunkingConfig(type=ctype, reading=reading, processor=processor)


def _normalize_reading(block, warnings) -> ReadingConfig:
    path = "provega.progression.chunking.reading"
    _require_object(path, block)
    _reject_unknown(path, block, {"method", "chunk_size", "frequency", "seed"})
    method = block.get("method")
    if method not in READING_METHODS:
        raise ValidationError(f"{path}.method",
                              f"expected one of {list(READING_METHODS)}, got {method!r}")
    chunk_size = _positive_int(f"{path}.chunk_size", block.get("chunk_size"))
    frequency = _positive_int(f"{path}.frequency", block.get("frequency"))
    seed = block.get("seed")
    if seed is None:
        seed = 0
        if method == "random":
            warnings.append(f"{path}.seed: defaulted to 0 for method=random")
    elif not isinstance(seed, int) or isinstance(seed, bool) or not (
        0 <= seed <= MAX_SEED
    ):
        raise ValidationError(f"{path}.seed", "seed must be an unsigned 64-bit integer")
    return ReadingConfig(method=method, chunk_size=chunk_size, frequency=frequency,
                         seed=seed)


def _normalize_processor(block) -> ProcessorConfig:
    path = "provega.progression.chunking.processor"
    _require_object(path, block)
    name = block.get("name")
    if not isinstance(name, str) or not name:
        raise ValidationError(f"{path}.name", "processor name required")
    if name not in processor_registry.registered_names():
        raise ValidationError(
            f"{path}.name",
            f"unknown processor {name!r}; registered: "
            f"{sorted(processor_registry.registered_names())}",
        )
    raw_params = {k: v for k, v in block.items() if k != "name"}
    params = processor_registry.validate_parameters(name, raw_params, path)
    return ProcessorConfig(name=name, parameters=params)


def _normalize_control(block) -> ControlConfig:
    path = "provega.progression.control"
    if block is None:
        block = {}
    _require_object(path, block)
    _reject_unknown(path, block,
                    {"pause", "stop", "step", "mode", "min_rendering_frequency", "ack"})
    mode = block.get("mode", "monitoring")
    if mode not in MODES:
        raise ValidationError(f"{path}.mode",
                              f"expected one of {list(MODES)}, got {mode!r}")
    pause = _boolean(f"{path}.pause", block.get("pause", True))
    stop = _boolean(f"{path}.stop", block.get("stop", True))
    if "step" in block:
        step = _boolean(f"{path}.step", block["step"])
        if mode == "exploration" and not step:
            raise ValidationError(
                f"{path}.step", "exploration mode requires step controls"
            )
    else:
        step = mode == "exploration"
    mrf = None
    if "min_rendering_frequency" in block:
        mrf = _positive_int(f"{path}.min_rendering_frequency",
                            block["min_rendering_frequency"])
    ack_enabled, ack_window = False, 1
    if "ack" in block:
        ack = block["ack"]
        if isinstance(ack, bool):
            ack_enabled = ack
        elif isinstance(ack, dict):
            _reject_unknown(f"{path}.ack", ack, {"enabled", "window"})
            ack_enabled = _boolean(f"{path}.ack.enabled", ack.get("enabled", True))
            if "window" in ack:
                ack_window = _positive_int(f"{path}.ack.window", ack["window"])
        else:
            raise ValidationError(f"{path}.ack", "expected boolean or object")
    return ControlConfig(pause_enabled=pause, stop_enabled=stop, step_enabled=step,
                         mode=mode, min_rendering_frequency=mrf,
                         ack_flow_control=ack_enabled, ack_window=ack_window)


def _normalize_monitoring(block) -> MonitoringConfig:
    path = "provega.progression.monitoring"
    if block is None:
        block = {}
    _require_object(path, block)
    _reject_unknown(path, block, {"aliveness", "progress", "etc", "quality", "change"})
    aliveness = _boolean(f"{path}.aliveness", block.get("aliveness", False))
    progress = _boolean(f"{path}.progress", block.get("progress", False))
    etc = _boolean(f"{path}.etc", block.get("etc", False))
    quality = _normalize_quality(block.get("quality"))
    change = _normalize_change(block.get("change"))
    return MonitoringConfig(aliveness=aliveness, progress=progress, etc=etc,
                            quality=quality, change=change)


def _normalize_quality(block) -> QualityBindings:
    path = "provega.progression.monitoring.quality"
    if block is None:
        return QualityBindings()
    _require_object(path, block)
    _reject_unknown(path, block, set(QUALITY_METRICS))
    resolved = {}
    for metric in QUALITY_METRICS:
        if metric in block:
            resolved[metric] = _normalize_binding(f"{path}.{metric}", block[metric])
    return QualityBindings(**resolved)


def _normalize_binding(path, value) -> Binding:
    if value is False or value == "off":
        return BINDING_OFF
    if value is True or value == "builtin":
        return BINDING_BUILTIN
    if isinstance(value, dict):
        _reject_unknown(path, value, {"field"})
        name = value.get("field")
        if not isinstance(name, str) or not name:
            raise ValidationError(f"{path}.field", "field binding needs a column name")
        return Binding("field", name)
    raise ValidationError(path, 'expected "off", "builtin", or {"field": name}')


def _normalize_change(block) -> ChangeConfig:
    path = "provega.progression.monitoring.change"
    if block is None:
        return ChangeConfig()
    _require_object(path, block)
    _reject_unknown(path, block, {"mark", "area"})
    return ChangeConfig(
        mark=_normalize_highlight(f"{path}.mark", block.get("mark")),
        area=_normalize_highlight(f"{path}.area", block.get("area")),
    )


def _normalize_highlight(path, value) -> HighlightConfig:
    if value is None:
        return HighlightConfig()
    if isinstance(value, bool):
        return HighlightConfig(enabled=value)
    if isinstance(value, dict):
        _reject_unknown(path, value, {"enabled", "highlight_duration"})
        enabled = _boolean(f"{path}.enabled", value.get("enabled", True))
        duration = DEFAULT_HIGHLIGHT_MS
        if "highlight_duration" in value:
            duration = _positive_int(f"{path}.highlight_duration",
                                     value["highlight_duration"])
        return HighlightConfig(enabled=enabled, highlight_duration=duration)
    raise ValidationError(path, "expected boolean or object")


def _normalize_visualization(block) -> VisualizationConfig:
    path = "provega.visualization"
    if block is None:
        return VisualizationConfig()
    _require_object(path, block)
    _reject_unknown(path, block, {"visual_stability"})
    return VisualizationConfig(
        visual_stability=_boolean(f"{path}.visual_stability",
                                  block.get("visual_stability", True))
    )


def _require_object(path, value):
    if not isinstance(value, dict):
        raise ValidationError(path, f"expected an object, got {type(value).__name__}")


def _reject_unknown(path, block, allowed):
    for key in block:
        if key not in allowed:
            raise ValidationError(f"{path}.{key}", "unknown key")


def _boolean(path, value) -> bool:
    if not isinstance(value, bool):
        raise ValidationError(path, f"expected a boolean, got {value!r}")
    return value


def _positive_int(path, value) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ValidationError(path, f"expected an integer >= 1, got {value!r}")
    return value


def _deep_copy(value):
    if isinstance(value, dict):
        return {k: _deep_copy(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_deep_copy(v) for v in value]
    return value
