"""Per-step quality indicators and their time series."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import BindingError
from .spec_model import Binding, QualityBindings

ALIVENESS_GRACE_FACTOR = 5
METRICS = ("absolute_progress", "relative_progress", "stability", "certainty")


@dataclass(frozen=True)
class QualitySample:
    step: int
    t_ms: int
    absolute_progress: float | None
    relative_progress: float | None
    stability: float | None
    certainty: float | None
    etc_ms: float | None
    alive: bool

    def to_json(self) -> dict:
        return {
            "step": self.step,
            "t_ms": self.t_ms,
            "absolute_progress": self.absolute_progress,
            "relative_progress": self.relative_progress,
            "stability": self.stability,
            "certainty": self.certainty,
            "etc_ms": self.etc_ms,
            "alive": self.alive,
        }


class QualitySeries:
    """Append-only (seq, step, value) log per metric; sequence is monotone.

    Backward steps append correction entries rather than rewriting history.
    """

    def __init__(self):
        self.entries: list[tuple[int, int, float | None, bool]] = []
        self._seq = 0

    def append(self, step: int, value: float | None, correction: bool = False):
        self.entries.append((self._seq, step, value, correction))
        self._seq += 1

    def values(self) -> list[float | None]:
        return [v for _, _, v, _ in self.entries]


def estimate_etc(elapsed_ms: float, absolute_progress: float | None) -> float | None:
    """Linear remaining-time estimate: elapsed * (1 - p) / p."""
    if absolute_progress is None or absolute_progress <= 0:
        return None
    if absolute_progress >= 1:
        return 0.0
    return elapsed_ms * (1.0 - absolute_progress) / absolute_progress


class QualityTracker:
    """Resolves quality bindings into one QualitySample per forward emission."""

    def __init__(self, bindings: QualityBindings, frequency_ms: int,
                 total_rows: int | None, total_iterations: int | None,
                 complete_input: bool, header: list[str] | None = None):
        self.bindings = bindings
        self.frequency_ms = frequency_ms
        self.total_rows = total_rows
        self.total_iterations = total_iterations
        self.complete_input = complete_input
        self.series = {m: QualitySeries() for m in METRICS}
        self._max_changed = 0
        self._last_emit_ms: int | None = None
        self._started = False
        if header is not None:
            self.validate_header(header)

    def validate_header(self, header) -> None:
        for name in self.bindings.field_names():
            if name not in header:
                raise BindingError(
                    f"quality binding references column {name!r}, "
                    f"absent from data columns {list(header)}"
                )

    def sample(self, step: int, t_ms: int, changeset, iterations_done: int,
               rows_emitted: int, processor_metrics: dict | None,
               done: bool) -> QualitySample:
        """Resolve all bindings for one applied forward changeset."""
        self._started = True
        self._last_emit_ms = t_ms
        metrics = processor_metrics or {}
        changed = len(changeset.changed_ids())
        self._max_changed = max(self._max_changed, changed)

        absolute = self._resolve(
            self.bindings.absolute_progress, changeset,
            lambda: self._builtin_absolute(rows_emitted, iterations_done, done),
        )
        if done and self.complete_input and \
                self.bindings.absolute_progress.kind == "builtin":
            absolute = 1.0
        relative = self._resolve(
            self.bindings.relative_progress, changeset,
            lambda: 1.0 - changed / self._max_changed if self._max_changed else None,
        )
        stability = self._resolve(
            self.bindings.stability, changeset,
            lambda: self._builtin_stability(metrics),
        )
        # Certainty has no built-in estimator; only a field binding yields it.
        certainty = self._resolve(self.bindings.certainty, changeset, lambda: None)
        etc = 0.0 if done else estimate_etc(t_ms, absolute)
        sample = QualitySample(
            step=step, t_ms=t_ms,
            absolute_progress=absolute, relative_progress=relative,
            stability=stability, certainty=certainty,
            etc_ms=etc, alive=True,
        )
        self.series["absolute_progress"].append(step, absolute)
        self.series["relative_progress"].append(step, relative)
        self.series["stability"].append(step, stability)
        self.series["certainty"].append(step, certainty)
        return sample

    def correction(self, step: int) -> None:
        """Record a backward step in every series without rewriting history."""
        for series in self.series.values():
            series.append(step, None, correction=True)

    def alive_at(self, t_ms: int) -> bool:
        reference = self._last_emit_ms if self._last_emit_ms is not None else 0
        return (t_ms - reference) <= ALIVENESS_GRACE_FACTOR * self.frequency_ms

    def _builtin_absolute(self, rows_emitted: int, iterations_done: int,
                          done: bool) -> float | None:
        if self.total_rows:
            return min(1.0, rows_emitted / self.total_rows)
        if self.total_iterations:
            return min(1.0, iterations_done / self.total_iterations)
        return 1.0 if done and self.complete_input else None

    @staticmethod
    def _builtin_stability(metrics: dict) -> float | None:
        if "stability" in metrics:
            return metrics["stability"]
        if "centroid_shift" in metrics:
            return 1.0 / (1.0 + metrics["centroid_shift"])
        return None

    def _resolve(self, binding: Binding, changeset, builtin) -> float | None:
        if binding.kind == "off":
            return None
        if binding.kind == "field":
            return self._field_value(binding.field, changeset)
        return builtin()

    @staticmethod
    def _field_value(name: str, changeset) -> float | None:
        rows = list(changeset.inserts) + list(changeset.updates)
        if not rows:
            return None
        value = rows[-1].values.get(name)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return None
        return min(1.0, max(0.0, float(value)))
