"""Bundled runnable examples, each with a frozen trace summary for regression."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ValidationError


@dataclass(frozen=True)
class Bundle:
    name: str
    category: str
    description: str
    files: tuple[str, ...]
    # Complete-input substitute passed as --data when the bundle's own source
    # is a live generator, so headless regression runs stay deterministic.
    run_data: str | None = None


BUNDLES = (
    Bundle(
        name="density_data_chunking",
        category="density",
        description="16x16 bin counts accumulating as 125-row chunks stream in "
                    "every 250 ms",
        files=("spec.json", "data.csv", "expected_trace.json"),
    ),
    Bundle(
        name="kmeans_process",
        category="clustering",
        description="k-means over a fully loaded dataset, one Lloyd iteration "
                    "per 125 ms tick",
        files=("spec.json", "data.csv", "expected_trace.json"),
    ),
    Bundle(
        name="kmeans_mixed",
        category="clustering",
        description="k-means advancing every 500 ms while its input is still "
                    "being ingested",
        files=("spec.json", "data.csv", "expected_trace.json"),
    ),
    Bundle(
        name="backend_demo",
        category="streaming",
        description="external WebSocket generator feeding chunks under ACK "
                    "flow control, coalesced to ~330 ms",
        files=("spec.json", "fallback.csv", "generator.py",
               "expected_trace.json"),
        run_data="fallback.csv",
    ),
)


def bundle_names() -> list[str]:
    return [b.name for b in BUNDLES]


def get_bundle(name: str) -> Bundle:
    for b in BUNDLES:
        if b.name == name:
            return b
    raise ValidationError(
        "gallery.name", f"unknown bundle {name!r}; available: {bundle_names()}"
    )


def bundle_root(name: str):
    get_bundle(name)
    return resources.files("provega").joinpath("gallery_bundles", name)


def read_bundle_file(name: str, filename: str) -> str:
    return bundle_root(name).joinpath(filename).read_text(encoding="utf-8")


def bundle_spec_path(name: str) -> Path:
    """Filesystem path of the bundle's spec (bundles ship as plain files)."""
    return Path(str(bundle_root(name).joinpath("spec.json")))


def export_bundle(name: str, out_dir: str) -> list[Path]:
    bundle = get_bundle(name)
    root = bundle_root(name)
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    written = []
    for filename in bundle.files:
        dest = target / filename
        dest.write_text(root.joinpath(filename).read_text(encoding="utf-8"),
                        encoding="utf-8")
        written.append(dest)
    return written


def expected_summary(name: str) -> dict:
    return json.loads(read_bundle_file(name, "expected_trace.json"))


def summarize_trace(text: str) -> dict:
    """Reduce a trace file to the compact shape frozen in expected_trace.json.

    The sha256 covers the exact bytes, anchoring the bit-identity guarantee of
    virtual-time runs; the remaining fields make regressions readable.
    """
    lines = [json.loads(line) for line in text.splitlines() if line]
    inserts = sum(line["counts"]["inserts"] for line in lines)
    updates = sum(line["counts"]["updates"] for line in lines)
    removes = sum(line["counts"]["removes"] for line in lines)
    final_quality = lines[-1]["quality"] if lines else None
    return {
        "changesets": len(lines),
        "final_step": lines[-1]["step"] if lines else None,
        "inserts": inserts,
        "updates": updates,
        "removes": removes,
        "rows": inserts - removes,
        "final_absolute_progress":
            final_quality.get("absolute_progress") if final_quality else None,
        "trace_sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
    }
