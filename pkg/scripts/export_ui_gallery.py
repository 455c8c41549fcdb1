"""Regenerates the gallery listing embedded in the browser UI.

Run whenever a bundle's spec or metadata changes, then rebuild the frontend:

    python scripts/export_ui_gallery.py
"""

from __future__ import annotations

import json
from pathlib import Path

from provega.gallery import BUNDLES, read_bundle_file

ROOT = Path(__file__).resolve().parent.parent
TARGET = ROOT / "frontend" / "src" / "gallery-data.json"


def main():
    listing = [
        {
            "name": bundle.name,
            "category": bundle.category,
            "description": bundle.description,
            "spec": json.loads(read_bundle_file(bundle.name, "spec.json")),
        }
        for bundle in BUNDLES
    ]
    with TARGET.open("w", encoding="utf-8") as handle:
        json.dump(listing, handle, indent=2)
        handle.write("\n")
    print(f"wrote {TARGET.relative_to(ROOT)} ({len(listing)} bundles)")


if __name__ == "__main__":
    main()
