"""Recomputes each bundle's expected_trace.json from a virtual-time run.

Run whenever a bundle's spec or data changes:

    python scripts/freeze_gallery_traces.py
"""

from __future__ import annotations

import json
import tempfile
from pathlib import Path

from provega import cli
from provega.gallery import BUNDLES, bundle_root, bundle_spec_path, summarize_trace


def main():
    for bundle in BUNDLES:
        root = Path(str(bundle_root(bundle.name)))
        with tempfile.NamedTemporaryFile(mode="r", suffix=".ndjson") as trace:
            argv = ["run", "--spec", str(bundle_spec_path(bundle.name)),
                    "--trace", trace.name]
            if bundle.run_data is not None:
                argv += ["--data", str(root / bundle.run_data)]
            code = cli.main(argv)
            if code != 0:
                raise SystemExit(f"{bundle.name}: run exited {code}")
            summary = summarize_trace(Path(trace.name).read_text())
        dest = root / "expected_trace.json"
        dest.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
        print(f"{bundle.name}: {summary['changesets']} changesets, "
              f"{summary['rows']} rows")


if __name__ == "__main__":
    main()
