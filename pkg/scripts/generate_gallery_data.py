"""Regenerates the CSV datasets shipped inside the gallery bundles.

Each dataset is a fixed-seed gaussian mixture rounded to 4 decimals, so the
files are reproducible byte for byte. Run from the repository root:

    python scripts/generate_gallery_data.py
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
BUNDLES = ROOT / "src" / "provega" / "gallery_bundles"


def mixture(rng, total, components):
    """components: list of (weight, (mx, my), sigma). Returns shuffled points."""
    weights = np.array([w for w, _, _ in components], dtype=float)
    weights /= weights.sum()
    counts = np.floor(weights * total).astype(int)
    counts[-1] += total - counts.sum()
    parts = [
        rng.normal((mx, my), sigma, size=(n, 2))
        for (_, (mx, my), sigma), n in zip(components, counts)
    ]
    points = np.concatenate(parts)
    rng.shuffle(points)
    return np.round(points, 4)


def write_csv(path: Path, points, extra=()):
    path.parent.mkdir(parents=True, exist_ok=True)
    n = len(points)
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["x", "y", *extra])
        for i, (x, y) in enumerate(points):
            row = [f"{x:.4f}", f"{y:.4f}"]
            for name in extra:
                row.append(_extra_value(name, i, n))
            writer.writerow(row)


def _extra_value(name: str, i: int, n: int) -> str:
    if name == "conf":
        return f"{min(1.0, 0.2 + 0.8 * (i + 1) / n):.4f}"
    if name == "hour":
        return str((i * 7) % 24)
    raise ValueError(name)


def main():
    rng = np.random.default_rng(20260801)
    density = mixture(rng, 5000, [
        (0.45, (-2.0, -1.0), 0.6),
        (0.35, (1.5, 1.0), 0.9),
        (0.20, (0.0, 2.5), 0.4),
    ])
    write_csv(BUNDLES / "density_data_chunking" / "data.csv", density,
              extra=("hour",))

    rng = np.random.default_rng(20260802)
    blobs = mixture(rng, 600, [
        (1.0, (0.0, 0.0), 0.55),
        (1.0, (4.0, 0.5), 0.55),
        (1.0, (2.0, 3.5), 0.55),
    ])
    write_csv(BUNDLES / "kmeans_process" / "data.csv", blobs)

    rng = np.random.default_rng(20260803)
    streamed = mixture(rng, 900, [
        (1.0, (-3.0, 0.0), 0.7),
        (1.0, (0.0, 3.0), 0.7),
        (1.0, (3.0, -1.0), 0.7),
    ])
    write_csv(BUNDLES / "kmeans_mixed" / "data.csv", streamed)

    rng = np.random.default_rng(20260804)
    fallback = mixture(rng, 400, [
        (1.0, (-1.5, 1.0), 0.5),
        (1.0, (1.5, -1.0), 0.5),
    ])
    write_csv(BUNDLES / "backend_demo" / "fallback.csv", fallback,
              extra=("conf",))

    for csv_path in sorted(BUNDLES.glob("*/*.csv")):
        print(csv_path.relative_to(ROOT), csv_path.stat().st_size, "bytes")


if __name__ == "__main__":
    main()
