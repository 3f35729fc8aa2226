#!/usr/bin/env python3
"""Render every figure from one experiment output directory.

    python3 scripts/render_figures.py RESULTS_DIR FIGURES_DIR [TRACKS_CSV]

Expects RESULTS_DIR to contain aggregate.csv, runtime.csv and
manifest.json as written by the run command; TRACKS_CSV (optional) adds
the trajectory overlay from an export-tracks file.
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "plots"))

from figlib import PlotSpec, render


def main(argv) -> int:
    if len(argv) < 2:
        print(__doc__, file=sys.stderr)
        return 2
    results = Path(argv[0])
    outdir = Path(argv[1])
    jobs = [
        ("cardinality", results / "aggregate.csv", None),
        ("clutter", results / "aggregate.csv", results / "manifest.json"),
        ("tm", results / "aggregate.csv", None),
        ("runtime", results / "runtime.csv", None),
    ]
    if len(argv) > 2:
        jobs.append(("trajectories", Path(argv[2]), None))
    for figure, csv, manifest in jobs:
        path = render(
            PlotSpec(figure=figure, csv=csv, output=outdir / f"{figure}.png", manifest=manifest)
        )
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
