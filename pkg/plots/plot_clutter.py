#!/usr/bin/env python3
"""Render the clutter-rate convergence figure from harness CSV output.

Overlays the configuration-derived true expected clutter rate (generator
count times generator detection probability) as a horizontal reference.
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

from figlib import PlotSpec, SchemaError, render, standard_parser


def main(argv=None) -> int:
    args = standard_parser(__doc__, needs_manifest=True).parse_args(argv)
    try:
        out = render(
            PlotSpec(
                figure="clutter", csv=args.csv, output=args.out, manifest=args.manifest
            )
        )
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
