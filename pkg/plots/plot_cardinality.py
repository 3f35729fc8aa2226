#!/usr/bin/env python3
"""Render the cardinality figure from harness CSV output."""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

from figlib import PlotSpec, SchemaError, render, standard_parser


def main(argv=None) -> int:
    args = standard_parser(__doc__).parse_args(argv)
    try:
        out = render(PlotSpec(figure="cardinality", csv=args.csv, output=args.out))
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
