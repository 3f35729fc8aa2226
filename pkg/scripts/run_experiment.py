#!/usr/bin/env python3
"""Run the benchmark experiment grid from the command line.

Thin wrapper over the package CLI so the experiment is runnable straight
from a checkout:

    python3 scripts/run_experiment.py run --outdir results --runs 100 \
        --variant robust --variant baseline --lscan 1,5,30 --jobs 2

See ``--help`` for all flags; ``write-config`` dumps the default scenario.
"""
import sys

from trajphd.cli import main

if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
