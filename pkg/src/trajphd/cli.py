"""Experiment orchestration and machine-readable result export.

Output files per experiment (UTF-8 CSV, '.' decimal, fixed column order):

* ``aggregate.csv``: scan, variant, lscan, mean_cardinality,
  std_cardinality, mean_clutter_rate, rms_tm_error, true_count.  One row
  per scan per (variant, lscan) pair; mean_clutter_rate is empty for the
  known-clutter baseline.
* ``runtime.csv``: variant, lscan, runs, mean_seconds, std_seconds.
  Seconds cover the filter recursion only (prediction, update, reduction,
  estimation), not scan simulation or metric evaluation.
* ``manifest.json``: resolved configuration, seed, variant grid, output
  inventory and per-variant run failures.
* ``tracks_<variant>_L<lscan>_run<i>.csv`` (via export-tracks): run, scan,
  kind, track_id, birth_time, x, y, p_d.  One row per alive true target
  and per reported track per scan; p_d is empty for truth rows and for the
  baseline filter.

Statistics files are byte-reproducible for a fixed config and seed; the
runtime table is measured wall time and is not.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    ScenarioConfig,
    config_to_dict,
    dump_config,
    load_config,
    position_of,
)
from .scenario import (
    VARIANTS,
    GroundTruth,
    RunRecord,
    generate_truth,
    run_monte_carlo,
    run_single,
)

log = logging.getLogger("trajphd")

AGGREGATE_COLUMNS = (
    "scan",
    "variant",
    "lscan",
    "mean_cardinality",
    "std_cardinality",
    "mean_clutter_rate",
    "rms_tm_error",
    "true_count",
)
RUNTIME_COLUMNS = ("variant", "lscan", "runs", "mean_seconds", "std_seconds")
TRACKS_COLUMNS = ("run", "scan", "kind", "track_id", "birth_time", "x", "y", "p_d")


@dataclasses.dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: a scenario plus the (variant, lscan) grid to run."""

    config: ScenarioConfig
    grid: tuple[tuple[str, int], ...]
    outdir: Path
    jobs: int = 1
    compute_metric: bool = True

    def __post_init__(self) -> None:
        if not self.grid:
            raise ValueError("experiment grid must contain at least one variant")
        for variant, lscan in self.grid:
            if variant not in VARIANTS:
                raise ValueError(f"unknown variant {variant!r}")
            if lscan < 1:
                raise ValueError(f"window depth {lscan} must be >= 1")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if np.isnan(value):
            return ""
        return repr(value)
    return str(value)


def run_experiment(spec: ExperimentSpec) -> int:
    """Run the grid, write aggregate/runtime/manifest files, return 0 on success."""
    problems = spec.config.validate()
    if problems:
        for p in problems:
            log.error("invalid config: %s", p)
        return 2
    spec.outdir.mkdir(parents=True, exist_ok=True)
    truth = generate_truth(spec.config)

    aggregate_rows: list[tuple] = []
    runtime_rows: list[tuple] = []
    manifest_failures: dict[str, list] = {}
    for variant, lscan in spec.grid:
        log.info("running %s (L=%d) x %d runs", variant, lscan, spec.config.runs)
        records, agg, failures = run_monte_carlo(
            spec.config,
            variant,
            lscan=lscan,
            truth=truth,
            jobs=spec.jobs,
            compute_metric=spec.compute_metric,
        )
        if failures:
            key = f"{variant}_L{lscan}"
            manifest_failures[key] = [
                {"run": idx, "error": msg} for idx, msg in failures
            ]
            for idx, msg in failures:
                log.warning("%s run %d failed: %s", key, idx, msg)
        for s in range(spec.config.horizon):
            aggregate_rows.append(
                (
                    int(agg.scans[s]),
                    variant,
                    lscan,
                    float(agg.mean_cardinality[s]),
                    float(agg.std_cardinality[s]),
                    float(agg.mean_clutter_rate[s]),
                    float(agg.rms_tm_error[s]),
                    int(agg.true_count[s]),
                )
            )
        seconds = np.array([r.filter_seconds for r in records])
        runtime_rows.append(
            (
                variant,
                lscan,
                len(records),
                float(seconds.mean()) if len(records) else float("nan"),
                float(seconds.std()) if len(records) else float("nan"),
            )
        )

    _write_csv(spec.outdir / "aggregate.csv", AGGREGATE_COLUMNS, aggregate_rows)
    _write_csv(spec.outdir / "runtime.csv", RUNTIME_COLUMNS, runtime_rows)
    manifest = {
        "version": __version__,
        "seed": spec.config.seed,
        "runs": spec.config.runs,
        "grid": [{"variant": v, "lscan": l} for v, l in spec.grid],
        "expected_clutter_rate": spec.config.expected_clutter_rate,
        "files": ["aggregate.csv", "runtime.csv"],
        "failures": manifest_failures,
        "config": config_to_dict(spec.config),
    }
    with open(spec.outdir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=False)
        fh.write("\n")
    log.info("wrote %s", spec.outdir / "aggregate.csv")
    return 0


def _write_csv(path: Path, columns, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def export_tracks(
    record: RunRecord, truth: GroundTruth, path: Path, fmt: str = "csv"
) -> None:
    """Write one run's true and estimated per-scan positions, long format."""
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}; only 'csv' is supported")
    rows = []
    for k in range(1, truth.horizon + 1):
        for tid, traj in enumerate(truth.targets):
            if traj.birth_time <= k <= traj.end_time:
                state = traj.states[k - traj.birth_time]
                pos = position_of(state)
                rows.append(
                    (record.run_index, k, "truth", tid, traj.birth_time,
                     float(pos[0]), float(pos[1]), None)
                )
        summary = record.summaries[k - 1]
        for tid, snap in enumerate(summary.tracks):
            rows.append(
                (record.run_index, k, "estimate", tid, snap.birth_time,
                 snap.x, snap.y, snap.detection_probability)
            )
    _write_csv(path, TRACKS_COLUMNS, rows)


def _parse_lscans(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad window list {text!r}") from exc
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("window depths must be positive integers")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trajphd",
        description="Trajectory PHD filter simulation harness",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the Monte Carlo experiment grid")
    run.add_argument("--config", type=Path, help="scenario YAML (defaults reproduce the benchmark)")
    run.add_argument("--outdir", type=Path, required=True)
    run.add_argument("--runs", type=int, help="override config run count")
    run.add_argument("--seed", type=int, help="override config master seed")
    run.add_argument(
        "--variant",
        action="append",
        choices=list(VARIANTS),
        help="variant filter; repeatable (default: both)",
    )
    run.add_argument(
        "--lscan",
        type=_parse_lscans,
        help="comma separated window depths (default: config value)",
    )
    run.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    run.add_argument(
        "--no-metric",
        action="store_true",
        help="skip trajectory-metric evaluation (timing runs)",
    )

    exp = sub.add_parser("export-tracks", help="re-simulate one run and export positions")
    exp.add_argument("--config", type=Path)
    exp.add_argument("--run", type=int, default=0)
    exp.add_argument("--variant", choices=list(VARIANTS), default="robust")
    exp.add_argument("--lscan", type=int)
    exp.add_argument("--seed", type=int)
    exp.add_argument("--format", default="csv")
    exp.add_argument("--out", type=Path, required=True)

    wcfg = sub.add_parser("write-config", help="write the default scenario config")
    wcfg.add_argument("--out", type=Path, required=True)
    return parser


def _load(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    overrides = {}
    if getattr(args, "runs", None) is not None:
        overrides["runs"] = args.runs
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "write-config":
        dump_config(ScenarioConfig(), args.out)
        return 0

    try:
        cfg = _load(args)
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return 2

    if args.command == "run":
        variants = args.variant or list(VARIANTS)
        lscans = args.lscan or [cfg.filter.lscan]
        grid = tuple((v, l) for v in variants for l in lscans)
        spec = ExperimentSpec(
            config=cfg,
            grid=grid,
            outdir=args.outdir,
            jobs=args.jobs,
            compute_metric=not args.no_metric,
        )
        return run_experiment(spec)

    if args.command == "export-tracks":
        truth = generate_truth(cfg)
        lscan = args.lscan if args.lscan is not None else cfg.filter.lscan
        record = run_single(
            cfg, args.variant, args.run, truth, lscan=lscan, compute_metric=False
        )
        try:
            export_tracks(record, truth, args.out, fmt=args.format)
        except ValueError as exc:
            log.error("%s", exc)
            return 2
        return 0

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
