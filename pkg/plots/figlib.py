"""Shared plumbing for the result-plotting scripts.

The scripts are read-only consumers of the harness output files
(``aggregate.csv``, ``runtime.csv``, ``manifest.json`` and the
``tracks_*.csv`` exports); they validate the column schema up front and
only write the image once the whole figure has been assembled, so a
schema mismatch never leaves a partial file behind.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import pandas as pd

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


class SchemaError(ValueError):
    """An input file does not match the documented schema."""


@dataclass(frozen=True)
class PlotSpec:
    """What to draw: figure name, input files, output image path."""

    figure: str
    csv: Path
    output: Path
    manifest: Path | None = None


def load_table(path: Path, required: tuple[str, ...]) -> pd.DataFrame:
    frame = pd.read_csv(path)
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise SchemaError(f"{path}: missing column {missing[0]!r}")
    return frame


def load_manifest(path: Path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _variant_label(variant: str, lscan) -> str:
    return f"{variant} (L={int(lscan)})"


def figure_trajectories(spec: PlotSpec) -> plt.Figure:
    frame = load_table(spec.csv, TRACKS_COLUMNS)
    fig, ax = plt.subplots(figsize=(7, 6))
    truth = frame[frame["kind"] == "truth"]
    for tid, grp in truth.groupby("track_id"):
        grp = grp.sort_values("scan")
        ax.plot(grp["x"], grp["y"], "k-", lw=1.2,
                label="truth" if tid == truth["track_id"].min() else None)
        ax.plot(grp["x"].iloc[0], grp["y"].iloc[0], "ko", mfc="none", ms=7)
        ax.plot(grp["x"].iloc[-1], grp["y"].iloc[-1], "k^", mfc="none", ms=7)
    est = frame[frame["kind"] == "estimate"]
    ax.plot(est["x"], est["y"], ".", color="tab:blue", ms=2.5, label="estimate")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title("True trajectories and per-scan track estimates")
    ax.legend(loc="best")
    ax.set_aspect("equal", adjustable="datalim")
    fig.tight_layout()
    return fig


def figure_cardinality(spec: PlotSpec) -> plt.Figure:
    frame = load_table(spec.csv, AGGREGATE_COLUMNS)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    first = frame.drop_duplicates("scan").sort_values("scan")
    ax.step(first["scan"], first["true_count"], "k-", where="post", lw=1.5, label="truth")
    for (variant, lscan), grp in frame.groupby(["variant", "lscan"]):
        grp = grp.sort_values("scan")
        line, = ax.plot(grp["scan"], grp["mean_cardinality"], lw=1.2,
                        label=_variant_label(variant, lscan))
        ax.fill_between(
            grp["scan"],
            grp["mean_cardinality"] - grp["std_cardinality"],
            grp["mean_cardinality"] + grp["std_cardinality"],
            color=line.get_color(),
            alpha=0.15,
        )
    ax.set_xlabel("scan")
    ax.set_ylabel("alive trajectories")
    ax.set_title("Estimated trajectory count (mean over runs, +/- 1 std)")
    ax.legend(loc="best")
    fig.tight_layout()
    return fig


def figure_clutter(spec: PlotSpec) -> plt.Figure:
    frame = load_table(spec.csv, AGGREGATE_COLUMNS)
    if spec.manifest is None:
        raise SchemaError("clutter figure needs the manifest for the true rate")
    manifest = load_manifest(spec.manifest)
    true_rate = float(manifest["expected_clutter_rate"])
    fig, ax = plt.subplots(figsize=(7, 4.5))
    robust = frame[frame["mean_clutter_rate"].notna()]
    for (variant, lscan), grp in robust.groupby(["variant", "lscan"]):
        grp = grp.sort_values("scan")
        ax.plot(grp["scan"], grp["mean_clutter_rate"], lw=1.2,
                label=_variant_label(variant, lscan))
    ax.axhline(true_rate, color="k", ls="--", lw=1.2, label=f"truth ({true_rate:g})")
    ax.set_xlabel("scan")
    ax.set_ylabel("clutter rate")
    ax.set_title("Estimated clutter rate (mean over runs)")
    ax.legend(loc="best")
    fig.tight_layout()
    return fig


def figure_tm(spec: PlotSpec) -> plt.Figure:
    frame = load_table(spec.csv, AGGREGATE_COLUMNS)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (variant, lscan), grp in frame.groupby(["variant", "lscan"]):
        grp = grp.sort_values("scan")
        if grp["rms_tm_error"].notna().any():
            ax.plot(grp["scan"], grp["rms_tm_error"], lw=1.2,
                    label=_variant_label(variant, lscan))
    ax.set_xlabel("scan")
    ax.set_ylabel("RMS trajectory metric error")
    ax.set_title("Trajectory metric error over the growing window")
    ax.legend(loc="best")
    fig.tight_layout()
    return fig


def figure_runtime(spec: PlotSpec) -> plt.Figure:
    frame = load_table(spec.csv, RUNTIME_COLUMNS)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    variants = sorted(frame["variant"].unique())
    width = 0.8 / len(variants)
    lscans = sorted(frame["lscan"].unique())
    for i, variant in enumerate(variants):
        sub = frame[frame["variant"] == variant].set_index("lscan")
        xs, ys = [], []
        for j, lscan in enumerate(lscans):
            if lscan in sub.index:
                xs.append(j + i * width)
                ys.append(sub.loc[lscan, "mean_seconds"])
        ax.bar(xs, ys, width=width, label=variant)
    ax.set_xticks([j + 0.4 - width / 2 for j in range(len(lscans))])
    ax.set_xticklabels([str(int(l)) for l in lscans])
    ax.set_xlabel("window depth L")
    ax.set_ylabel("mean filter seconds per run")
    ax.set_title("Filter runtime versus window depth")
    ax.legend(loc="best")
    fig.tight_layout()
    return fig


FIGURES = {
    "trajectories": figure_trajectories,
    "cardinality": figure_cardinality,
    "clutter": figure_clutter,
    "tm": figure_tm,
    "runtime": figure_runtime,
}


def build_figure(spec: PlotSpec) -> plt.Figure:
    if spec.figure not in FIGURES:
        raise SchemaError(f"unknown figure {spec.figure!r}; choose from {sorted(FIGURES)}")
    return FIGURES[spec.figure](spec)


def render(spec: PlotSpec) -> Path:
    """Build the figure and write the image; returns the output path."""
    fig = build_figure(spec)
    spec.output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.output, dpi=130)
    plt.close(fig)
    return spec.output


def standard_parser(description: str, needs_manifest: bool = False):
    import argparse

    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--csv", type=Path, required=True, help="input CSV path")
    parser.add_argument("--out", type=Path, required=True, help="output image path")
    if needs_manifest:
        parser.add_argument(
            "--manifest", type=Path, required=True, help="experiment manifest.json"
        )
    return parser
