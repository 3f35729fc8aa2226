"""Ground truth, measurement generation and seeded Monte Carlo batches.

Seeding policy: one master seed drives everything through
``numpy.random.SeedSequence`` spawn keys.  The ground truth uses spawn key
``(0, 0)`` and run ``i`` uses ``(1, i)``, so the truth is shared by every
run of every filter variant, measurement streams are identical across
variants (the filters see the same data), and adding runs never perturbs
earlier ones.
"""
from __future__ import annotations

import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import baseline as bl
from . import robust as rb
from .config import ScenarioConfig, position_of
from .metric import TmParams, tm_distance
from .types import BgmPhd, Scan, Trajectory

VARIANTS = ("robust", "baseline")


@dataclass(frozen=True)
class GroundTruth:
    """Per-target trajectories with actual (possibly truncated) lifetimes."""

    targets: tuple[Trajectory, ...]
    horizon: int

    def alive_at(self, k: int) -> list[Trajectory]:
        """Trajectories of targets alive at scan k, truncated to end at k."""
        out = []
        for t in self.targets:
            if t.birth_time <= k <= t.end_time:
                out.append(Trajectory(t.birth_time, t.states[: k - t.birth_time + 1]))
        return out

    def states_at(self, k: int) -> list[np.ndarray]:
        return [t.states[k - t.birth_time] for t in self.targets if t.birth_time <= k <= t.end_time]

    def count_at(self, k: int) -> int:
        return sum(1 for t in self.targets if t.birth_time <= k <= t.end_time)

    def change_times(self) -> list[int]:
        """Scan indices where the alive-target count changes."""
        events = set()
        for t in self.targets:
            events.add(t.birth_time)
            if t.end_time < self.horizon:
                events.add(t.end_time + 1)
        return sorted(events)


@dataclass(frozen=True)
class TrackSnapshot:
    """Per-scan view of one estimated track."""

    birth_time: int
    length: int
    x: float
    y: float
    detection_probability: float | None


@dataclass(frozen=True)
class ScanSummary:
    time: int
    cardinality: int
    clutter_rate: int | None
    tm_error: float | None
    tracks: tuple[TrackSnapshot, ...]


@dataclass(frozen=True)
class RunRecord:
    run_index: int
    variant: str
    lscan: int
    seed_key: tuple[int, ...]
    scans: tuple[Scan, ...]
    summaries: tuple[ScanSummary, ...]
    truth_counts: tuple[int, ...]
    filter_seconds: float       # wall time of the filter recursion
    filter_cpu_seconds: float   # process CPU time of the same span


def truth_seed(config: ScenarioConfig) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=config.seed, spawn_key=(0, 0))


def run_seed(config: ScenarioConfig, run_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=config.seed, spawn_key=(1, run_index))


def generate_truth(config: ScenarioConfig, seed=None) -> GroundTruth:
    """Propagate the configured targets through the noisy dynamics.

    Targets start with the configured kinematics and zero turn rate, evolve
    with process noise from the seeded stream, and are truncated at the
    last scan before they leave the position region.
    """
    seed_seq = truth_seed(config) if seed is None else np.random.SeedSequence(seed)
    rng = np.random.default_rng(seed_seq)
    motion = config.build_motion()
    bounds = config.region.position_bounds
    out = []
    for tgt in config.targets:
        state = config.initial_target_state(tgt)
        states = [state]
        for _ in range(tgt.birth, min(tgt.death, config.horizon)):
            state = _propagate(motion, state, rng)
            if not _inside(position_of(state), bounds):
                break
            states.append(state)
        out.append(Trajectory(tgt.birth, np.array(states)))
    return GroundTruth(targets=tuple(out), horizon=config.horizon)


def _propagate(motion, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    mean = motion.predict_mean(state)
    if hasattr(motion, "noise_gain"):
        scales = np.array(
            [motion.accel_noise_std, motion.accel_noise_std, motion.turn_noise_std]
        )
        return mean + motion.noise_gain() @ (scales * rng.standard_normal(3))
    q = motion.noise_cov()
    if np.any(q):
        return mean + np.linalg.cholesky(q) @ rng.standard_normal(mean.size)
    return mean


def _inside(pos: np.ndarray, bounds) -> bool:
    return all(lo <= v <= hi for v, (lo, hi) in zip(pos, bounds))


def generate_scan(
    truth_states: list[np.ndarray],
    config: ScenarioConfig,
    rng: np.random.Generator,
    k: int,
) -> Scan:
    """Bernoulli target detections plus binomial uniform clutter, shuffled."""
    sensor = config.build_sensor()
    noise_chol = np.linalg.cholesky(sensor.noise_cov())
    rows = []
    for state in truth_states:
        if rng.random() < config.detection_probability:
            z = sensor.measure_mean(state) + noise_chol @ rng.standard_normal(
                noise_chol.shape[0]
            )
            rows.append(z)
    ct = config.clutter_truth
    n_clutter = rng.binomial(ct.generator_count, ct.detection_probability)
    bounds = config.region.measurement_bounds
    for _ in range(n_clutter):
        rows.append(np.array([rng.uniform(lo, hi) for lo, hi in bounds]))
    if rows:
        zs = np.vstack(rows)[rng.permutation(len(rows))]
    else:
        zs = np.zeros((0, len(bounds)))
    return Scan(time=k, measurements=zs)


def _estimate_trajectories(tracks) -> list[Trajectory]:
    """Position-only trajectories of the reported tracks, for the metric."""
    out = []
    for t in tracks:
        states = t.states()
        out.append(Trajectory(t.birth_time, states[:, [0, 2]]))
    return out


def run_single(
    config: ScenarioConfig,
    variant: str,
    run_index: int,
    truth: GroundTruth,
    lscan: int | None = None,
    compute_metric: bool = True,
) -> RunRecord:
    """Simulate one seeded run of one filter variant over the horizon."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    seed_seq = run_seed(config, run_index)
    rng = np.random.default_rng(seed_seq)
    motion = config.build_motion()
    sensor = config.build_sensor()
    clutter_density = config.build_clutter_density()
    births = config.birth_track_components()
    clutter_births = config.birth_clutter_components()
    fc = config.filter
    window_cap = lscan if lscan is not None else fc.lscan
    tm_params = TmParams()

    robust_state = BgmPhd(time=0)
    baseline_state = bl.GmTphdState(time=0)

    scans: list[Scan] = []
    summaries: list[ScanSummary] = []
    filter_seconds = 0.0
    filter_cpu_seconds = 0.0
    for k in range(1, config.horizon + 1):
        scan = generate_scan(truth.states_at(k), config, rng, k)
        scans.append(scan)

        tic_cpu = _time.process_time()
        tic = _time.perf_counter()
        if variant == "robust":
            robust_state = rb.predict(
                robust_state,
                motion,
                births,
                clutter_births,
                fc.survival,
                config.clutter_filter.survival,
                fc.k_beta,
                window_cap=window_cap,
            )
            robust_state, _ = rb.update(
                robust_state, scan, sensor, clutter_density,
                min_weight=fc.prune_threshold,
            )
            robust_state = rb.prune_and_absorb(
                robust_state, fc.prune_threshold, fc.absorb_threshold, fc.max_components
            )
            est = rb.estimate(robust_state)
            est_tracks = est.tracks
            cardinality = est.cardinality
            clutter_rate: int | None = est.clutter_rate
        else:
            baseline_state = bl.tphd_predict(
                baseline_state, motion, births, fc.survival, window_cap=window_cap
            )
            baseline_state = bl.tphd_update(
                baseline_state,
                scan,
                sensor,
                config.detection_probability,
                config.expected_clutter_rate,
                clutter_density,
                min_weight=fc.prune_threshold,
            )
            baseline_state = bl.tphd_prune_and_absorb(
                baseline_state, fc.prune_threshold, fc.absorb_threshold, fc.max_components
            )
            est = bl.tphd_estimate(baseline_state)
            est_tracks = est.tracks
            cardinality = est.cardinality
            clutter_rate = est.clutter_rate
        filter_seconds += _time.perf_counter() - tic
        filter_cpu_seconds += _time.process_time() - tic_cpu

        tm_error = None
        if compute_metric:
            truth_trajs = [
                Trajectory(t.birth_time, t.states[:, [0, 2]])
                for t in truth.alive_at(k)
            ]
            tm_error = tm_distance(
                truth_trajs, _estimate_trajectories(est_tracks), tm_params
            ).distance

        snapshots = tuple(
            TrackSnapshot(
                birth_time=t.birth_time,
                length=t.length,
                x=float(t.states()[-1, 0]),
                y=float(t.states()[-1, 2]),
                detection_probability=t.detection_probability,
            )
            for t in est_tracks
        )
        summaries.append(
            ScanSummary(
                time=k,
                cardinality=cardinality,
                clutter_rate=clutter_rate,
                tm_error=tm_error,
                tracks=snapshots,
            )
        )

    return RunRecord(
        run_index=run_index,
        variant=variant,
        lscan=window_cap,
        seed_key=(1, run_index),
        scans=tuple(scans),
        summaries=tuple(summaries),
        truth_counts=tuple(truth.count_at(k) for k in range(1, config.horizon + 1)),
        filter_seconds=filter_seconds,
        filter_cpu_seconds=filter_cpu_seconds,
    )


@dataclass(frozen=True)
class Aggregates:
    """Per-scan statistics over the successful runs of one variant."""

    scans: np.ndarray               # (horizon,)
    mean_cardinality: np.ndarray
    std_cardinality: np.ndarray
    mean_clutter_rate: np.ndarray   # NaN for the baseline variant
    rms_tm_error: np.ndarray        # NaN when the metric was skipped
    true_count: np.ndarray
    runs: int
    failed_runs: int


def _worker(args) -> RunRecord:
    config, variant, run_index, truth, lscan, compute_metric = args
    return run_single(config, variant, run_index, truth, lscan, compute_metric)


def run_monte_carlo(
    config: ScenarioConfig,
    variant: str = "robust",
    lscan: int | None = None,
    truth: GroundTruth | None = None,
    jobs: int = 1,
    compute_metric: bool = True,
) -> tuple[list[RunRecord], Aggregates, list[tuple[int, str]]]:
    """Run the configured number of seeded runs and aggregate per scan.

    Returns ``(records, aggregates, failures)`` where failures lists
    ``(run_index, message)`` for runs that raised; failed runs are excluded
    from the aggregates.
    """
    if truth is None:
        truth = generate_truth(config)
    tasks = [
        (config, variant, i, truth, lscan, compute_metric) for i in range(config.runs)
    ]
    records: list[RunRecord] = []
    failures: list[tuple[int, str]] = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_worker, task) for task in tasks]
            for task, future in zip(tasks, futures):
                try:
                    records.append(future.result())
                except Exception as exc:  # noqa: BLE001 - per-run fault isolation
                    failures.append((task[2], f"{type(exc).__name__}: {exc}"))
    else:
        for task in tasks:
            try:
                records.append(_worker(task))
            except Exception as exc:  # noqa: BLE001 - per-run fault isolation
                failures.append((task[2], f"{type(exc).__name__}: {exc}"))
    aggregates = aggregate_records(records, truth, config.horizon, failed=len(failures))
    return records, aggregates, failures


def aggregate_records(
    records: list[RunRecord], truth: GroundTruth, horizon: int, failed: int = 0
) -> Aggregates:
    n = len(records)
    card = np.full((n, horizon), np.nan)
    clut = np.full((n, horizon), np.nan)
    tm = np.full((n, horizon), np.nan)
    for r, rec in enumerate(records):
        for s, summary in enumerate(rec.summaries):
            card[r, s] = summary.cardinality
            if summary.clutter_rate is not None:
                clut[r, s] = summary.clutter_rate
            if summary.tm_error is not None:
                tm[r, s] = summary.tm_error
    with np.errstate(invalid="ignore"):
        mean_card = np.nanmean(card, axis=0) if n else np.full(horizon, np.nan)
        std_card = np.nanstd(card, axis=0) if n else np.full(horizon, np.nan)
        mean_clut = (
            np.nanmean(clut, axis=0)
            if n and np.any(np.isfinite(clut))
            else np.full(horizon, np.nan)
        )
        rms_tm = (
            np.sqrt(np.nanmean(tm**2, axis=0))
            if n and np.any(np.isfinite(tm))
            else np.full(horizon, np.nan)
        )
    return Aggregates(
        scans=np.arange(1, horizon + 1),
        mean_cardinality=mean_card,
        std_cardinality=std_card,
        mean_clutter_rate=mean_clut,
        rms_tm_error=rms_tm,
        true_count=np.array([truth.count_at(k) for k in range(1, horizon + 1)]),
        runs=n,
        failed_runs=failed,
    )
