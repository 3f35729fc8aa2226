"""Robust trajectory PHD recursion with Beta-Gaussian mixtures.

Tracks carry a Beta law over their current detection probability and
clutter generators carry a Beta law over theirs, so the filter learns the
detection profile and the clutter rate from the measurements while it
builds trajectories.  Weight bookkeeping for one prior track component of
weight w with Beta (u, v):

* misdetection copy: weight ``w * v/(u+v)``, Beta ``(u, v+1)``;
* one detection copy per measurement z: weight
  ``w * u/(u+v) * q(z) / theta(z)``, Beta ``(u+1, v)``, where ``q`` is the
  predictive measurement density and ``theta(z)`` sums the detection terms
  of every track and clutter component, so each measurement distributes
  exactly one unit of posterior weight.

Clutter components update the same way with the clutter spatial density in
place of ``q``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .beta import BetaDegenerateError, BetaParams, beta_mean, predict_beta
from .reduction import (
    ReductionStats,
    prune_and_absorb_tracks,
    prune_and_cap_clutter,
    round_half_up,
)
from .types import BgmPhd, ClutterComponent, Scan, TrajectoryComponent
from .window import append_predict, kalman_window_update

__all__ = [
    "TrackBirth",
    "UpdateDiagnostics",
    "TrackEstimate",
    "PhdEstimate",
    "predict",
    "update",
    "lscan_predict",
    "lscan_update",
    "prune_and_absorb",
    "estimate",
]


@dataclass(frozen=True)
class TrackBirth:
    """One Gaussian birth component with its detection-probability prior."""

    weight: float
    mean: np.ndarray
    cov: np.ndarray
    beta_u: float
    beta_v: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float).ravel())
        object.__setattr__(self, "cov", np.asarray(self.cov, dtype=float))


@dataclass(frozen=True)
class UpdateDiagnostics:
    """Per-scan update internals, mainly for tests and debugging."""

    theta: np.ndarray                 # (num_measurements,) mixture denominators
    track_association: np.ndarray     # (num_tracks, num_measurements) posterior weights
    clutter_association: np.ndarray   # (num_clutter, num_measurements)
    pruned: int = 0
    absorbed: int = 0


@dataclass(frozen=True)
class TrackEstimate:
    birth_time: int
    length: int
    mean: np.ndarray                  # full trajectory mean, (length * state_dim,)
    state_dim: int
    detection_probability: float | None = None

    def states(self) -> np.ndarray:
        return self.mean.reshape(self.length, self.state_dim)


@dataclass(frozen=True)
class PhdEstimate:
    tracks: tuple[TrackEstimate, ...]
    clutter_rate: int | None          # None for the known-clutter baseline
    cardinality: int
    shortfall: int = 0                # cardinality exceeding available components


def predict(
    state: BgmPhd,
    motion,
    birth_tracks: list[TrackBirth],
    birth_clutter: list[ClutterComponent],
    p_s: float,
    p_s_c: float,
    k_beta: float,
    window_cap: int | None = None,
) -> BgmPhd:
    """One-step prediction: survival, window growth, Beta inflation, births.

    Surviving tracks keep their birth time, get weight ``p_s * w``, a
    variance-inflated Beta, and one appended window block (the oldest block
    is archived when ``window_cap`` is reached).  Surviving clutter keeps
    its Beta parameters unchanged at weight ``p_s_c * w``.  Births enter
    with the new scan index as birth time.
    """
    k = state.time + 1
    tracks: list[TrajectoryComponent] = []
    for j, c in enumerate(state.tracks):
        try:
            bp = predict_beta(BetaParams(c.beta_u, c.beta_v), k_beta)
        except BetaDegenerateError as exc:
            raise BetaDegenerateError(f"track component {j}: {exc}") from exc
        mean, cov, evicted = append_predict(c.mean, c.cov, motion, c.state_dim, window_cap)
        archive = c.archive if evicted is None else np.concatenate([c.archive, evicted])
        tracks.append(
            TrajectoryComponent(
                weight=p_s * c.weight,
                birth_time=c.birth_time,
                mean=mean,
                cov=cov,
                beta_u=bp.u,
                beta_v=bp.v,
                state_dim=c.state_dim,
                archive=archive,
            )
        )
    for b in birth_tracks:
        tracks.append(
            TrajectoryComponent(
                weight=b.weight,
                birth_time=k,
                mean=b.mean,
                cov=b.cov,
                beta_u=b.beta_u,
                beta_v=b.beta_v,
                state_dim=b.mean.size,
            )
        )
    clutter = [
        ClutterComponent(weight=p_s_c * c.weight, beta_u=c.beta_u, beta_v=c.beta_v)
        for c in state.clutter
    ]
    clutter.extend(birth_clutter)
    return BgmPhd(time=k, tracks=tuple(tracks), clutter=tuple(clutter))


def lscan_predict(
    state: BgmPhd,
    motion,
    birth_tracks: list[TrackBirth],
    birth_clutter: list[ClutterComponent],
    p_s: float,
    p_s_c: float,
    k_beta: float,
    lscan: int,
) -> BgmPhd:
    """Prediction with the rolling window capped at ``lscan`` time steps."""
    if lscan < 1:
        raise ValueError("window depth must be >= 1")
    return predict(
        state, motion, birth_tracks, birth_clutter, p_s, p_s_c, k_beta, window_cap=lscan
    )


def update(
    state: BgmPhd,
    scan: Scan,
    sensor,
    clutter_density,
    min_weight: float = 0.0,
) -> tuple[BgmPhd, UpdateDiagnostics]:
    """Measurement update of the predicted mixture.

    Every prior component yields one misdetection copy plus one detection
    copy per measurement; the detection weights of all components sharing a
    measurement are normalised by the mixture denominator ``theta(z)``.

    ``min_weight`` skips materialising track detection copies below the
    weight-prune threshold: the subsequent reduction drops them before any
    absorption and never redistributes their mass, so the post-reduction
    state is bit-identical.  Clutter copies are always kept because the
    reduction coalesces them by parameter before pruning.
    """
    if scan.time != state.time:
        raise ValueError(f"scan time {scan.time} does not match state time {state.time}")
    zs = scan.measurements
    n_meas = zs.shape[0]
    n_tracks = len(state.tracks)
    n_clutter = len(state.clutter)

    post_covs: list[np.ndarray] = []
    post_means: list[np.ndarray] = []
    det_terms = np.zeros((n_tracks, n_meas))
    for j, c in enumerate(state.tracks):
        _, _, post_cov, means_j, dens = kalman_window_update(
            c.mean, c.cov, sensor, zs, c.state_dim
        )
        post_covs.append(post_cov)
        post_means.append(means_j)
        det_terms[j] = c.weight * (c.beta_u / (c.beta_u + c.beta_v)) * dens

    c_bar = clutter_density.density_many(zs)
    clut_terms = np.zeros((n_clutter, n_meas))
    for l, c in enumerate(state.clutter):
        clut_terms[l] = c.weight * (c.beta_u / (c.beta_u + c.beta_v)) * c_bar

    theta = det_terms.sum(axis=0) + clut_terms.sum(axis=0)
    bad = np.nonzero(theta <= 0.0)[0]
    if bad.size:
        raise ValueError(
            f"measurement outside model support: z={zs[bad[0]]} has zero mixture density"
        )

    track_assoc = det_terms / theta if n_meas else det_terms
    clut_assoc = clut_terms / theta if n_meas else clut_terms

    tracks: list[TrajectoryComponent] = []
    for j, c in enumerate(state.tracks):
        miss = c.beta_v / (c.beta_u + c.beta_v)
        tracks.append(
            replace(c, weight=c.weight * miss, beta_v=c.beta_v + 1.0)
        )
        for i in range(n_meas):
            w = track_assoc[j, i]
            if w < min_weight:
                continue
            tracks.append(
                TrajectoryComponent(
                    weight=w,
                    birth_time=c.birth_time,
                    mean=post_means[j][i],
                    cov=post_covs[j],
                    beta_u=c.beta_u + 1.0,
                    beta_v=c.beta_v,
                    state_dim=c.state_dim,
                    archive=c.archive,
                )
            )

    clutter: list[ClutterComponent] = []
    for l, c in enumerate(state.clutter):
        miss = c.beta_v / (c.beta_u + c.beta_v)
        clutter.append(ClutterComponent(c.weight * miss, c.beta_u, c.beta_v + 1.0))
        for i in range(n_meas):
            clutter.append(
                ClutterComponent(clut_assoc[l, i], c.beta_u + 1.0, c.beta_v)
            )

    diag = UpdateDiagnostics(
        theta=theta, track_association=track_assoc, clutter_association=clut_assoc
    )
    return BgmPhd(time=state.time, tracks=tuple(tracks), clutter=tuple(clutter)), diag


def lscan_update(
    state: BgmPhd,
    scan: Scan,
    sensor,
    clutter_density,
    lscan: int,
) -> tuple[BgmPhd, UpdateDiagnostics]:
    """Update under the rolling-window approximation.

    The Kalman gain is built from the window's cross covariance column, so
    capping happens entirely in the prediction step; archived means stay
    frozen by construction.
    """
    if lscan < 1:
        raise ValueError("window depth must be >= 1")
    return update(state, scan, sensor, clutter_density)


def prune_and_absorb(
    state: BgmPhd,
    gamma_p: float,
    gamma_a: float,
    j_max: int,
) -> BgmPhd:
    """Reduce both mixtures; see :mod:`trajphd.reduction` for the rules."""
    new_state, _ = prune_and_absorb_with_stats(state, gamma_p, gamma_a, j_max)
    return new_state


def prune_and_absorb_with_stats(
    state: BgmPhd,
    gamma_p: float,
    gamma_a: float,
    j_max: int,
) -> tuple[BgmPhd, ReductionStats]:
    if gamma_p <= 0.0 or gamma_a <= 0.0 or j_max < 1:
        raise ValueError("reduction thresholds must be positive")
    tracks, track_stats = prune_and_absorb_tracks(state.tracks, gamma_p, gamma_a, j_max)
    clutter, clut_stats = prune_and_cap_clutter(state.clutter, gamma_p, j_max)
    stats = ReductionStats(
        pruned=track_stats.pruned + clut_stats.pruned,
        absorbed=track_stats.absorbed,
        capped=track_stats.capped + clut_stats.capped,
    )
    return BgmPhd(time=state.time, tracks=tuple(tracks), clutter=tuple(clutter)), stats


def estimate(state: BgmPhd) -> PhdEstimate:
    """Report the rounded expected track count and the heaviest components.

    Each reported track carries its full mean trajectory (archive plus
    window) and the posterior mean of its detection probability; the
    clutter-rate estimate is the weighted sum of the clutter components'
    detection-probability means, rounded.
    """
    cardinality = round_half_up(state.total_track_weight())
    order = sorted(state.tracks, key=lambda c: -c.weight)
    chosen = order[:cardinality]
    shortfall = max(0, cardinality - len(order))
    tracks = tuple(
        TrackEstimate(
            birth_time=c.birth_time,
            length=c.length,
            mean=c.full_mean,
            state_dim=c.state_dim,
            detection_probability=beta_mean(BetaParams(c.beta_u, c.beta_v)),
        )
        for c in chosen
    )
    clutter_rate = round_half_up(
        sum(c.weight * c.beta_u / (c.beta_u + c.beta_v) for c in state.clutter)
    )
    return PhdEstimate(
        tracks=tracks,
        clutter_rate=clutter_rate,
        cardinality=cardinality,
        shortfall=shortfall,
    )
