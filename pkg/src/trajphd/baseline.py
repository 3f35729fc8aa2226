"""Known-parameter Gaussian-mixture trajectory PHD filter.

Comparison baseline: detection probability and clutter rate are fixed
inputs instead of Beta-distributed states.  Window mechanics, reduction
and estimation share the robust filter's machinery; only the weight
bookkeeping differs:

* misdetection copy: weight ``w * (1 - p_d)``;
* detection copy per measurement z: weight
  ``w * p_d * q(z) / (clutter_rate * c_bar(z) + sum_l w_l * p_d * q_l(z))``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .reduction import prune_and_absorb_tracks, round_half_up
from .robust import PhdEstimate, TrackBirth, TrackEstimate
from .types import Scan
from .window import append_predict, kalman_window_update

__all__ = [
    "GmTrajectoryComponent",
    "GmTphdState",
    "tphd_predict",
    "tphd_update",
    "tphd_prune_and_absorb",
    "tphd_estimate",
]


@dataclass(frozen=True)
class GmTrajectoryComponent:
    """Gaussian trajectory-window mixture term without Beta parameters."""

    weight: float
    birth_time: int
    mean: np.ndarray
    cov: np.ndarray
    state_dim: int
    archive: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float).ravel())
        object.__setattr__(self, "cov", np.asarray(self.cov, dtype=float))
        object.__setattr__(self, "archive", np.asarray(self.archive, dtype=float).ravel())

    @property
    def window_len(self) -> int:
        return self.mean.size // self.state_dim

    @property
    def length(self) -> int:
        return (self.mean.size + self.archive.size) // self.state_dim

    @property
    def full_mean(self) -> np.ndarray:
        if self.archive.size == 0:
            return self.mean
        return np.concatenate([self.archive, self.mean])


@dataclass(frozen=True)
class GmTphdState:
    time: int
    tracks: tuple[GmTrajectoryComponent, ...] = ()

    def total_weight(self) -> float:
        return float(sum(c.weight for c in self.tracks))


def tphd_predict(
    state: GmTphdState,
    motion,
    birth_tracks: list[TrackBirth],
    p_s: float,
    window_cap: int | None = None,
) -> GmTphdState:
    k = state.time + 1
    tracks: list[GmTrajectoryComponent] = []
    for c in state.tracks:
        mean, cov, evicted = append_predict(c.mean, c.cov, motion, c.state_dim, window_cap)
        archive = c.archive if evicted is None else np.concatenate([c.archive, evicted])
        tracks.append(
            GmTrajectoryComponent(
                weight=p_s * c.weight,
                birth_time=c.birth_time,
                mean=mean,
                cov=cov,
                state_dim=c.state_dim,
                archive=archive,
            )
        )
    for b in birth_tracks:
        tracks.append(
            GmTrajectoryComponent(
                weight=b.weight,
                birth_time=k,
                mean=b.mean,
                cov=b.cov,
                state_dim=b.mean.size,
            )
        )
    return GmTphdState(time=k, tracks=tuple(tracks))


def tphd_update(
    state: GmTphdState,
    scan: Scan,
    sensor,
    p_d: float,
    clutter_rate: float,
    clutter_density,
    min_weight: float = 0.0,
) -> GmTphdState:
    if not 0.0 <= p_d <= 1.0:
        raise ValueError(f"detection probability {p_d} outside [0, 1]")
    if clutter_rate < 0.0:
        raise ValueError("clutter rate must be nonnegative")
    if scan.time != state.time:
        raise ValueError(f"scan time {scan.time} does not match state time {state.time}")
    zs = scan.measurements
    n_meas = zs.shape[0]
    n_tracks = len(state.tracks)

    post_covs: list[np.ndarray] = []
    post_means: list[np.ndarray] = []
    det_terms = np.zeros((n_tracks, n_meas))
    for j, c in enumerate(state.tracks):
        _, _, post_cov, means_j, dens = kalman_window_update(
            c.mean, c.cov, sensor, zs, c.state_dim
        )
        post_covs.append(post_cov)
        post_means.append(means_j)
        det_terms[j] = c.weight * p_d * dens

    denom = clutter_rate * clutter_density.density_many(zs) + det_terms.sum(axis=0)
    bad = np.nonzero(denom <= 0.0)[0]
    if bad.size and p_d > 0.0:
        raise ValueError(
            f"measurement outside model support: z={zs[bad[0]]} has zero mixture density"
        )

    tracks: list[GmTrajectoryComponent] = []
    for j, c in enumerate(state.tracks):
        tracks.append(replace(c, weight=c.weight * (1.0 - p_d)))
        if p_d == 0.0:
            continue
        for i in range(n_meas):
            w = det_terms[j, i] / denom[i]
            if w < min_weight:
                continue
            tracks.append(
                GmTrajectoryComponent(
                    weight=w,
                    birth_time=c.birth_time,
                    mean=post_means[j][i],
                    cov=post_covs[j],
                    state_dim=c.state_dim,
                    archive=c.archive,
                )
            )
    return GmTphdState(time=state.time, tracks=tuple(tracks))


def tphd_prune_and_absorb(
    state: GmTphdState, gamma_p: float, gamma_a: float, j_max: int
) -> GmTphdState:
    if gamma_p <= 0.0 or gamma_a <= 0.0 or j_max < 1:
        raise ValueError("reduction thresholds must be positive")
    tracks, _ = prune_and_absorb_tracks(state.tracks, gamma_p, gamma_a, j_max)
    return GmTphdState(time=state.time, tracks=tuple(tracks))


def tphd_estimate(state: GmTphdState) -> PhdEstimate:
    cardinality = round_half_up(state.total_weight())
    order = sorted(state.tracks, key=lambda c: -c.weight)
    tracks = tuple(
        TrackEstimate(
            birth_time=c.birth_time,
            length=c.length,
            mean=c.full_mean,
            state_dim=c.state_dim,
        )
        for c in order[:cardinality]
    )
    return PhdEstimate(
        tracks=tracks,
        clutter_rate=None,
        cardinality=cardinality,
        shortfall=max(0, cardinality - len(order)),
    )
