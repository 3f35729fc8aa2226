"""Shared data model: trajectories, mixture components, scans.

All types are immutable value types; every filter step builds new
instances.  Trajectory components keep a dense joint Gaussian over the
retained window of time steps (stacked mean of length ``window_len *
state_dim`` plus the full cross-covariance), together with a Beta law for
the current detection probability.  Means evicted from the window by the
rolling-window approximation are appended to ``archive``, so
``[archive; mean]`` is always the full trajectory mean.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Trajectory",
    "TrajectoryComponent",
    "ClutterComponent",
    "BgmPhd",
    "Scan",
    "current_marginal",
    "validate",
    "phd_to_dict",
    "phd_from_dict",
]


@dataclass(frozen=True)
class Trajectory:
    """A single trajectory: birth time plus one state per time step."""

    birth_time: int
    states: np.ndarray  # (length, state_dim)

    def __post_init__(self) -> None:
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 2 or states.shape[0] < 1:
            raise ValueError("states must be a (length, state_dim) array, length >= 1")
        object.__setattr__(self, "states", states)

    @property
    def length(self) -> int:
        return self.states.shape[0]

    @property
    def end_time(self) -> int:
        return self.birth_time + self.length - 1


@dataclass(frozen=True)
class TrajectoryComponent:
    """One Beta-Gaussian mixture term over a trajectory window."""

    weight: float
    birth_time: int
    mean: np.ndarray      # (window_len * state_dim,)
    cov: np.ndarray       # (window_len * state_dim, window_len * state_dim)
    beta_u: float
    beta_v: float
    state_dim: int
    archive: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        # hot path: most instances are built from already-canonical arrays
        if not (isinstance(self.mean, np.ndarray) and self.mean.ndim == 1):
            object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float).ravel())
        if not isinstance(self.cov, np.ndarray):
            object.__setattr__(self, "cov", np.asarray(self.cov, dtype=float))
        if not (isinstance(self.archive, np.ndarray) and self.archive.ndim == 1):
            object.__setattr__(self, "archive", np.asarray(self.archive, dtype=float).ravel())

    @property
    def window_len(self) -> int:
        return self.mean.size // self.state_dim

    @property
    def archive_len(self) -> int:
        return self.archive.size // self.state_dim

    @property
    def length(self) -> int:
        """Total trajectory length in time steps (archive + window)."""
        return self.window_len + self.archive_len

    @property
    def full_mean(self) -> np.ndarray:
        """Full trajectory mean [archive; window]."""
        if self.archive.size == 0:
            return self.mean
        return np.concatenate([self.archive, self.mean])

    def states(self) -> np.ndarray:
        """Full trajectory mean reshaped to (length, state_dim)."""
        return self.full_mean.reshape(self.length, self.state_dim)


@dataclass(frozen=True)
class ClutterComponent:
    """One Beta mixture term for a clutter generator."""

    weight: float
    beta_u: float
    beta_v: float


@dataclass(frozen=True)
class BgmPhd:
    """Full filter state: track and clutter mixtures at a scan index."""

    time: int
    tracks: tuple[TrajectoryComponent, ...] = ()
    clutter: tuple[ClutterComponent, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "tracks", tuple(self.tracks))
        object.__setattr__(self, "clutter", tuple(self.clutter))

    def total_track_weight(self) -> float:
        return float(sum(c.weight for c in self.tracks))

    def total_clutter_weight(self) -> float:
        return float(sum(c.weight for c in self.clutter))


@dataclass(frozen=True)
class Scan:
    """Timestamped finite set of measurement vectors, one per row."""

    time: int
    measurements: np.ndarray  # (count, meas_dim)

    def __post_init__(self) -> None:
        z = np.asarray(self.measurements, dtype=float)
        if z.ndim == 1:
            z = z.reshape(1, -1) if z.size else z.reshape(0, 0)
        if z.ndim != 2:
            raise ValueError("measurements must be a (count, meas_dim) array")
        object.__setattr__(self, "measurements", z)

    @classmethod
    def from_vectors(cls, time: int, vectors: Iterable[Sequence[float]], meas_dim: int) -> "Scan":
        rows = [np.asarray(v, dtype=float) for v in vectors]
        if not rows:
            return cls(time, np.zeros((0, meas_dim)))
        return cls(time, np.vstack(rows))

    def __len__(self) -> int:
        return self.measurements.shape[0]


def current_marginal(c: TrajectoryComponent) -> tuple[np.ndarray, np.ndarray]:
    """Marginal mean and covariance of the newest time step in the window."""
    n = c.state_dim
    if c.mean.size < n:
        raise ValueError("empty trajectory window")
    return c.mean[-n:].copy(), c.cov[-n:, -n:].copy()


def _check_cov(cov: np.ndarray, dim: int, where: str, out: list[str]) -> None:
    if cov.shape != (dim, dim):
        out.append(f"{where}: cov shape {cov.shape} does not match mean length {dim}")
        return
    if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-9 * max(1.0, float(np.abs(cov).max()))):
        out.append(f"{where}: cov not symmetric")
        return
    if dim:
        eigvals = np.linalg.eigvalsh(0.5 * (cov + cov.T))
        scale = float(np.linalg.norm(cov, 2))
        if eigvals.min() < -1e-9 * max(1.0, scale):
            out.append(f"{where}: cov not positive semidefinite (min eig {eigvals.min():.3e})")


def validate(phd: BgmPhd) -> list[str]:
    """All type-invariant violations in ``phd``; empty list means valid."""
    out: list[str] = []
    for j, c in enumerate(phd.tracks):
        where = f"track[{j}]"
        if not c.weight >= 0.0:
            out.append(f"{where}: weight {c.weight} < 0")
        if not (c.beta_u > 0.0 and np.isfinite(c.beta_u)):
            out.append(f"{where}: beta_u {c.beta_u} not a positive real")
        if not (c.beta_v > 0.0 and np.isfinite(c.beta_v)):
            out.append(f"{where}: beta_v {c.beta_v} not a positive real")
        if c.mean.size == 0 or c.mean.size % c.state_dim:
            out.append(f"{where}: mean length {c.mean.size} not a positive multiple of {c.state_dim}")
            continue
        if c.archive.size % c.state_dim:
            out.append(f"{where}: archive length {c.archive.size} not a multiple of {c.state_dim}")
            continue
        _check_cov(c.cov, c.mean.size, where, out)
        if c.birth_time + c.length - 1 != phd.time:
            out.append(
                f"{where}: birth {c.birth_time} + length {c.length} - 1 != time {phd.time}"
            )
    for j, c in enumerate(phd.clutter):
        where = f"clutter[{j}]"
        if not c.weight >= 0.0:
            out.append(f"{where}: weight {c.weight} < 0")
        if not c.beta_u >= 1.0:
            out.append(f"{where}: beta_u {c.beta_u} < 1")
        if not c.beta_v >= 1.0:
            out.append(f"{where}: beta_v {c.beta_v} < 1")
    return out


def phd_to_dict(phd: BgmPhd) -> dict:
    """JSON-serialisable encoding of a filter state."""
    return {
        "time": phd.time,
        "tracks": [
            {
                "weight": c.weight,
                "birth_time": c.birth_time,
                "mean": c.mean.tolist(),
                "cov": c.cov.tolist(),
                "beta_u": c.beta_u,
                "beta_v": c.beta_v,
                "state_dim": c.state_dim,
                "archive": c.archive.tolist(),
            }
            for c in phd.tracks
        ],
        "clutter": [
            {"weight": c.weight, "beta_u": c.beta_u, "beta_v": c.beta_v}
            for c in phd.clutter
        ],
    }


def phd_from_dict(data: dict) -> BgmPhd:
    tracks = tuple(
        TrajectoryComponent(
            weight=t["weight"],
            birth_time=t["birth_time"],
            mean=np.asarray(t["mean"]),
            cov=np.asarray(t["cov"]).reshape(len(t["mean"]), len(t["mean"])),
            beta_u=t["beta_u"],
            beta_v=t["beta_v"],
            state_dim=t["state_dim"],
            archive=np.asarray(t["archive"]),
        )
        for t in data["tracks"]
    )
    clutter = tuple(
        ClutterComponent(weight=c["weight"], beta_u=c["beta_u"], beta_v=c["beta_v"])
        for c in data["clutter"]
    )
    return BgmPhd(time=data["time"], tracks=tracks, clutter=clutter)
