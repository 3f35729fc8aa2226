"""Scenario configuration: every tunable of the simulation experiment.

The defaults reproduce the benchmark scenario: four turning targets in a
[-2000, 2000] x [0, 2000] m region observed for 100 s by a bearing-range
sensor at the origin, binomial clutter from 20 generators firing with
probability 0.5, and a robust filter that has to learn both the 0.98
detection probability and the clutter rate.

Configs are plain-value dataclasses, loadable from and dumpable to YAML
(key/value with nested sections).  Kinematic quantities in the config are
written position-first ``(x, y, vx, vy)``; the internal state layout is
``[px, vx, py, vy, turn_rate]`` and :func:`kinematic_state` converts.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .models import (
    BearingRangeSensor,
    ClutterSpatialDensity,
    CtModel,
    LinearMotion,
    LinearSensor,
)
from .robust import TrackBirth
from .types import ClutterComponent

STATE_DIM = 5


def kinematic_state(
    x: float, y: float, vx: float = 0.0, vy: float = 0.0, turn_rate: float = 0.0
) -> np.ndarray:
    """Internal state vector [px, vx, py, vy, turn_rate]."""
    return np.array([x, vx, y, vy, turn_rate])


def position_of(state: np.ndarray) -> np.ndarray:
    return state[[0, 2]]


@dataclass(frozen=True)
class MotionConfig:
    kind: str = "ct"                       # "ct" or "linear"
    dt: float = 1.0
    accel_noise_std: float = 1.0           # m/s^2 per axis
    turn_noise_std: float = math.pi / 180  # rad/s random-walk increment
    f: tuple = ()                          # linear kind: transition matrix rows
    q: tuple = ()                          # linear kind: process noise rows

    def __post_init__(self) -> None:
        object.__setattr__(self, "f", _to_rows(self.f))
        object.__setattr__(self, "q", _to_rows(self.q))


@dataclass(frozen=True)
class SensorConfig:
    kind: str = "bearing_range"            # "bearing_range" or "linear"
    bearing_noise_std: float = math.pi / 180
    range_noise_std: float = 2.0
    h: tuple = ()                          # linear kind: observation matrix rows
    r: tuple = ()                          # linear kind: noise covariance rows

    def __post_init__(self) -> None:
        object.__setattr__(self, "h", _to_rows(self.h))
        object.__setattr__(self, "r", _to_rows(self.r))


@dataclass(frozen=True)
class RegionConfig:
    position_bounds: tuple = ((-2000.0, 2000.0), (0.0, 2000.0))
    measurement_bounds: tuple = ((-2.0 * math.pi, 2.0 * math.pi), (0.0, 2000.0))

    def __post_init__(self) -> None:
        object.__setattr__(self, "position_bounds", _to_rows(self.position_bounds))
        object.__setattr__(self, "measurement_bounds", _to_rows(self.measurement_bounds))


@dataclass(frozen=True)
class TargetConfig:
    """One true target: position-first kinematics plus lifetime."""

    x: float
    y: float
    vx: float
    vy: float
    birth: int
    death: int


@dataclass(frozen=True)
class BirthSiteConfig:
    """One Gaussian birth component of the filters."""

    x: float
    y: float
    weight: float = 0.01
    position_std: float = 50.0
    velocity_std: float = 50.0
    turn_rate_std: float = 3.0 * math.pi / 180
    beta_u: float = 8.0
    beta_v: float = 2.0


@dataclass(frozen=True)
class ClutterTruthConfig:
    generator_count: int = 20
    detection_probability: float = 0.5


@dataclass(frozen=True)
class ClutterFilterConfig:
    survival: float = 0.9
    birth_weight: float = 5.0
    birth_u: float = 1.0
    birth_v: float = 1.0


@dataclass(frozen=True)
class FilterConfig:
    survival: float = 0.99
    k_beta: float = 1.1
    prune_threshold: float = 1e-5
    absorb_threshold: float = 4.0
    max_components: int = 100
    lscan: int = 5


@dataclass(frozen=True)
class ScenarioConfig:
    motion: MotionConfig = field(default_factory=MotionConfig)
    sensor: SensorConfig = field(default_factory=SensorConfig)
    region: RegionConfig = field(default_factory=RegionConfig)
    detection_probability: float = 0.98
    targets: tuple = (
        TargetConfig(x=1005.0, y=1489.0, vx=8.0, vy=-10.0, birth=1, death=100),
        TargetConfig(x=-256.0, y=1011.0, vx=20.0, vy=3.0, birth=10, death=100),
        TargetConfig(x=-1507.0, y=257.0, vx=11.0, vy=10.0, birth=10, death=80),
        TargetConfig(x=250.0, y=750.0, vx=-40.0, vy=25.0, birth=40, death=100),
    )
    births: tuple = (
        BirthSiteConfig(x=-1500.0, y=250.0),
        BirthSiteConfig(x=-250.0, y=1000.0),
        BirthSiteConfig(x=250.0, y=750.0),
        BirthSiteConfig(x=1000.0, y=1500.0),
    )
    clutter_truth: ClutterTruthConfig = field(default_factory=ClutterTruthConfig)
    clutter_filter: ClutterFilterConfig = field(default_factory=ClutterFilterConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    horizon: int = 100
    runs: int = 100
    seed: int = 20240

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "targets",
            tuple(t if isinstance(t, TargetConfig) else TargetConfig(**t) for t in self.targets),
        )
        object.__setattr__(
            self,
            "births",
            tuple(
                b if isinstance(b, BirthSiteConfig) else BirthSiteConfig(**b)
                for b in self.births
            ),
        )

    # --- derived quantities -------------------------------------------------

    @property
    def expected_clutter_rate(self) -> float:
        ct = self.clutter_truth
        return ct.generator_count * ct.detection_probability

    # --- model builders -----------------------------------------------------

    def build_motion(self):
        if self.motion.kind == "ct":
            return CtModel(
                dt=self.motion.dt,
                accel_noise_std=self.motion.accel_noise_std,
                turn_noise_std=self.motion.turn_noise_std,
            )
        if self.motion.kind == "linear":
            return LinearMotion(F=np.array(self.motion.f), Q=np.array(self.motion.q))
        raise ValueError(f"unknown motion kind {self.motion.kind!r}")

    def build_sensor(self):
        if self.sensor.kind == "bearing_range":
            r = np.diag(
                [self.sensor.bearing_noise_std**2, self.sensor.range_noise_std**2]
            )
            return BearingRangeSensor(R=r)
        if self.sensor.kind == "linear":
            return LinearSensor(H=np.array(self.sensor.h), R=np.array(self.sensor.r))
        raise ValueError(f"unknown sensor kind {self.sensor.kind!r}")

    def build_clutter_density(self) -> ClutterSpatialDensity:
        return ClutterSpatialDensity(bounds=self.region.measurement_bounds)

    def birth_track_components(self) -> list[TrackBirth]:
        out = []
        for b in self.births:
            cov = np.diag(
                [
                    b.position_std**2,
                    b.velocity_std**2,
                    b.position_std**2,
                    b.velocity_std**2,
                    b.turn_rate_std**2,
                ]
            )
            out.append(
                TrackBirth(
                    weight=b.weight,
                    mean=kinematic_state(b.x, b.y),
                    cov=cov,
                    beta_u=b.beta_u,
                    beta_v=b.beta_v,
                )
            )
        return out

    def birth_clutter_components(self) -> list[ClutterComponent]:
        cf = self.clutter_filter
        if cf.birth_weight <= 0.0:
            return []
        return [
            ClutterComponent(
                weight=cf.birth_weight, beta_u=cf.birth_u, beta_v=cf.birth_v
            )
        ]

    def initial_target_state(self, t: TargetConfig) -> np.ndarray:
        return kinematic_state(t.x, t.y, t.vx, t.vy)

    # --- validation ---------------------------------------------------------

    def validate(self) -> list[str]:
        out = []
        for name, p in [
            ("detection_probability", self.detection_probability),
            ("filter.survival", self.filter.survival),
            ("clutter_filter.survival", self.clutter_filter.survival),
            ("clutter_truth.detection_probability", self.clutter_truth.detection_probability),
        ]:
            if not 0.0 <= p <= 1.0:
                out.append(f"{name} = {p} outside [0, 1]")
        if self.filter.prune_threshold <= 0.0:
            out.append("filter.prune_threshold must be > 0")
        if not math.isfinite(self.filter.absorb_threshold) or self.filter.absorb_threshold <= 0:
            out.append("filter.absorb_threshold must be positive and finite")
        if self.filter.lscan < 1:
            out.append("filter.lscan must be >= 1")
        if self.filter.k_beta < 1.0 or not math.isfinite(self.filter.k_beta):
            out.append("filter.k_beta must be finite and >= 1")
        if self.horizon < 1:
            out.append("horizon must be >= 1")
        if self.runs < 1:
            out.append("runs must be >= 1")
        for i, t in enumerate(self.targets):
            if not 1 <= t.birth <= t.death:
                out.append(f"targets[{i}]: lifetime [{t.birth}, {t.death}] invalid")
        return out


def _to_rows(rows) -> tuple:
    return tuple(tuple(float(v) for v in row) for row in rows)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    return dataclasses.asdict(cfg)


def config_from_dict(data: dict) -> ScenarioConfig:
    def build(cls, payload):
        if payload is None:
            return cls()
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in payload.items():
            if key not in fields:
                raise ValueError(f"unknown config key {key!r} for {cls.__name__}")
            kwargs[key] = value
        return cls(**kwargs)

    data = dict(data or {})
    nested = {
        "motion": MotionConfig,
        "sensor": SensorConfig,
        "region": RegionConfig,
        "clutter_truth": ClutterTruthConfig,
        "clutter_filter": ClutterFilterConfig,
        "filter": FilterConfig,
    }
    kwargs = {}
    for key, value in data.items():
        if key in nested:
            kwargs[key] = build(nested[key], value)
        elif key == "targets":
            kwargs[key] = tuple(TargetConfig(**t) for t in value)
        elif key == "births":
            kwargs[key] = tuple(BirthSiteConfig(**b) for b in value)
        else:
            kwargs[key] = value
    cfg = ScenarioConfig(**kwargs)
    problems = cfg.validate()
    if problems:
        raise ValueError("invalid configuration: " + "; ".join(problems))
    return cfg


def load_config(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    try:
        return config_from_dict(data)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{path}: {exc}") from exc


def dump_config(cfg: ScenarioConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config_to_dict(cfg), fh, sort_keys=False)
