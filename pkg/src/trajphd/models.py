"""Motion and sensor models.

The filters only ever consume a model through the triple
(mean map, jacobian, noise covariance), so a linear model and the
first-order linearisation of a nonlinear one plug into the same update
formulas.  State layout for the planar turning model is
``[px, vx, py, vy, turn_rate]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Below this |turn_rate * dt| the closed-form turn coefficients lose digits
# to cancellation, so series expansions take over (truncation error ~ w^4).
_TURN_SERIES_THRESHOLD = 1e-4


@dataclass(frozen=True)
class LinearMotion:
    """x' = F x + w, w ~ N(0, Q)."""

    F: np.ndarray
    Q: np.ndarray

    def predict_mean(self, x: np.ndarray) -> np.ndarray:
        return self.F @ x

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        return self.F

    def noise_cov(self) -> np.ndarray:
        return self.Q


@dataclass(frozen=True)
class LinearSensor:
    """z = H x + v, v ~ N(0, R)."""

    H: np.ndarray
    R: np.ndarray

    def measure_mean(self, x: np.ndarray) -> np.ndarray:
        return self.H @ x

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        return self.H

    def noise_cov(self) -> np.ndarray:
        return self.R


@dataclass(frozen=True)
class LinearModel:
    """Linear Gaussian motion + observation pair, mainly for exactness tests."""

    F: np.ndarray
    Q: np.ndarray
    H: np.ndarray
    R: np.ndarray

    @property
    def motion(self) -> LinearMotion:
        return LinearMotion(self.F, self.Q)

    @property
    def sensor(self) -> LinearSensor:
        return LinearSensor(self.H, self.R)


@dataclass(frozen=True)
class CtModel:
    """Planar coordinated-turn dynamics with turn-rate random walk.

    The position/velocity block turns at the state's own turn rate; process
    noise enters as white acceleration (std ``accel_noise_std`` per axis)
    plus a random-walk increment on the turn rate (std ``turn_noise_std``).
    """

    dt: float = 1.0
    accel_noise_std: float = 1.0
    turn_noise_std: float = math.pi / 180.0

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.accel_noise_std < 0 or self.turn_noise_std < 0:
            raise ValueError("noise scales must be nonnegative")
        gain = self.noise_gain()
        scales = np.array(
            [self.accel_noise_std**2, self.accel_noise_std**2, self.turn_noise_std**2]
        )
        object.__setattr__(self, "_noise_cov", gain @ np.diag(scales) @ gain.T)

    def _coeffs(self, zeta: float) -> tuple[float, float, float, float]:
        dt = self.dt
        wd = zeta * dt
        if abs(wd) < _TURN_SERIES_THRESHOLD:
            a = dt * (1.0 - wd * wd / 6.0)
            b = dt * wd * (0.5 - wd * wd / 24.0)
            return a, b, math.cos(wd), math.sin(wd)
        return (
            math.sin(wd) / zeta,
            (1.0 - math.cos(wd)) / zeta,
            math.cos(wd),
            math.sin(wd),
        )

    def predict_mean(self, x: np.ndarray) -> np.ndarray:
        px, vx, py, vy, zeta = x
        a, b, c, d = self._coeffs(zeta)
        return np.array(
            [
                px + a * vx - b * vy,
                c * vx - d * vy,
                py + b * vx + a * vy,
                d * vx + c * vy,
                zeta,
            ]
        )

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        _, vx, _, vy, zeta = x
        dt = self.dt
        a, b, c, d = self._coeffs(zeta)
        wd = zeta * dt
        if abs(wd) < _TURN_SERIES_THRESHOLD:
            da = -zeta * dt**3 * (1.0 / 3.0 - wd * wd / 30.0)
            db = dt * dt * (0.5 - wd * wd / 8.0)
        else:
            da = (dt * zeta * math.cos(wd) - math.sin(wd)) / zeta**2
            db = (dt * zeta * math.sin(wd) - (1.0 - math.cos(wd))) / zeta**2
        dc, dd = -dt * d, dt * c
        jac = np.zeros((5, 5))
        jac[0, 0] = jac[2, 2] = jac[4, 4] = 1.0
        jac[0, 1] = a
        jac[0, 3] = -b
        jac[0, 4] = vx * da - vy * db
        jac[1, 1] = c
        jac[1, 3] = -d
        jac[1, 4] = vx * dc - vy * dd
        jac[2, 1] = b
        jac[2, 3] = a
        jac[2, 4] = vx * db + vy * da
        jac[3, 1] = d
        jac[3, 3] = c
        jac[3, 4] = vx * dd + vy * dc
        return jac

    def noise_gain(self) -> np.ndarray:
        """Gain mapping [ax, ay, turn-increment] noise into the state."""
        dt = self.dt
        g = np.zeros((5, 3))
        g[0, 0] = 0.5 * dt * dt
        g[1, 0] = dt
        g[2, 1] = 0.5 * dt * dt
        g[3, 1] = dt
        g[4, 2] = dt
        return g

    def noise_cov(self) -> np.ndarray:
        return self._noise_cov

    def transition(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(mean, jacobian, noise covariance) of one prediction step."""
        return self.predict_mean(x), self.jacobian(x), self.noise_cov()


@dataclass(frozen=True)
class BearingRangeSensor:
    """Bearing (from the +y axis, quadrant aware) and range from the origin."""

    R: np.ndarray = field(
        default_factory=lambda: np.diag([(math.pi / 180.0) ** 2, 4.0])
    )
    pos_ix: tuple[int, int] = (0, 2)  # (px, py) indices in the state vector

    def measure_mean(self, x: np.ndarray) -> np.ndarray:
        px, py = x[self.pos_ix[0]], x[self.pos_ix[1]]
        rng = math.hypot(px, py)
        if rng <= 0.0:
            raise ValueError("range singularity: target at the sensor origin")
        return np.array([math.atan2(px, py), rng])

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        px, py = x[self.pos_ix[0]], x[self.pos_ix[1]]
        r2 = px * px + py * py
        if r2 <= 0.0:
            raise ValueError("range singularity: target at the sensor origin")
        rng = math.sqrt(r2)
        jac = np.zeros((2, x.shape[0]))
        jac[0, self.pos_ix[0]] = py / r2
        jac[0, self.pos_ix[1]] = -px / r2
        jac[1, self.pos_ix[0]] = px / rng
        jac[1, self.pos_ix[1]] = py / rng
        return jac

    def noise_cov(self) -> np.ndarray:
        return self.R


@dataclass(frozen=True)
class ClutterSpatialDensity:
    """Uniform spatial density over a rectangle in measurement space."""

    bounds: tuple[tuple[float, float], ...]  # ((lo, hi) per measurement axis)

    def __post_init__(self) -> None:
        for lo, hi in self.bounds:
            if not hi > lo:
                raise ValueError("clutter region bounds must have positive extent")

    @property
    def volume(self) -> float:
        vol = 1.0
        for lo, hi in self.bounds:
            vol *= hi - lo
        return vol

    @property
    def value(self) -> float:
        return 1.0 / self.volume

    def contains(self, z: np.ndarray) -> bool:
        return all(lo <= zi <= hi for zi, (lo, hi) in zip(z, self.bounds))

    def density(self, z: np.ndarray) -> float:
        return self.value if self.contains(z) else 0.0

    def density_many(self, zs: np.ndarray) -> np.ndarray:
        """Densities for measurements stacked as rows."""
        if zs.shape[0] == 0:
            return np.zeros(0)
        inside = np.ones(zs.shape[0], dtype=bool)
        for axis, (lo, hi) in enumerate(self.bounds):
            inside &= (zs[:, axis] >= lo) & (zs[:, axis] <= hi)
        return np.where(inside, self.value, 0.0)
