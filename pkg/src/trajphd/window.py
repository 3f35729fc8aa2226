"""Dense Gaussian algebra over a trajectory's retained time window.

A trajectory component keeps the joint Gaussian over its last ``W`` time
steps as a stacked mean and a full ``W*n x W*n`` covariance.  Prediction
appends one block (evicting the oldest when a window cap is hit) and the
measurement update conditions the whole window through the cross
covariance column of the newest step, which simultaneously filters the
newest state and smooths every retained past state.
"""
from __future__ import annotations

import math

import numpy as np


def append_predict(
    mean: np.ndarray,
    cov: np.ndarray,
    motion,
    n_x: int,
    window_cap: int | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Grow the window by one predicted time step.

    Returns ``(new_mean, new_cov, evicted)`` where ``evicted`` is the oldest
    mean block when the window was already at ``window_cap`` (else None).
    """
    if mean.size == n_x and window_cap == 1:
        # single-step window: plain current-state prediction
        jac = motion.jacobian(mean)
        corner = jac @ cov @ jac.T + motion.noise_cov()
        return motion.predict_mean(mean), 0.5 * (corner + corner.T), mean

    last = mean[-n_x:]
    jac = motion.jacobian(last)
    new_block = motion.predict_mean(last)
    corner = jac @ cov[-n_x:, -n_x:] @ jac.T + motion.noise_cov()

    evicted = None
    if window_cap is not None and mean.size // n_x >= window_cap:
        evicted = mean[:n_x].copy()
        mean = mean[n_x:]
        cov = cov[n_x:, n_x:]

    w = mean.size
    out_mean = np.concatenate([mean, new_block])
    out_cov = np.empty((w + n_x, w + n_x))
    if w:
        out_cov[:w, :w] = cov
        cross = cov[:, w - n_x:] @ jac.T
        out_cov[:w, w:] = cross
        out_cov[w:, :w] = cross.T
    out_cov[w:, w:] = 0.5 * (corner + corner.T)
    return out_mean, out_cov, evicted


def _spd_inverse(cov: np.ndarray) -> tuple[np.ndarray, float]:
    """(inverse, determinant) of a small SPD matrix, closed form for 1x1/2x2."""
    n = cov.shape[0]
    if n == 1:
        det = cov[0, 0]
        if det <= 0.0:
            raise np.linalg.LinAlgError("innovation covariance not positive definite")
        return np.array([[1.0 / det]]), det
    if n == 2:
        a, b, c = cov[0, 0], cov[0, 1], cov[1, 1]
        det = a * c - b * b
        if det <= 0.0 or a <= 0.0:
            raise np.linalg.LinAlgError("innovation covariance not positive definite")
        return np.array([[c, -b], [-b, a]]) / det, det
    chol = np.linalg.cholesky(cov)
    inv = np.linalg.inv(cov)
    det = np.prod(np.diag(chol)) ** 2
    return inv, det


def gaussian_density(resid: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """N(resid; 0, cov) for residuals stacked as rows."""
    if resid.shape[0] == 0:
        return np.zeros(0)
    inv, det = _spd_inverse(cov)
    maha = np.einsum("ij,jk,ik->i", resid, inv, resid)
    norm = 1.0 / ((2.0 * math.pi) ** (0.5 * cov.shape[0]) * math.sqrt(det))
    return norm * np.exp(-0.5 * maha)


def kalman_window_update(
    mean: np.ndarray,
    cov: np.ndarray,
    sensor,
    zs: np.ndarray,
    n_x: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Condition the window Gaussian on the newest step's measurement model.

    The gain spans the whole window (cross covariance column of the newest
    block), so past window states receive their smoothing correction in the
    same operation.  Returns ``(z_pred, innov_cov, post_cov, post_means,
    densities)`` with one posterior mean row and one predictive density per
    measurement row in ``zs``.
    """
    if mean.size == n_x:
        # single-step window: plain current-state update, no slicing plumbing
        jac = sensor.jacobian(mean)
        z_pred = sensor.measure_mean(mean)
        cross = cov @ jac.T
        innov_cov = jac @ cross + sensor.noise_cov()
    else:
        x = mean[-n_x:]
        jac = sensor.jacobian(x)
        z_pred = sensor.measure_mean(x)
        innov_cov = jac @ cov[-n_x:, -n_x:] @ jac.T + sensor.noise_cov()
        cross = cov[:, -n_x:] @ jac.T                   # (W*n_x, n_z)
    innov_cov = 0.5 * (innov_cov + innov_cov.T)
    inv, det = _spd_inverse(innov_cov)
    gain = cross @ inv                                  # (W*n_x, n_z)
    post_cov = cov - gain @ cross.T
    post_cov = 0.5 * (post_cov + post_cov.T)
    resid = zs - z_pred
    post_means = mean + resid @ gain.T
    if resid.shape[0]:
        maha = np.einsum("ij,jk,ik->i", resid, inv, resid)
        norm = 1.0 / ((2.0 * math.pi) ** (0.5 * innov_cov.shape[0]) * math.sqrt(det))
        dens = norm * np.exp(-0.5 * maha)
    else:
        dens = np.zeros(0)
    return z_pred, innov_cov, post_cov, post_means, dens
