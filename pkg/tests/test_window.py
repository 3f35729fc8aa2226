import numpy as np
import pytest

from oracles import kalman_filter, rts_smoother
from trajphd.models import LinearModel
from trajphd.window import append_predict, gaussian_density, kalman_window_update


@pytest.fixture
def cv_model():
    # 1-D constant velocity, position measurement
    f = np.array([[1.0, 1.0], [0.0, 1.0]])
    q = 0.1 * np.array([[1.0 / 3.0, 0.5], [0.5, 1.0]])
    h = np.array([[1.0, 0.0]])
    r = np.array([[0.5]])
    return LinearModel(F=f, Q=q, H=h, R=r)


def test_append_predict_grows_window(cv_model):
    mean = np.array([1.0, 2.0])
    cov = np.diag([4.0, 9.0])
    new_mean, new_cov, evicted = append_predict(mean, cov, cv_model.motion, 2)
    assert evicted is None
    assert new_mean.shape == (4,)
    np.testing.assert_allclose(new_mean[:2], mean)
    np.testing.assert_allclose(new_mean[2:], cv_model.F @ mean)
    np.testing.assert_allclose(new_cov[:2, :2], cov)
    np.testing.assert_allclose(new_cov[2:, 2:], cv_model.F @ cov @ cv_model.F.T + cv_model.Q)
    np.testing.assert_allclose(new_cov[:2, 2:], cov @ cv_model.F.T)
    np.testing.assert_allclose(new_cov, new_cov.T)


def test_append_predict_identity_dynamics_duplicates_block():
    model = LinearModel(F=np.eye(2), Q=np.zeros((2, 2)), H=np.eye(2), R=np.eye(2))
    mean = np.array([3.0, -1.0])
    cov = np.array([[2.0, 0.3], [0.3, 1.0]])
    new_mean, new_cov, _ = append_predict(mean, cov, model.motion, 2)
    np.testing.assert_allclose(new_mean[2:], mean)
    np.testing.assert_allclose(new_cov[2:, 2:], cov)
    np.testing.assert_allclose(new_cov[:2, 2:], cov)


def test_append_predict_evicts_at_cap(cv_model):
    mean = np.arange(6.0)
    root = np.random.default_rng(0).normal(size=(6, 6))
    cov = root @ root.T + np.eye(6)
    new_mean, new_cov, evicted = append_predict(mean, cov, cv_model.motion, 2, window_cap=3)
    np.testing.assert_allclose(evicted, mean[:2])
    assert new_mean.shape == (6,)
    np.testing.assert_allclose(new_mean[:4], mean[2:])
    np.testing.assert_allclose(new_cov[:4, :4], cov[2:, 2:])
    # corner built from the pre-eviction trailing block
    np.testing.assert_allclose(
        new_cov[4:, 4:], cv_model.F @ cov[4:, 4:] @ cv_model.F.T + cv_model.Q
    )


def test_append_predict_cap_one(cv_model):
    mean = np.array([1.0, 1.0])
    cov = np.eye(2)
    new_mean, new_cov, evicted = append_predict(mean, cov, cv_model.motion, 2, window_cap=1)
    np.testing.assert_allclose(evicted, mean)
    np.testing.assert_allclose(new_mean, cv_model.F @ mean)
    np.testing.assert_allclose(new_cov, cv_model.F @ cov @ cv_model.F.T + cv_model.Q)


def test_gaussian_density_matches_direct_formula():
    cov = np.array([[2.0, 0.4], [0.4, 1.0]])
    resid = np.array([[0.5, -0.2], [1.5, 2.0], [0.0, 0.0]])
    dens = gaussian_density(resid, cov)
    inv = np.linalg.inv(cov)
    norm = 1.0 / (2.0 * np.pi * np.sqrt(np.linalg.det(cov)))
    expected = [norm * np.exp(-0.5 * r @ inv @ r) for r in resid]
    np.testing.assert_allclose(dens, expected, rtol=1e-12)


def test_window_update_is_filter_and_smoother(cv_model):
    """The window joint after each update must equal KF (newest step) and
    RTS smoother (all retained steps) computed independently."""
    rng = np.random.default_rng(5)
    m0 = np.array([0.0, 1.0])
    p0 = np.diag([1.0, 1.0])
    zs = [np.array([k + rng.normal(scale=0.5)]) for k in range(6)]

    fm, fp, _, _ = kalman_filter(zs, cv_model.F, cv_model.Q, cv_model.H, cv_model.R, m0, p0)

    mean, cov = m0.copy(), p0.copy()
    for k, z in enumerate(zs):
        if k > 0:
            mean, cov, _ = append_predict(mean, cov, cv_model.motion, 2)
        _, _, post_cov, post_means, _ = kalman_window_update(
            mean, cov, cv_model.sensor, z.reshape(1, 1), 2
        )
        mean, cov = post_means[0], post_cov

        # newest block = filtered moments
        np.testing.assert_allclose(mean[-2:], fm[k], atol=1e-9)
        np.testing.assert_allclose(cov[-2:, -2:], fp[k], atol=1e-9)

        # all retained blocks = fixed-interval smoother over scans 0..k
        sm, sp = rts_smoother(fm[: k + 1], fp[: k + 1], cv_model.F, cv_model.Q)
        for step in range(k + 1):
            np.testing.assert_allclose(
                mean[2 * step : 2 * step + 2], sm[step], atol=1e-9
            )
            np.testing.assert_allclose(
                cov[2 * step : 2 * step + 2, 2 * step : 2 * step + 2],
                sp[step],
                atol=1e-9,
            )


def test_window_update_multiple_measurements_share_cov(cv_model):
    mean = np.array([0.0, 1.0, 1.0, 1.0])
    cov = np.eye(4) * 2.0
    zs = np.array([[0.9], [5.0], [1.1]])
    _, _, post_cov, post_means, dens = kalman_window_update(
        mean, cov, cv_model.sensor, zs, 2
    )
    assert post_means.shape == (3, 4)
    assert dens.shape == (3,)
    assert dens[1] < dens[0]
    np.testing.assert_allclose(post_cov, post_cov.T)
