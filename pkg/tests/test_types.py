import json

import numpy as np
import pytest

from oracles import gaussian_grid_marginal
from trajphd.types import (
    BgmPhd,
    ClutterComponent,
    Scan,
    Trajectory,
    TrajectoryComponent,
    current_marginal,
    phd_from_dict,
    phd_to_dict,
    validate,
)


def make_component(weight=1.0, birth=3, steps=2, n_x=2, seed=0, beta=(8.0, 2.0)):
    rng = np.random.default_rng(seed)
    dim = steps * n_x
    mean = rng.normal(size=dim)
    root = rng.normal(size=(dim, dim))
    cov = root @ root.T + 0.5 * np.eye(dim)
    return TrajectoryComponent(
        weight=weight,
        birth_time=birth,
        mean=mean,
        cov=cov,
        beta_u=beta[0],
        beta_v=beta[1],
        state_dim=n_x,
    )


def test_trajectory_bookkeeping():
    t = Trajectory(birth_time=4, states=np.zeros((3, 5)))
    assert t.length == 3
    assert t.end_time == 6
    with pytest.raises(ValueError):
        Trajectory(birth_time=1, states=np.zeros((0, 5)))


def test_current_marginal_single_step():
    c = make_component(steps=1)
    m, p = current_marginal(c)
    np.testing.assert_allclose(m, c.mean)
    np.testing.assert_allclose(p, c.cov)


def test_current_marginal_two_step_blocks():
    c = make_component(steps=2, n_x=2)
    m, p = current_marginal(c)
    np.testing.assert_allclose(m, c.mean[2:])
    np.testing.assert_allclose(p, c.cov[2:, 2:])


def test_current_marginal_matches_grid_integration():
    # Scalar state, 3-step window: integrating the joint density over the
    # first two steps must reproduce the trailing block moments.
    c = make_component(steps=3, n_x=1, seed=42)
    m, p = current_marginal(c)
    mu, var = gaussian_grid_marginal(c.mean, c.cov, keep=2, grid_pts=101)
    assert m[0] == pytest.approx(mu, abs=2e-3 * max(1.0, abs(mu)))
    assert p[0, 0] == pytest.approx(var, rel=2e-3)


def test_current_marginal_empty_window():
    c = make_component(steps=1)
    object.__setattr__(c, "mean", np.zeros(0))
    with pytest.raises(ValueError, match="empty trajectory window"):
        current_marginal(c)


def test_validate_empty():
    assert validate(BgmPhd(time=0)) == []


def test_validate_flags_negative_weight():
    c = make_component(weight=-0.1, birth=1, steps=1)
    phd = BgmPhd(time=1, tracks=(c,))
    problems = validate(phd)
    assert len(problems) == 1
    assert "weight" in problems[0]
    assert "track[0]" in problems[0]


def test_validate_flags_asymmetric_cov():
    c = make_component(birth=2, steps=2)
    cov = c.cov.copy()
    cov[0, 1] += 1.0
    object.__setattr__(c, "cov", cov)
    phd = BgmPhd(time=3, tracks=(c,))
    problems = validate(phd)
    assert len(problems) == 1
    assert "symmetric" in problems[0]


def test_validate_flags_indefinite_cov():
    c = make_component(birth=2, steps=2)
    object.__setattr__(c, "cov", -np.eye(4))
    assert any("semidefinite" in p for p in validate(BgmPhd(time=3, tracks=(c,))))


def test_validate_flags_time_bookkeeping():
    c = make_component(birth=2, steps=2)  # spans scans 2..3
    assert validate(BgmPhd(time=3, tracks=(c,))) == []
    assert any("time" in p for p in validate(BgmPhd(time=5, tracks=(c,))))


def test_validate_clutter_domain():
    phd = BgmPhd(time=0, clutter=(ClutterComponent(1.0, 0.5, 1.0),))
    assert any("beta_u" in p for p in validate(phd))


def test_archive_bookkeeping():
    c = make_component(birth=1, steps=2, n_x=2)
    object.__setattr__(c, "archive", np.arange(4.0))
    assert c.archive_len == 2
    assert c.length == 4
    np.testing.assert_allclose(c.full_mean[:4], np.arange(4.0))
    assert validate(BgmPhd(time=4, tracks=(c,))) == []


def test_scan_shapes():
    s = Scan.from_vectors(3, [[1.0, 2.0], [3.0, 4.0]], meas_dim=2)
    assert len(s) == 2
    empty = Scan.from_vectors(1, [], meas_dim=2)
    assert len(empty) == 0
    assert empty.measurements.shape == (0, 2)


def test_serialisation_roundtrip():
    tracks = tuple(make_component(weight=w, birth=2, steps=2, seed=i) for i, w in enumerate([0.5, 1.5]))
    clutter = (ClutterComponent(20.0, 1.0, 1.0), ClutterComponent(3.0, 4.0, 2.0))
    phd = BgmPhd(time=3, tracks=tracks, clutter=clutter)
    data = json.loads(json.dumps(phd_to_dict(phd)))
    back = phd_from_dict(data)
    assert back.time == phd.time
    assert len(back.tracks) == len(phd.tracks)
    for a, b in zip(phd.tracks, back.tracks):
        assert b.weight == pytest.approx(a.weight, rel=1e-12)
        np.testing.assert_allclose(b.mean, a.mean, rtol=1e-12)
        np.testing.assert_allclose(b.cov, a.cov, rtol=1e-12)
        assert (b.beta_u, b.beta_v) == (a.beta_u, a.beta_v)
        assert b.birth_time == a.birth_time
    for a, b in zip(phd.clutter, back.clutter):
        assert (b.weight, b.beta_u, b.beta_v) == (a.weight, a.beta_u, a.beta_v)
