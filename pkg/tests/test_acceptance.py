"""Desk-scale acceptance gate.

Runs the benchmark scenario (100 Monte Carlo runs by default) through the
robust filter and the known-parameter baseline and checks every headline
behaviour at its stated tolerance, printing one PASS line per criterion.
Run counts and worker counts can be overridden through the environment
(TRAJPHD_ACCEPT_RUNS, TRAJPHD_ACCEPT_JOBS, TRAJPHD_ACCEPT_TIMING_RUNS)
for quick smoke passes; the defaults are the desk-scale contract.
"""
import dataclasses
import gc
import os
import pickle
import time

import numpy as np
import pytest

import trajphd.baseline as bl
import trajphd.robust as rb
from oracles import kalman_filter, rts_smoother, tm_brute_force
from trajphd.beta import BetaParams, predict_beta, psi0, psi1
from trajphd.config import ScenarioConfig
from trajphd.metric import TmParams, tm_distance
from trajphd.models import ClutterSpatialDensity, LinearModel
from trajphd.scenario import generate_truth, run_monte_carlo, run_single
from trajphd.types import BgmPhd, ClutterComponent, Scan, Trajectory, TrajectoryComponent

RUNS = int(os.environ.get("TRAJPHD_ACCEPT_RUNS", "100"))
JOBS = int(os.environ.get("TRAJPHD_ACCEPT_JOBS", str(min(2, os.cpu_count() or 1))))
TIMING_RUNS = int(os.environ.get("TRAJPHD_ACCEPT_TIMING_RUNS", "24"))
TIMING_GRID = (1, 2, 5, 10, 15, 30, 60)
TRUE_CLUTTER_RATE = 10.0


def _announce(name: str, detail: str) -> None:
    print(f"[PASS] {name}: {detail}")


@pytest.fixture(scope="session")
def desk():
    """All Monte Carlo blocks the criteria share, computed once."""
    cfg = dataclasses.replace(ScenarioConfig(), runs=RUNS)
    truth = generate_truth(cfg)

    blocks = {}
    tic = time.perf_counter()
    records, agg, failures = run_monte_carlo(
        cfg, "robust", lscan=5, truth=truth, jobs=JOBS, compute_metric=True
    )
    blocks["robust5_wall"] = time.perf_counter() - tic
    assert not failures, failures
    blocks["robust5"] = (records, agg)

    records, agg, failures = run_monte_carlo(
        cfg, "baseline", lscan=5, truth=truth, jobs=JOBS, compute_metric=True
    )
    assert not failures, failures
    blocks["baseline5"] = (records, agg)

    records, agg, failures = run_monte_carlo(
        cfg, "robust", lscan=30, truth=truth, jobs=JOBS, compute_metric=True
    )
    assert not failures, failures
    blocks["robust30"] = (records, agg)

    # Timing grid: serial, garbage collector paused, window depths
    # interleaved round-robin so slow machine drift hits every depth alike.
    samples = {lscan: [] for lscan in TIMING_GRID}
    gc.disable()
    try:
        for i in range(TIMING_RUNS):
            for lscan in TIMING_GRID:
                rec = run_single(cfg, "robust", i, truth, lscan=lscan, compute_metric=False)
                samples[lscan].append((rec.filter_seconds, rec.filter_cpu_seconds))
    finally:
        gc.enable()
    blocks["timing"] = {
        lscan: (
            float(np.mean([s[0] for s in pairs])),
            float(np.mean([s[1] for s in pairs])),
        )
        for lscan, pairs in samples.items()
    }
    blocks["config"] = cfg
    blocks["truth"] = truth
    return blocks


def settled_scans(truth, horizon: int, settle: int = 10) -> np.ndarray:
    events = np.array(truth.change_times())
    scans = np.arange(1, horizon + 1)
    ok = np.ones_like(scans, dtype=bool)
    for e in events:
        ok &= ~((scans >= e) & (scans < e + settle))
    return scans[ok]


def test_clutter_rate_convergence(desk):
    _, agg = desk["robust5"]
    late = agg.scans >= 30
    err = np.abs(agg.mean_clutter_rate[late] - TRUE_CLUTTER_RATE)
    assert err.max() <= 2.0, f"max clutter-rate error {err.max():.2f} > 2 after scan 30"
    wall = desk["robust5_wall"]
    assert wall <= 600.0, f"robust L=5 x {RUNS} runs took {wall:.0f}s > 10 min"
    _announce(
        "clutter-rate convergence",
        f"max |mean estimate - {TRUE_CLUTTER_RATE:g}| = {err.max():.2f} <= 2 "
        f"for scans >= 30; block wall time {wall:.0f}s <= 600s",
    )


def test_cardinality_tracking(desk):
    _, agg = desk["robust5"]
    truth = desk["truth"]
    scans = settled_scans(truth, desk["config"].horizon)
    idx = scans - 1
    err = np.abs(agg.mean_cardinality[idx] - agg.true_count[idx])
    assert err.max() <= 0.5, (
        f"cardinality error {err.max():.2f} > 0.5 at settled scan "
        f"{scans[int(np.argmax(err))]}"
    )
    _announce(
        "cardinality tracking",
        f"max |mean estimate - truth| = {err.max():.2f} <= 0.5 on {len(scans)} settled scans",
    )


def test_detection_profile_learning(desk):
    records, _ = desk["robust5"]
    horizon = desk["config"].horizon
    values = [
        snap.detection_probability
        for rec in records
        for summary in rec.summaries[horizon - 30 :]
        for snap in summary.tracks
        if snap.detection_probability is not None
    ]
    mean_pd = float(np.mean(values))
    assert 0.88 <= mean_pd <= 1.0, f"mean reported p_D {mean_pd:.3f} outside [0.88, 1.0]"
    _announce(
        "detection-profile learning",
        f"mean reported p_D over last 30 scans = {mean_pd:.3f} in [0.88, 1.0] (truth 0.98)",
    )


def test_baseline_proximity(desk):
    _, robust = desk["robust5"]
    _, base = desk["baseline5"]
    avg_robust = float(np.mean(robust.rms_tm_error))
    avg_base = float(np.mean(base.rms_tm_error))
    ratio = avg_robust / avg_base
    assert ratio <= 1.3, f"robust/baseline TM ratio {ratio:.3f} > 1.3"
    _announce(
        "baseline proximity",
        f"time-averaged RMS TM robust {avg_robust:.1f} vs baseline {avg_base:.1f}, "
        f"ratio {ratio:.3f} <= 1.3",
    )


def test_lscan_saturation(desk):
    _, l5 = desk["robust5"]
    _, l30 = desk["robust30"]
    avg5 = float(np.mean(l5.rms_tm_error))
    avg30 = float(np.mean(l30.rms_tm_error))
    rel = abs(avg5 - avg30) / avg30
    assert rel <= 0.10, f"TM at L=5 deviates {rel:.1%} from L=30 (> 10%)"
    _announce(
        "window-depth saturation",
        f"time-averaged TM L=5 {avg5:.1f} vs L=30 {avg30:.1f}, deviation {rel:.1%} <= 10%",
    )


def test_runtime_monotonicity(desk):
    timing = desk["timing"]
    wall = [timing[ls][0] for ls in TIMING_GRID]
    cpu = [timing[ls][1] for ls in TIMING_GRID]
    detail = " ".join(f"L{ls}:{w:.3f}s" for ls, w in zip(TIMING_GRID, wall))
    assert all(a < b for a, b in zip(wall, wall[1:])), (
        f"mean per-run wall time not strictly increasing: {detail} "
        f"(cpu: {' '.join(f'{c:.3f}' for c in cpu)})"
    )
    _announce("runtime monotonicity", f"mean filter seconds per run increase: {detail}")


# --- property suite at acceptance tolerances ---------------------------------


def test_property_beta_identities():
    rng = np.random.default_rng(0)
    for _ in range(200):
        p = BetaParams(rng.uniform(0.2, 40.0), rng.uniform(0.2, 40.0))
        assert psi0(p) + psi1(p) == 1.0
    out = predict_beta(BetaParams(8.0, 2.0), 1.1)
    assert abs(out.u - 7.2) <= 1e-12 and abs(out.v - 1.8) <= 1e-12
    _announce(
        "beta identities",
        "psi0 + psi1 = 1 exactly on 200 draws; (8,2) inflated by 1.1 -> (7.2, 1.8) at 1e-12",
    )


def test_property_kalman_reduction():
    f = np.array([[1.0, 1.0], [0.0, 1.0]])
    q = 0.05 * np.eye(2)
    model = LinearModel(F=f, Q=q, H=np.array([[1.0, 0.0]]), R=np.array([[0.4]]))
    clutter = ClutterSpatialDensity(bounds=((-50.0, 50.0),))
    rng = np.random.default_rng(2)
    m0, p0 = np.array([0.0, 1.0]), np.diag([4.0, 1.0])
    zs = [np.array([k + rng.normal(scale=0.4)]) for k in range(8)]
    fm, fp, _, _ = kalman_filter(zs, f, q, model.H, model.R, m0, p0)

    state = bl.GmTphdState(time=0)
    worst = 0.0
    for k, z in enumerate(zs, start=1):
        births = [rb.TrackBirth(1.0, m0, p0, 8, 2)] if k == 1 else []
        state = bl.tphd_predict(state, model.motion, births, p_s=1.0)
        state = bl.tphd_update(
            state, Scan.from_vectors(k, [z], 1), model.sensor, 1.0, 0.0, clutter
        )
        comp = max(state.tracks, key=lambda c: c.weight)
        worst = max(worst, float(np.abs(comp.mean[-2:] - fm[k - 1]).max()))
        sm, _ = rts_smoother(fm[:k], fp[:k], f, q)
        worst = max(worst, float(np.abs(comp.mean - sm.ravel()).max()))
    assert worst <= 1e-9
    _announce(
        "kalman/smoother reduction",
        f"certain-detection single-target filter matches KF+RTS, max |err| = {worst:.1e} <= 1e-9",
    )


def test_property_degenerate_equivalence():
    f = np.array([[1.0, 1.0], [0.0, 1.0]])
    model = LinearModel(F=f, Q=0.05 * np.eye(2), H=np.array([[1.0, 0.0]]), R=np.array([[0.4]]))
    clutter = ClutterSpatialDensity(bounds=((-100.0, 100.0),))
    p_d, lam_c, scale = 0.9, 3.0, 1e7
    rng = np.random.default_rng(5)
    weights = [0.8, 0.5, 1.2]
    means = [np.array([0.0, 0.5]), np.array([4.0, -0.5]), np.array([-3.0, 0.1])]
    covs = [np.diag([1.0, 0.5]), np.diag([2.0, 1.0]), np.eye(2)]

    r_state = BgmPhd(
        time=1,
        tracks=tuple(
            TrajectoryComponent(w, 1, m, c, p_d * scale, (1 - p_d) * scale, 2)
            for w, m, c in zip(weights, means, covs)
        ),
        clutter=(ClutterComponent(2.0 * lam_c, scale, scale),),
    )
    b_state = bl.GmTphdState(
        time=1,
        tracks=tuple(
            bl.GmTrajectoryComponent(w, 1, m, c, 2) for w, m, c in zip(weights, means, covs)
        ),
    )
    scan = Scan.from_vectors(2, rng.normal(scale=2.0, size=(4, 1)), 1)
    r_state = rb.predict(r_state, model.motion, [], [], 0.99, 1.0, 1.1)
    r_state, _ = rb.update(r_state, scan, model.sensor, clutter)
    b_state = bl.tphd_predict(b_state, model.motion, [], 0.99)
    b_state = bl.tphd_update(b_state, scan, model.sensor, p_d, lam_c, clutter)

    w_err = m_err = 0.0
    for a, b in zip(r_state.tracks, b_state.tracks):
        w_err = max(w_err, abs(a.weight - b.weight) / max(b.weight, 1e-300))
        m_err = max(m_err, float(np.abs(a.mean - b.mean).max()))
        m_err = max(m_err, float(np.abs(a.cov - b.cov).max()))
    assert w_err <= 1e-6 and m_err <= 1e-9
    _announce(
        "degenerate-model equivalence",
        f"point-mass Betas reproduce the baseline: weight rel err {w_err:.1e} <= 1e-6, "
        f"moment err {m_err:.1e} <= 1e-9",
    )


def test_property_lscan_bit_exactness(desk):
    cfg = dataclasses.replace(desk["config"], runs=1, horizon=20)
    truth = desk["truth"]
    full = run_single(cfg, "robust", 0, truth, lscan=10**6, compute_metric=False)
    capped = run_single(cfg, "robust", 0, truth, lscan=cfg.horizon, compute_metric=False)
    for a, b in zip(full.summaries, capped.summaries):
        assert a.cardinality == b.cardinality
        assert a.clutter_rate == b.clutter_rate
        for sa, sb in zip(a.tracks, b.tracks):
            assert sa == sb
    _announce(
        "window-depth exactness",
        f"window cap >= horizon reproduces the uncapped filter bit for bit over "
        f"{cfg.horizon} scans",
    )


def test_property_tm_axioms():
    rng = np.random.default_rng(7)
    params = TmParams()
    worst = 0.0
    for _ in range(6):
        def make():
            out = []
            for _ in range(int(rng.integers(0, 3))):
                birth = int(rng.integers(1, 4))
                length = int(rng.integers(1, 5 - birth + 1))
                out.append(Trajectory(birth, rng.uniform(-20, 20, size=(length, 1))))
            return out

        a, b, c = make(), make(), make()
        d_ab = tm_distance(a, b, params).distance
        d_ba = tm_distance(b, a, params).distance
        worst = max(worst, abs(d_ab - d_ba))
        d_ac = tm_distance(a, c, params).distance
        d_cb = tm_distance(c, b, params).distance
        assert d_ab <= d_ac + d_cb + 1e-9
        want = tm_brute_force(
            [(t.birth_time, t.states) for t in a], [(t.birth_time, t.states) for t in b]
        )
        worst = max(worst, abs(d_ab - want))
        ident = tm_distance(a, a, params).distance
        worst = max(worst, ident)
    assert worst <= 1e-9
    _announce(
        "trajectory-metric axioms",
        f"identity/symmetry/triangle and brute-force agreement, max dev {worst:.1e} <= 1e-9",
    )


def test_property_simulator_determinism(desk):
    cfg = dataclasses.replace(desk["config"], runs=1, horizon=15)
    truth = desk["truth"]
    a = run_single(cfg, "robust", 3, truth, lscan=5)
    b = run_single(cfg, "robust", 3, truth, lscan=5)
    fa = dataclasses.replace(a, filter_seconds=0.0, filter_cpu_seconds=0.0)
    fb = dataclasses.replace(b, filter_seconds=0.0, filter_cpu_seconds=0.0)
    assert pickle.dumps(fa) == pickle.dumps(fb)
    _announce("simulator determinism", "repeated seeded runs are byte-identical")
