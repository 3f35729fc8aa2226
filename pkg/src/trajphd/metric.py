"""Trajectory-set distance with localization, missed/false and switch costs.

Two finite sets of trajectories are compared over a common time window by
choosing, at every time step, a partial matching between them.  Costs per
time step: ``min(||x - y||_p, c)^p`` for a matched pair where both exist,
``c^p / 2`` for every existing but effectively unmatched track (missed on
the truth side, false on the estimate side; a matched pair with only one
side existing costs the same), and ``(gamma^p / 2) * |change|`` whenever
the matching changes between consecutive steps (a full partner swap counts
two changes, pairing up or dropping to unmatched counts one).  The
distance is the p-th root of the minimum total.

The minimum is found exactly: tracks are first split into clusters that
never come within the cutoff of each other (cross-cluster pairings can
never beat leaving both sides unmatched, so the optimum decomposes), then
each cluster is solved by dynamic programming over per-step matchings.
Clusters too large to enumerate fall back to the linear-programming
relaxation, which is exact in all but adversarial fractional cases.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .types import Trajectory

log = logging.getLogger(__name__)

MATCHING_LIMIT = 600


@dataclass(frozen=True)
class TmParams:
    p: float = 2.0
    c: float = 10.0
    gamma: float = 1.0

    def __post_init__(self) -> None:
        if self.p < 1.0:
            raise ValueError("order p must be >= 1")
        if self.c <= 0.0:
            raise ValueError("cutoff c must be positive")
        if self.gamma < 0.0:
            raise ValueError("switch penalty gamma must be nonnegative")


@dataclass(frozen=True)
class TmDecomposition:
    """Additive pieces of the p-th power of the distance."""

    localization: float = 0.0
    missed: float = 0.0
    false: float = 0.0
    switch: float = 0.0

    @property
    def total(self) -> float:
        return self.localization + self.missed + self.false + self.switch

    def __add__(self, other: "TmDecomposition") -> "TmDecomposition":
        return TmDecomposition(
            self.localization + other.localization,
            self.missed + other.missed,
            self.false + other.false,
            self.switch + other.switch,
        )


@dataclass(frozen=True)
class TmResult:
    distance: float
    decomposition: TmDecomposition


class _Track:
    __slots__ = ("birth", "end", "states")

    def __init__(self, traj: Trajectory):
        self.birth = traj.birth_time
        self.end = traj.end_time
        self.states = traj.states

    def state_at(self, k: int) -> np.ndarray:
        return self.states[k - self.birth]

    def exists(self, k: int) -> bool:
        return self.birth <= k <= self.end


def _pair_distances(a: _Track, b: _Track, params: TmParams, t0: int, t1: int) -> np.ndarray:
    """min(||.||_p, c)^p over [t0, t1] where both exist, +inf elsewhere."""
    out = np.full(t1 - t0 + 1, np.inf)
    lo = max(a.birth, b.birth)
    hi = min(a.end, b.end)
    if lo > hi:
        return out
    xs = a.states[lo - a.birth : hi - a.birth + 1]
    ys = b.states[lo - b.birth : hi - b.birth + 1]
    if params.p == 2.0:
        d = np.sqrt(np.sum((xs - ys) ** 2, axis=1))
    else:
        d = np.linalg.norm(xs - ys, ord=params.p, axis=1)
    out[lo - t0 : hi - t0 + 1] = np.minimum(d, params.c) ** params.p
    return out


def _clusters(truth: list[_Track], est: list[_Track], params: TmParams):
    """Union-find over tracks; edges where a pair ever comes within cutoff."""
    n_t, n_e = len(truth), len(est)
    parent = list(range(n_t + n_e))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    for i, a in enumerate(truth):
        for j, b in enumerate(est):
            lo = max(a.birth, b.birth)
            hi = min(a.end, b.end)
            if lo > hi:
                continue
            xs = a.states[lo - a.birth : hi - a.birth + 1]
            ys = b.states[lo - b.birth : hi - b.birth + 1]
            d = np.linalg.norm(xs - ys, axis=1) if params.p == 2.0 else np.linalg.norm(
                xs - ys, ord=params.p, axis=1
            )
            if np.any(d < params.c):
                union(i, n_t + j)

    groups: dict[int, tuple[list[int], list[int]]] = {}
    for i in range(n_t):
        groups.setdefault(find(i), ([], []))[0].append(i)
    for j in range(n_e):
        groups.setdefault(find(n_t + j), ([], []))[1].append(j)
    return list(groups.values())


def _matchings(nx: int, ny: int) -> list[tuple[tuple[int, int], ...]]:
    """All partial injective matchings between ranges nx and ny."""
    out: list[tuple[tuple[int, int], ...]] = []
    ys = range(ny)
    for k in range(min(nx, ny) + 1):
        for xs in itertools.combinations(range(nx), k):
            for perm in itertools.permutations(ys, k):
                out.append(tuple(zip(xs, perm)))
    return out


def _count_matchings(nx: int, ny: int) -> int:
    from math import comb, factorial

    return sum(comb(nx, k) * comb(ny, k) * factorial(k) for k in range(min(nx, ny) + 1))


def _existence_matrix(tracks: list[_Track], t0: int, t1: int) -> np.ndarray:
    out = np.zeros((len(tracks), t1 - t0 + 1), dtype=bool)
    for idx, tr in enumerate(tracks):
        out[idx, tr.birth - t0 : tr.end - t0 + 1] = True
    return out


def _cluster_cost_dp(
    truth: list[_Track], est: list[_Track], params: TmParams, t0: int, t1: int
) -> TmDecomposition:
    """Exact minimum for one cluster via DP over per-step matchings."""
    steps = t1 - t0 + 1
    half_miss = 0.5 * params.c**params.p
    ex_t = _existence_matrix(truth, t0, t1)
    ex_e = _existence_matrix(est, t0, t1)

    pairs = [(i, j) for i in range(len(truth)) for j in range(len(est))]
    pair_loc = np.stack(
        [_pair_distances(truth[i], est[j], params, t0, t1) for i, j in pairs]
    ) if pairs else np.zeros((0, steps))
    both_exist = np.stack(
        [ex_t[i] & ex_e[j] for i, j in pairs]
    ) if pairs else np.zeros((0, steps), dtype=bool)
    # Cost change relative to leaving both sides unmatched: matched pairs
    # where both exist trade two half-penalties for the localization cost.
    pair_adj = np.where(both_exist, pair_loc - 2.0 * half_miss, 0.0)

    base = half_miss * (ex_t.sum(axis=0) + ex_e.sum(axis=0)).astype(float)

    matchings = _matchings(len(truth), len(est))
    m_count = len(matchings)
    pair_index = {pq: idx for idx, pq in enumerate(pairs)}
    inc = np.zeros((m_count, len(pairs)))
    for mi, m in enumerate(matchings):
        for pq in m:
            inc[mi, pair_index[pq]] = 1.0

    costs = base[None, :] + inc @ pair_adj  # (m_count, steps)

    half_switch = 0.5 * params.gamma**params.p
    diff = (inc[:, None, :] != inc[None, :, :]).sum(axis=2)
    switch = half_switch * diff

    dp = costs[:, 0].copy()
    pointers = np.zeros((steps, m_count), dtype=np.int64)
    for k in range(1, steps):
        tot = dp[:, None] + switch
        pointers[k] = np.argmin(tot, axis=0)
        dp = costs[:, k] + np.min(tot, axis=0)

    path = np.zeros(steps, dtype=np.int64)
    path[-1] = int(np.argmin(dp))
    for k in range(steps - 1, 0, -1):
        path[k - 1] = pointers[k, path[k]]

    loc = missed = false = sw = 0.0
    for k in range(steps):
        m = matchings[path[k]]
        matched_t, matched_e = set(), set()
        for i, j in m:
            t_ex, e_ex = ex_t[i, k], ex_e[j, k]
            if t_ex and e_ex:
                loc += pair_loc[pair_index[(i, j)], k]
                matched_t.add(i)
                matched_e.add(j)
            elif t_ex:
                missed += half_miss
                matched_t.add(i)
            elif e_ex:
                false += half_miss
                matched_e.add(j)
        missed += half_miss * sum(
            1 for i in range(len(truth)) if ex_t[i, k] and i not in matched_t
        )
        false += half_miss * sum(
            1 for j in range(len(est)) if ex_e[j, k] and j not in matched_e
        )
        if k + 1 < steps:
            sw += switch[path[k], path[k + 1]]
    return TmDecomposition(loc, missed, false, sw)


def _cluster_cost_lp(
    truth: list[_Track], est: list[_Track], params: TmParams, t0: int, t1: int
) -> TmDecomposition:
    """LP relaxation for clusters too large to enumerate."""
    from scipy.optimize import linprog
    from scipy.sparse import lil_matrix

    steps = t1 - t0 + 1
    nx, ny = len(truth), len(est)
    half_miss = 0.5 * params.c**params.p
    half_switch = 0.5 * params.gamma**params.p
    ex_t = _existence_matrix(truth, t0, t1)
    ex_e = _existence_matrix(est, t0, t1)
    loc = np.stack(
        [
            [_pair_distances(truth[i], est[j], params, t0, t1) for j in range(ny)]
            for i in range(nx)
        ]
    ) if nx and ny else np.zeros((nx, ny, steps))

    # Variables: w_k(i, j) for i in 0..nx (nx = dummy), j in 0..ny (ny = dummy),
    # excluding dummy-dummy; then e_k(i, j) over real pairs for k < steps-1.
    w_pairs = [(i, j) for i in range(nx + 1) for j in range(ny + 1) if not (i == nx and j == ny)]
    wp_index = {pq: idx for idx, pq in enumerate(w_pairs)}
    n_w = len(w_pairs)
    n_e = nx * ny
    num_vars = steps * n_w + max(0, steps - 1) * n_e

    def wvar(k: int, i: int, j: int) -> int:
        return k * n_w + wp_index[(i, j)]

    def evar(k: int, i: int, j: int) -> int:
        return steps * n_w + k * n_e + i * ny + j

    cost = np.zeros(num_vars)
    for k in range(steps):
        for i, j in w_pairs:
            if i < nx and j < ny:
                if ex_t[i, k] and ex_e[j, k]:
                    cost[wvar(k, i, j)] = loc[i, j, k]
                elif ex_t[i, k] or ex_e[j, k]:
                    cost[wvar(k, i, j)] = half_miss
            elif i < nx:
                cost[wvar(k, i, j)] = half_miss if ex_t[i, k] else 0.0
            else:
                cost[wvar(k, i, j)] = half_miss if ex_e[j, k] else 0.0
    for k in range(steps - 1):
        for i in range(nx):
            for j in range(ny):
                cost[evar(k, i, j)] = half_switch

    n_eq = steps * (nx + ny)
    a_eq = lil_matrix((n_eq, num_vars))
    b_eq = np.ones(n_eq)
    row = 0
    for k in range(steps):
        for i in range(nx):
            for j in range(ny + 1):
                a_eq[row, wvar(k, i, j)] = 1.0
            row += 1
        for j in range(ny):
            for i in range(nx + 1):
                a_eq[row, wvar(k, i, j)] = 1.0
            row += 1

    n_ub = 2 * max(0, steps - 1) * n_e
    a_ub = lil_matrix((n_ub, num_vars))
    b_ub = np.zeros(n_ub)
    row = 0
    for k in range(steps - 1):
        for i in range(nx):
            for j in range(ny):
                a_ub[row, wvar(k + 1, i, j)] = 1.0
                a_ub[row, wvar(k, i, j)] = -1.0
                a_ub[row, evar(k, i, j)] = -1.0
                row += 1
                a_ub[row, wvar(k + 1, i, j)] = -1.0
                a_ub[row, wvar(k, i, j)] = 1.0
                a_ub[row, evar(k, i, j)] = -1.0
                row += 1

    res = linprog(
        cost,
        A_ub=a_ub.tocsr(),
        b_ub=b_ub,
        A_eq=a_eq.tocsr(),
        b_eq=b_eq,
        bounds=(0.0, None),
        method="highs",
    )
    if not res.success:
        raise RuntimeError(f"trajectory metric LP failed: {res.message}")
    x = res.x
    loc_cost = missed = false = sw = 0.0
    for k in range(steps):
        for i, j in w_pairs:
            w = x[wvar(k, i, j)]
            if w <= 1e-12:
                continue
            if i < nx and j < ny and ex_t[i, k] and ex_e[j, k]:
                loc_cost += w * loc[i, j, k]
            elif i < nx and ex_t[i, k]:
                missed += w * half_miss
            elif j < ny and ex_e[j, k]:
                false += w * half_miss
    for k in range(steps - 1):
        for i in range(nx):
            for j in range(ny):
                sw += half_switch * x[evar(k, i, j)]
    return TmDecomposition(loc_cost, missed, false, sw)


def tm_distance(
    truth,
    estimate,
    params: TmParams = TmParams(),
    horizon: tuple[int, int] | None = None,
) -> TmResult:
    """Distance between two finite sets of trajectories.

    ``truth`` and ``estimate`` are iterables of :class:`Trajectory`; the
    evaluation window defaults to the span of everything passed in, and an
    explicit ``horizon`` raises if any trajectory sticks out of it.
    """
    truth_tracks = [_Track(t) for t in truth]
    est_tracks = [_Track(t) for t in estimate]
    all_tracks = truth_tracks + est_tracks
    if not all_tracks:
        return TmResult(0.0, TmDecomposition())
    lo = min(t.birth for t in all_tracks)
    hi = max(t.end for t in all_tracks)
    if horizon is not None:
        if lo < horizon[0] or hi > horizon[1]:
            raise ValueError(
                f"trajectory span [{lo}, {hi}] outside evaluation horizon {horizon}"
            )
        lo, hi = horizon

    total = TmDecomposition()
    half_miss = 0.5 * params.c**params.p
    for t_idx, e_idx in _clusters(truth_tracks, est_tracks, params):
        t_grp = [truth_tracks[i] for i in t_idx]
        e_grp = [est_tracks[j] for j in e_idx]
        if not e_grp:
            total = total + TmDecomposition(
                missed=half_miss * sum(t.end - t.birth + 1 for t in t_grp)
            )
            continue
        if not t_grp:
            total = total + TmDecomposition(
                false=half_miss * sum(t.end - t.birth + 1 for t in e_grp)
            )
            continue
        g_lo = min(t.birth for t in t_grp + e_grp)
        g_hi = max(t.end for t in t_grp + e_grp)
        if _count_matchings(len(t_grp), len(e_grp)) <= MATCHING_LIMIT:
            total = total + _cluster_cost_dp(t_grp, e_grp, params, g_lo, g_hi)
        else:
            log.warning(
                "trajectory metric cluster of %d x %d tracks exceeds the "
                "enumeration limit; using the LP relaxation",
                len(t_grp),
                len(e_grp),
            )
            total = total + _cluster_cost_lp(t_grp, e_grp, params, g_lo, g_hi)
    return TmResult(total.total ** (1.0 / params.p), total)
