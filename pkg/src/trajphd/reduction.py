"""Mixture reduction: weight pruning, absorption, component capping.

Shared between the robust filter and the known-parameter baseline; the
mechanics only touch weights and current-time marginals, never the Beta
parameters, so any component type with ``weight``, ``birth_time``,
``mean``, ``cov`` and ``state_dim`` fields works.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReductionStats:
    pruned: int = 0
    absorbed: int = 0
    capped: int = 0


def round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def prune_and_absorb_tracks(
    comps, gamma_p: float, gamma_a: float, j_max: int
) -> tuple[list, ReductionStats]:
    """Drop negligible components, absorb near-duplicates, cap the count.

    Absorption only pairs components with equal birth times (their
    trajectory means are commensurable) and folds the lighter one's weight
    into the dominant one, keeping the dominant moments.  Weight removed by
    absorption or capping is restored by rescaling the survivors; weight
    dropped by the threshold prune is not.
    """
    kept = [c for c in comps if c.weight >= gamma_p]
    stats_pruned = len(comps) - len(kept)
    target = sum(c.weight for c in kept)

    groups: dict[int, list] = {}
    for c in kept:
        groups.setdefault(c.birth_time, []).append(c)

    merged: list = []
    absorbed = 0
    for birth_time in sorted(groups):
        pool = sorted(groups[birth_time], key=lambda c: -c.weight)
        while pool:
            best = pool.pop(0)
            if not pool:
                merged.append(best)
                continue
            n = best.state_dim
            m_best = best.mean[-n:]
            try:
                factor = cho_factor(best.cov[-n:, -n:], check_finite=False)
            except LinAlgError:
                log.warning(
                    "singular current-time covariance for component born %d; "
                    "skipping absorption",
                    birth_time,
                )
                merged.append(best)
                continue
            diffs = np.stack([c.mean[-n:] for c in pool]) - m_best
            maha = np.sum(
                diffs * cho_solve(factor, diffs.T, check_finite=False).T, axis=1
            )
            weight = best.weight
            rest = []
            for c, m2 in zip(pool, maha):
                if m2 <= gamma_a:
                    weight += c.weight
                    absorbed += 1
                else:
                    rest.append(c)
            pool = rest
            merged.append(replace(best, weight=weight) if weight != best.weight else best)

    merged.sort(key=lambda c: -c.weight)
    capped = max(0, len(merged) - j_max)
    merged = merged[:j_max]
    total = sum(c.weight for c in merged)
    if total > 0.0 and not np.isclose(total, target, rtol=1e-12, atol=0.0):
        scale = target / total
        merged = [replace(c, weight=c.weight * scale) for c in merged]
    return merged, ReductionStats(stats_pruned, absorbed, capped)


def prune_and_cap_clutter(comps, gamma_p: float, j_max: int) -> tuple[list, ReductionStats]:
    """Weight pruning and capping for clutter components.

    Components sharing exactly the same Beta parameters are one and the
    same mixture term (the parameters live on the +1-increment lattice of
    the birth values), so they are coalesced first; that compaction leaves
    the mixture unchanged as a function.  Then the weight prune and the
    component cap apply as for tracks.
    """
    coalesced: dict[tuple[float, float], float] = {}
    for c in comps:
        key = (c.beta_u, c.beta_v)
        coalesced[key] = coalesced.get(key, 0.0) + c.weight
    merged = [
        type(comps[0])(weight=w, beta_u=u, beta_v=v)
        for (u, v), w in coalesced.items()
    ] if comps else []

    kept = [c for c in merged if c.weight >= gamma_p]
    pruned = len(merged) - len(kept)
    target = sum(c.weight for c in kept)
    kept.sort(key=lambda c: -c.weight)
    capped = max(0, len(kept) - j_max)
    kept = kept[:j_max]
    total = sum(c.weight for c in kept)
    if total > 0.0 and not np.isclose(total, target, rtol=1e-12, atol=0.0):
        scale = target / total
        kept = [replace(c, weight=c.weight * scale) for c in kept]
    return kept, ReductionStats(pruned, 0, capped)
