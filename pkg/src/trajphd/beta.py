"""Beta-distribution calculus used by the robust filter.

All detection probabilities (for tracks and for clutter generators) are
modelled as Beta(u, v) random variables.  The update step only ever needs
the Beta-function ratios ``psi0 = B(u, v+1)/B(u, v)`` and
``psi1 = B(u+1, v)/B(u, v)``, which reduce to ``v/(u+v)`` and ``u/(u+v)``,
and the prediction step needs a variance-inflating moment match.

Parameters are admitted on the full domain u > 0, v > 0.  Clutter
components are born at the uniform boundary (1, 1) and only ever gain
counts, but track components exchange concentration for inflation every
scan: with inflation factor k the post-update sum u+v settles at the fixed
point of s -> (s+1)/k, so a consistently detected track ends up with a
miss count v well below one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class BetaParams:
    """Parameters of a Beta distribution, u > 0 and v > 0."""

    u: float
    v: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.u) and math.isfinite(self.v)):
            raise ValueError("beta parameters must be finite")
        if self.u <= 0.0 or self.v <= 0.0:
            raise ValueError(f"beta parameters must be > 0, got ({self.u}, {self.v})")


class BetaDegenerateError(ValueError):
    """Raised when variance inflation leaves no valid Beta distribution."""


def beta_pdf(y: float, p: BetaParams) -> float:
    """Density y^(u-1) (1-y)^(v-1) / B(u, v) on [0, 1].

    Computed through log-gamma so that large (u, v) from long detection
    histories do not overflow.  At the endpoints the density is 0, the
    normalising constant, or +inf depending on whether the exponent is
    positive, zero or negative.
    """
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"beta_pdf argument {y} outside [0, 1]")
    log_norm = math.lgamma(p.u + p.v) - math.lgamma(p.u) - math.lgamma(p.v)
    if y == 0.0:
        if p.u < 1.0:
            return math.inf
        log_y_term = 0.0 if p.u == 1.0 else -math.inf
    else:
        log_y_term = (p.u - 1.0) * math.log(y)
    if y == 1.0:
        if p.v < 1.0:
            return math.inf
        log_1my_term = 0.0 if p.v == 1.0 else -math.inf
    else:
        log_1my_term = (p.v - 1.0) * math.log1p(-y)
    log_pdf = log_norm + log_y_term + log_1my_term
    return math.exp(log_pdf) if log_pdf > -math.inf else 0.0


def psi0(p: BetaParams) -> float:
    """B(u, v+1) / B(u, v) = v / (u + v): misdetection weight factor."""
    return p.v / (p.u + p.v)


def psi1(p: BetaParams) -> float:
    """B(u+1, v) / B(u, v) = u / (u + v): detection weight factor.

    Computed as the complement of :func:`psi0` so the misdetection and
    detection factors partition one exactly in floating point (they differ
    from the direct ratio by at most one rounding unit).
    """
    return 1.0 - psi0(p)


def beta_mean(p: BetaParams) -> float:
    return p.u / (p.u + p.v)


def beta_variance(p: BetaParams) -> float:
    s = p.u + p.v
    return p.u * p.v / (s * s * (s + 1.0))


def predict_beta(p: BetaParams, k_beta: float) -> BetaParams:
    """Moment-matched prediction with variance inflated by ``k_beta``.

    Keeps the mean exactly and multiplies the variance by ``k_beta``,
    modelling slow drift of the detection probability between scans.
    """
    if not math.isfinite(k_beta) or k_beta < 1.0:
        raise ValueError(f"inflation factor must be finite and >= 1, got {k_beta}")
    if k_beta == 1.0:
        return p
    mu = beta_mean(p)
    var = k_beta * beta_variance(p)
    ratio = mu * (1.0 - mu) / var
    if ratio <= 1.0:
        raise BetaDegenerateError(
            f"beta moment matching degenerate: mu(1-mu)/var = {ratio} <= 1"
        )
    scale = ratio - 1.0
    return BetaParams(u=scale * mu, v=scale * (1.0 - mu))
