"""Trajectory PHD filters with online detection-probability and clutter-rate estimation."""

from .beta import BetaDegenerateError, BetaParams, beta_mean, beta_pdf, beta_variance, predict_beta, psi0, psi1
from .config import ScenarioConfig, dump_config, load_config
from .metric import TmParams, TmResult, tm_distance
from .types import BgmPhd, ClutterComponent, Scan, Trajectory, TrajectoryComponent, current_marginal, validate

__all__ = [
    "BetaDegenerateError",
    "BetaParams",
    "beta_mean",
    "beta_pdf",
    "beta_variance",
    "predict_beta",
    "psi0",
    "psi1",
    "ScenarioConfig",
    "dump_config",
    "load_config",
    "TmParams",
    "TmResult",
    "tm_distance",
    "BgmPhd",
    "ClutterComponent",
    "Scan",
    "Trajectory",
    "TrajectoryComponent",
    "current_marginal",
    "validate",
]

__version__ = "0.1.0"
