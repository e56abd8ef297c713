"""Variational Bayesian estimation of RIS cascaded channels, with baselines and a simulator."""

from .channel import ArrayGeometry, ChannelRealization, PathSet, build_dictionary, draw_realization
from .config import ScenarioConfig, load_config
from .estimators import (EstimatorOutput, Hyperpriors, VIOptions, estimate_lmmse, estimate_ls,
                         estimate_vi_laplace, estimate_vi_student)
from .harness import nmse, noise_variance, run_sweep, run_trial
from .measurement import MeasurementSet, assemble, assemble_direct

__all__ = [
    "ArrayGeometry", "ChannelRealization", "PathSet", "build_dictionary", "draw_realization",
    "ScenarioConfig", "load_config",
    "EstimatorOutput", "Hyperpriors", "VIOptions", "estimate_lmmse", "estimate_ls",
    "estimate_vi_laplace", "estimate_vi_student",
    "nmse", "noise_variance", "run_sweep", "run_trial",
    "MeasurementSet", "assemble", "assemble_direct",
]
