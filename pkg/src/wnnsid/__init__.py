"""Weighted nuclear norm preprocessing for subspace system identification."""

from .admm import AdmmSettings, AdmmState, DenseLinearMap, NucNormProblem, nuclear_norm, solve, svt
from .hankel_ops import HankelMap, HankelParams, TimeSeries, build_hankel
from .pipeline import (
    ComparisonTable,
    FitReport,
    PipelineConfig,
    baseline,
    denoise,
    identify_best,
    monte_carlo_study,
)
from .sim_eval import fit_score, predict_for_validation, random_model, simulate
from .subspace import StateSpaceModel, extract_model, select_order, stabilize
from .weights import WeightingScheme, assemble_ghat, compute_weights

__all__ = [
    "AdmmSettings", "AdmmState", "ComparisonTable", "DenseLinearMap", "FitReport", "HankelMap",
    "HankelParams", "NucNormProblem", "PipelineConfig", "StateSpaceModel", "TimeSeries",
    "WeightingScheme", "assemble_ghat", "baseline", "build_hankel", "compute_weights", "denoise",
    "extract_model", "fit_score", "identify_best", "monte_carlo_study", "nuclear_norm",
    "predict_for_validation", "random_model", "select_order", "simulate", "solve", "stabilize", "svt",
]

__version__ = "0.1.0"
