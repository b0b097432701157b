"""Consensus+innovations SPRT (CISPRT) for distributed Gaussian shift-in-mean detection."""
from .graph import Graph, LaplacianSpectrum, is_connected, laplacian, random_geometric, spectrum
from .model import GaussianShiftModel, Hypothesis, ObservationStream, log_likelihood_ratio, sample_observations, substream
from .thresholds import (ErrorSpec, ThresholdSet, cisprt_thresholds, cisprt_thresholds_tightened,
                         universal_lower_bound, wald_thresholds)
from .weights import WeightMatrix, constant_weight_design, contraction_factor, optimal_constant_weight, validate_a4
from .detectors import cisprt_step, run_cisprt, run_isolated, run_sprt, simulate

__version__ = "0.1.0"
