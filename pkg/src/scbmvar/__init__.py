"""Spectral co-clustering of directed networks embedded in VAR, periodic VAR and VHAR models."""

from .blockmodel import (
    BlockModelSpec,
    SeasonalGraphSequence,
    make_equal_memberships,
    population_adjacency,
    sample_adjacency,
    sample_propensities,
)
from .crossval import make_alpha_grid, make_folds, select_alpha
from .estimate import EstimationResult, estimate_pvar, estimate_var, estimate_vhar
from .metrics import ari, benchmark_scores, permutation_accuracy
from .simulate import TimeSeriesPanel, simulate, simulate_pvar, simulate_var, simulate_vhar
from .spectral import CommunityPath, spectral_cocluster
from .transition import TransitionSet, build_transition, companion, stabilize

__version__ = "0.1.0"
