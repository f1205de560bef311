"""Friedkin-Johnsen opinion dynamics with low-rank timeline updates."""

__version__ = "0.1.0"

from .errors import ConditioningError, ConvergenceError, FJError, ParseError, ValidationError
from .graph import Graph, from_edges, largest_connected_component, laplacian_matvec, load_edge_list, read_edge_list
from .solver import SpdOperator, solve
from .fj import equilibrium_exact, fj_step, indices, mean_center_rescale
from .model import (
    Bounds,
    LowRankModel,
    approx_objective,
    approx_opinions,
    ax_matvec,
    bounds_from_theta,
    estimate_opinions,
    exact_opinions_dense,
    spectral_condition,
    weight_identity,
)
from .gradient import gradient_approx, gradient_exact, gradient_from_opinions, lipschitz_bound
from .projection import project_matrix, project_row
from .gdpm import GdpmConfig, optimize, reduction_ratio
from .baselines import run_baseline, topic_signals
from .synth import SynthConfig, gen_opinions, gen_X, gen_Y, make_instance

__all__ = [
    "Bounds",
    "ConditioningError",
    "ConvergenceError",
    "FJError",
    "GdpmConfig",
    "Graph",
    "LowRankModel",
    "ParseError",
    "SpdOperator",
    "SynthConfig",
    "ValidationError",
    "approx_objective",
    "approx_opinions",
    "ax_matvec",
    "bounds_from_theta",
    "equilibrium_exact",
    "estimate_opinions",
    "exact_opinions_dense",
    "fj_step",
    "from_edges",
    "gen_X",
    "gen_Y",
    "gen_opinions",
    "gradient_approx",
    "gradient_exact",
    "gradient_from_opinions",
    "indices",
    "laplacian_matvec",
    "largest_connected_component",
    "lipschitz_bound",
    "load_edge_list",
    "make_instance",
    "mean_center_rescale",
    "optimize",
    "project_matrix",
    "project_row",
    "read_edge_list",
    "reduction_ratio",
    "run_baseline",
    "solve",
    "spectral_condition",
    "topic_signals",
    "weight_identity",
]
