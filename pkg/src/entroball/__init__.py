"""Least cross-entropy densities inside Wasserstein balls around empirical measures.

The package computes semi-discrete optimal transport from a density to a
finite set of atoms, and uses it to find the density closest to a prior (in
cross-entropy) among all densities within transport cost ``delta`` of the
atoms.
"""

from .cutting_plane import CutOptions, InfeasiblePolytope, solve_min_cross_entropy
from .domain import (
    EUCLIDEAN,
    MANHATTAN,
    BoxDomain,
    EmpiricalMeasure,
    Metric,
    PriorModel,
    SampleBatch,
    draw_batch,
    make_truncated_gaussian_prior,
    make_uniform_prior,
)
from .entropy import DualPair, EntropySolution, RatioFn, solve_dual
from .lp import InfeasibleLP, UnboundedLP, lp_solve
from .transport import StepSchedule, StopRule, TransportSolution, ball_membership, maximize_psi
from .voronoi import WeightVector, assign_region, phi_lambda, rasterize_regions, region_masses

__version__ = "0.1.0"

__all__ = [
    "BoxDomain", "CutOptions", "DualPair", "EUCLIDEAN", "EmpiricalMeasure", "EntropySolution",
    "InfeasibleLP", "InfeasiblePolytope", "MANHATTAN", "Metric", "PriorModel", "RatioFn",
    "SampleBatch", "StepSchedule", "StopRule", "TransportSolution", "UnboundedLP", "WeightVector",
    "assign_region", "ball_membership", "draw_batch", "lp_solve", "make_truncated_gaussian_prior",
    "make_uniform_prior", "maximize_psi", "phi_lambda", "rasterize_regions", "region_masses",
    "solve_dual", "solve_min_cross_entropy",
]
