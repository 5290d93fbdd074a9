"""Simulation, closed forms and a numerical solver for the Yule tree in R^D."""

from . import analytic, branch, experiments, fe, geometry, stats, tree
from ._backend import BACKEND
from .branch import BranchPath, Walk, grow_branch, grow_branch_sequential, max_displacement
from .fe import FeGrid, GridExtentError, limit_consistency, solve
from .geometry import Segment, hausdorff_to_ball, point_segment_distance, sample_direction
from .tree import BudgetExceeded, SimConfig, Tree, TrialSummary, grow, min_distance, radius, run_trials

__all__ = [
    "BACKEND", "BranchPath", "BudgetExceeded", "FeGrid", "GridExtentError", "Segment", "SimConfig",
    "Tree", "TrialSummary", "Walk", "analytic", "branch", "experiments", "fe", "geometry",
    "grow", "grow_branch", "grow_branch_sequential", "hausdorff_to_ball", "limit_consistency",
    "max_displacement", "min_distance", "point_segment_distance", "radius", "run_trials",
    "sample_direction", "solve", "stats", "tree",
]
