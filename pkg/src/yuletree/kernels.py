"""Active kernel module, chosen by ``YULETREE_BACKEND`` at import time."""

from ._backend import BACKEND

if BACKEND == "numba":
    from . import _numba_kernels as impl
else:
    from . import _numpy_kernels as impl

OK = impl.OK
BUDGET = impl.BUDGET
GRID_EXTENT = impl.GRID_EXTENT

grow = impl.grow
min_distances = impl.min_distances
cover = impl.cover
reach_radius = impl.reach_radius
branch_max_displacement = impl.branch_max_displacement
miss_no_branch = impl.miss_no_branch
fe_solve = impl.fe_solve

__all__ = [
    "BACKEND", "OK", "BUDGET", "GRID_EXTENT", "grow", "min_distances", "cover",
    "reach_radius", "branch_max_displacement", "miss_no_branch", "fe_solve",
]
