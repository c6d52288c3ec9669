"""Constant-modulus optimization by extreme point pursuit.

Minimize ``f(x)`` over a constant-modulus set ``V`` by solving
``min f(x) - lam ||x||^2`` over the convex hull of ``V`` with projected
gradient steps and a growing penalty weight.
"""

from . import cm_sets, hull_projections, objectives, oracle, penalties, solver
from .cm_sets import CMSetSpec, Family
from .objectives import ProblemSpec
from .solver import SolveResult, homotopy_solve

__version__ = "0.1.0"

__all__ = [
    "cm_sets", "hull_projections", "objectives", "oracle", "penalties", "solver",
    "CMSetSpec", "Family", "ProblemSpec", "SolveResult", "homotopy_solve", "__version__",
]
