"""A one-dimensional counterexample lab for Dörfler marking.

A bisection partition lattice on ``[0, M+1]``, a synthetic estimator whose
optimal Dörfler marking is known in closed form, checkers for the axioms of
adaptivity, three marking strategies and an adaptive driver.
"""

from .axioms import AxiomReport, run_suite
from .driver import RunConfig, Trajectory, divergence_report, run
from .estimator import EstimatorParams, delta_sq, indicator_sq, total_sq
from .logscalar import LogScalar
from .marking import MarkerConfig, dorfler_greedy, dorfler_prescribed, maximum_strategy
from .mesh import Element, ElementSet, Partition, join, meet
from .params import ParamSolution, S, solve_params, thresholds

__version__ = "0.1.0"

__all__ = [
    "AxiomReport", "Element", "ElementSet", "EstimatorParams", "LogScalar",
    "MarkerConfig", "ParamSolution", "Partition", "RunConfig", "S", "Trajectory",
    "delta_sq", "divergence_report", "dorfler_greedy", "dorfler_prescribed",
    "indicator_sq", "join", "maximum_strategy", "meet", "run", "run_suite",
    "solve_params", "thresholds", "total_sq",
]
