"""Parameters that make Dörfler marking with a given theta fail a given rate.

Given the marking parameter ``theta``, a target rate ``s0`` and a closeness
``epsilon``, :func:`solve_params` picks ``beta = s0``, the smallest number of
unit cells ``M`` for which

    gamma = (1 - theta) / (S(beta, M) - 1)

lies in ``(0, min(epsilon, theta))``, then ``K = 1/(theta - gamma)`` and
``alpha = s0 / (2M)``.  With these, the zero element plus the largest unit
cell carry exactly the fraction ``theta`` of the estimator at every step.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .estimator import EstimatorParams

_LN2 = math.log(2.0)
MAX_SEARCH_ITERATIONS = 10**6


class ParamError(ValueError):
    pass


def S(beta: float, M: int) -> float:
    """``sum_{j=1}^M 2**(-beta (j-1)/M) = (1 - 2**-beta) / (1 - 2**(-beta/M))``."""
    if not beta > 0:
        raise ParamError("beta must be positive")
    if M < 1 or int(M) != M:
        raise ParamError("M must be a positive integer")
    if M == 1:
        return 1.0
    x = beta * _LN2
    return math.expm1(-x) / math.expm1(-x / M)


def S_direct(beta: float, M: int) -> float:
    """Term-by-term geometric sum."""
    return math.fsum(2.0 ** (-beta * (j - 1) / M) for j in range(1, M + 1))


@dataclass(frozen=True)
class ParamSolution:
    theta: float
    s0: float
    epsilon: float
    beta: float
    M: int
    gamma: float
    K: float
    alpha: float
    S_value: float

    def estimator_params(self) -> EstimatorParams:
        return EstimatorParams(alpha=self.alpha, beta=self.beta, K=self.K, M=self.M)

    @property
    def theta_tilde_star(self) -> float:
        return 1.0 / self.K

    @property
    def theta_star(self) -> float:
        return 1.0 / (1.0 + self.K)

    def to_json(self) -> dict:
        return asdict(self)


def _gamma(theta: float, beta: float, M: int) -> float:
    return (1.0 - theta) / (S(beta, M) - 1.0)


def solve_params(theta: float, s0: float, epsilon: float) -> ParamSolution:
    if not 0 < theta < 1:
        raise ParamError("theta must lie in (0, 1)")
    if not s0 > 0 or not epsilon > 0:
        raise ParamError("s0 and epsilon must be positive")
    beta = s0
    bound = min(epsilon, theta)

    def ok(M):
        g = _gamma(theta, beta, M)
        return 0 < g < bound

    # gamma(M) decreases in M; bracket by doubling, then bisect for the first hit
    lo, hi = 1, 2
    iterations = 0
    while not ok(hi):
        lo, hi = hi, 2 * hi
        iterations += 1
        if iterations > MAX_SEARCH_ITERATIONS or hi > 2**62:
            raise ParamError("no admissible M found")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
        iterations += 1
        if iterations > MAX_SEARCH_ITERATIONS:
            raise ParamError("no admissible M found")
    M = hi
    gamma = _gamma(theta, beta, M)
    K = 1.0 / (theta - gamma)
    return ParamSolution(theta=theta, s0=s0, epsilon=epsilon, beta=beta, M=M,
                         gamma=gamma, K=K, alpha=s0 / (2 * M), S_value=S(beta, M))


def thresholds(C1: float, C3: float) -> dict:
    """The two classical Dörfler thresholds ``1/(1+C3)`` and ``C1/C3``."""
    if not C1 > 0 or not C3 > 0:
        raise ParamError("constants must be positive")
    return {"theta_star": 1.0 / (1.0 + C3), "theta_tilde_star": C1 / C3}


def reference_solution() -> ParamSolution:
    """``theta = 1/2``, ``s0 = 1``, ``epsilon = 0.1`` (gives ``M = 8``)."""
    return solve_params(0.5, 1.0, 0.1)
