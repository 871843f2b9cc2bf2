import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import REF_GAMMA, REF_K, REF_S
from doerfler_lab.params import (ParamError, S, S_direct, reference_solution,
                                 solve_params, thresholds)


def test_S_closed_form():
    assert S(1.0, 8) == pytest.approx(0.5 / (1 - 2 ** (-1 / 8)), rel=1e-15)
    assert S(1.0, 8) == pytest.approx(REF_S, rel=1e-13)
    assert S(3.0, 1) == 1.0


@given(st.floats(0.01, 10), st.integers(1, 200))
def test_S_matches_direct_sum(beta, M):
    assert S(beta, M) == pytest.approx(S_direct(beta, M), rel=1e-12)


def test_reference_solution():
    sol = reference_solution()
    assert (sol.beta, sol.M, sol.alpha) == (1.0, 8, 0.0625)
    assert sol.gamma == pytest.approx(REF_GAMMA, rel=1e-12)
    assert sol.K == pytest.approx(REF_K, rel=1e-12)
    assert 1 / sol.K < 0.5 < 1 / sol.K + 0.1


def test_M7_is_not_admissible():
    gamma7 = 0.5 / (S(1.0, 7) - 1)
    assert gamma7 == pytest.approx(0.1162, abs=1e-4)
    assert gamma7 > 0.1


def test_huge_epsilon_returns_first_M_below_theta():
    sol = solve_params(0.5, 1.0, 1e9)
    assert 0.5 / (S(1.0, 2) - 1) == pytest.approx(math.sqrt(2) / 2, rel=1e-12)
    assert sol.M == 3 and sol.gamma < 0.5


def test_large_theta():
    sol = solve_params(0.9, 1.0, 0.5)
    assert sol.M == 2
    assert sol.gamma == pytest.approx(0.1414213562, rel=1e-9)
    assert sol.K == pytest.approx(1.318255, rel=1e-6)


@pytest.mark.parametrize("args", [(0.0, 1, 0.1), (1.0, 1, 0.1), (1.5, 1, 0.1),
                                  (0.5, 0, 0.1), (0.5, 1, 0), (0.5, -1, 0.1)])
def test_invalid_inputs(args):
    with pytest.raises(ParamError):
        solve_params(*args)


def test_thresholds():
    th = thresholds(1.0, 4.0)
    assert th == {"theta_star": 0.2, "theta_tilde_star": 0.25}
    with pytest.raises(ParamError):
        thresholds(0.0, 1.0)


def test_theta_window_on_random_inputs():
    rng = np.random.default_rng(42)
    for _ in range(50):
        theta, s0, eps = rng.uniform(0.05, 0.95), rng.uniform(0.1, 3), rng.uniform(0.01, 1)
        sol = solve_params(theta, s0, eps)
        tt = thresholds(1.0, sol.K)["theta_tilde_star"]
        assert tt < theta < tt + eps
        assert sol.M == 2 or not 0 < (1 - theta) / (S(s0, sol.M - 1) - 1) < min(eps, theta)
