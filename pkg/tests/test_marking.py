import itertools
import logging
import math

import numpy as np
import pytest

from conftest import REF_S
from doerfler_lab.axioms import random_partition
from doerfler_lab.estimator import EstimatorParams, Group, indicator_sq, subset_sq, total_sq
from doerfler_lab.marking import (MarkerConfig, MarkingError, ZeroIndicatorError,
                                  dorfler_greedy, dorfler_prescribed, exhaustive_min_cardinality,
                                  greedy_selection, ideal_marking, maximum_strategy,
                                  prescribed_cell, verify_optimal_dorfler)
from doerfler_lab.mesh import Element, ElementSet, Partition


def brute_force_min(p, t, theta):
    leaves = list(t)
    vals = [indicator_sq(p, t, e).value for e in leaves]
    total = math.fsum(vals)
    for r in range(1, len(leaves) + 1):
        if any(math.fsum(c) >= theta * total * (1 - 1e-13) for c in itertools.combinations(vals, r)):
            return r


def test_greedy_is_minimal_on_small_partitions():
    checked = 0
    for i in range(400):
        rng = np.random.default_rng([1, i])
        p = EstimatorParams(alpha=float(rng.uniform(0.05, 2)), beta=float(rng.uniform(0.05, 2)),
                            K=float(rng.uniform(1.1, 10)), M=int(rng.integers(1, 5)))
        t = random_partition(rng, p.M, rounds=3, density=0.3)
        if t.count > 12:
            continue
        theta = float(rng.uniform(0.05, 0.95))
        marked = dorfler_greedy(p, t, theta)
        assert marked.issubset(t)
        assert subset_sq(p, t, marked) >= total_sq(p, t).times_pow2(math.log2(theta) - 1e-12)
        assert marked.count == brute_force_min(p, t, theta)
        checked += 1
    assert checked > 100


def test_exhaustive_oracle():
    assert exhaustive_min_cardinality([4, 1, 1, 1, 1], 0.5) == 1
    assert exhaustive_min_cardinality([1, 1, 1, 1], 0.6) == 3
    assert exhaustive_min_cardinality([0.0, 3.0, 1.0], 0.9) == 2


def test_selection_is_scale_invariant():
    groups = [Group(0.0, 0, 0, 1), Group(-1.0, 1, 0, 3), Group(-2.5, 2, 1, 4), Group(-2.5, 1, 2, 2)]
    base = greedy_selection(groups, 0.7)
    for shift in (-2000.0, -1e5, 300.0):
        shifted = [g._replace(log2=g.log2 + shift) for g in groups]
        assert [(g.macro, g.gen, n) for g, n in greedy_selection(shifted, 0.7)] == \
               [(g.macro, g.gen, n) for g, n in base]


def test_ties_prefer_smaller_macro_then_generation(caplog):
    groups = [Group(-1.0, 2, 0, 1), Group(-1.0, 1, 0, 1), Group(-1.0, 1, 1, 1)]
    with caplog.at_level(logging.INFO, logger="doerfler_lab.marking"):
        sel = greedy_selection(groups, 0.3)
    assert [(g.macro, g.gen, n) for g, n in sel] == [(1, 0, 1)]
    assert "tie" in caplog.text


def test_partial_group_takes_leftmost_leaves():
    p = EstimatorParams(alpha=1.0, beta=1.0, K=50.0, M=1)
    t = Partition.initial(1)
    t = t.refine(t.leaves_in_cell(1)).refine(ElementSet.from_elements(1, [Element(1, 1, 0), Element(1, 1, 1)]))
    marked = dorfler_greedy(p, t, 0.4)
    assert list(marked) == [Element(1, 2, 0), Element(1, 2, 1)]


def test_empty_groups():
    with pytest.raises(ZeroIndicatorError):
        greedy_selection([Group(-math.inf, 0, 0, 1)], 0.5)


def test_prescribed_set_at_start(ref):
    t = Partition.initial(8)
    m = dorfler_prescribed(ref, t, 0)
    assert set(m) == {Element(0, 0, 0), Element(1, 0, 0)}
    # zero element 1/K of the total, cell 1 another 1/S of the interior
    share = subset_sq(ref, t, m).ratio(total_sq(ref, t))
    assert share == pytest.approx(1 / ref.K + (1 - 1 / ref.K) / REF_S, rel=1e-13)
    assert share == pytest.approx(0.5, rel=1e-13)
    check = verify_optimal_dorfler(ref, t, m, 0.5)
    assert check.satisfies and check.minimal and check.minimal_cardinality == 2


def test_prescribed_cycle():
    assert [prescribed_cell(k, 3) for k in range(7)] == [1, 2, 3, 1, 2, 3, 1]


def test_maximum_and_ideal(ref):
    t = Partition.initial(8)
    assert set(maximum_strategy(ref, t, 0.5)) == {Element(0, 0, 0)}
    assert list(ideal_marking(ref, t)) == [t.zero_element]
    p = EstimatorParams(alpha=1.0, beta=0.1, K=50.0, M=2)
    # T0 is tiny for large K; both unit cells are within a factor 2**-0.05
    assert set(maximum_strategy(p, Partition.initial(2), 0.9)) == {Element(1, 0, 0), Element(2, 0, 0)}


@pytest.mark.parametrize("kwargs", [dict(kind="nope"), dict(kind="dorfler-greedy"),
                                    dict(kind="dorfler-greedy", theta=1.0),
                                    dict(kind="maximum"), dict(kind="maximum", mu=0.0),
                                    dict(kind="ideal", theta=0.5)])
def test_marker_config_validation(kwargs):
    with pytest.raises(MarkingError):
        MarkerConfig(**kwargs)
