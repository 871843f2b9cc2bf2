import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import breakpoints, from_breakpoints
from doerfler_lab.axioms import random_partition
from doerfler_lab.mesh import (Element, ElementSet, GenerationLimitError,
                               MeshError, NotALeafError, Partition,
                               is_refinement, join, meet)


def test_initial_partition():
    t = Partition.initial(3)
    assert t.count == 4
    assert list(t) == [Element(m, 0, 0) for m in range(4)]
    assert t.zero_element == Element(0, 0, 0) and t.g0 == 0
    with pytest.raises(MeshError):
        Partition.initial(0)


def test_element_geometry():
    e = Element(2, 3, 5)
    assert e.left == Fraction(2) + Fraction(5, 8)
    assert e.length == Fraction(1, 8)
    a, b = e.children()
    assert a.left == e.left and b.right == e.right
    assert a.parent() == e and e.contains(b)
    with pytest.raises(MeshError):
        Element(0, 2, 4)


def test_refine_zero_element_tracks_g0():
    t = Partition.initial(1)
    for k in range(1, 6):
        t = t.refine(ElementSet.from_elements(1, [t.zero_element]))
        assert t.g0 == k
        assert t.zero_element == Element(0, k, 0)
    assert t.count == 2 + 5


def test_refine_rejects_non_leaves():
    t = Partition.initial(1)
    with pytest.raises(NotALeafError):
        t.refine(ElementSet.from_elements(1, [Element(1, 1, 0)]))
    with pytest.raises(GenerationLimitError):
        t.refine(ElementSet.from_elements(1, [Element(1, 0, 0)]), max_gen=0)


def test_uniform_refinement_stays_compressed():
    t = Partition.initial(1)
    for _ in range(400):
        t = t.refine(t.leaves_in_cell(1))
    assert t.count == 1 + 2**400
    assert len(t.runs(1)) == 1
    assert t.generation_at(1, Fraction(1, 2)) == 400


def test_validate_rejects_gaps_and_overlaps():
    with pytest.raises(MeshError):
        Partition.from_elements(1, [Element(0, 0, 0), Element(1, 1, 0)])
    with pytest.raises(MeshError):
        Partition.from_elements(1, [Element(0, 0, 0), Element(1, 0, 0), Element(1, 1, 1)])


def _all_depth2(M):
    """Every bisection partition with generations <= 2, by enumeration."""
    shapes = [[(0, 0)], [(1, 0), (1, 1)], [(2, 0), (2, 1), (1, 1)],
              [(1, 0), (2, 2), (2, 3)], [(2, 0), (2, 1), (2, 2), (2, 3)]]
    for combo in itertools.product(shapes, repeat=M + 1):
        yield Partition.from_elements(M, [Element(m, g, o) for m, shape in enumerate(combo)
                                          for g, o in shape])


def test_lattice_against_breakpoint_oracle():
    parts = list(_all_depth2(1))
    assert len(parts) == 25
    for a, b in itertools.product(parts, repeat=2):
        assert meet(a, b) == from_breakpoints(1, breakpoints(a) & breakpoints(b))
        assert join(a, b) == from_breakpoints(1, breakpoints(a) | breakpoints(b))
        assert is_refinement(a, b) == (breakpoints(b) <= breakpoints(a))


def _random_pairs(n, seed=0):
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        M = int(rng.integers(1, 6))
        yield (random_partition(rng, M, rounds=int(rng.integers(0, 6))),
               random_partition(rng, M, rounds=int(rng.integers(0, 6))))


def test_lattice_laws_on_random_pairs():
    for a, b in _random_pairs(1000):
        m, j = a.meet(b), a.join(b)
        assert j.count + m.count == a.count + b.count
        assert is_refinement(a, m) and is_refinement(b, m)
        assert is_refinement(j, a) and is_refinement(j, b)
        assert a.meet(j) == a and a.join(m) == a  # absorption
        assert b.meet(a) == m and b.join(a) == j


def test_difference_and_common_split_the_leaves():
    for a, b in _random_pairs(200, seed=3):
        b = a.join(b)
        common = a.common(b)
        assert common.count + a.difference(b).count == a.count
        assert common.count + b.difference(a).count == b.count
        assert set(common) == set(a) & set(b)


def test_json_round_trip():
    rng = np.random.default_rng(7)
    t = random_partition(rng, 4, rounds=5)
    assert Partition.loads(t.dumps()) == t
    assert Partition.from_json(t.M, t.to_json()) == t


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_meet_join_commute_and_idempotent(M, s1, s2):
    a = random_partition(np.random.default_rng(s1), M, rounds=4)
    b = random_partition(np.random.default_rng(s2), M, rounds=4)
    assert a.meet(b) == b.meet(a) and a.join(b) == b.join(a)
    assert a.meet(a) == a and a.join(a) == a
    assert sorted(a, key=Element.position_key) == list(a)
