"""Synthetic error indicator and the estimator-difference distance.

For a leaf ``T`` of ``t`` inside the unit cell ``[m, m+1]`` (``m >= 1``)

    eta_t(T)**2 = 2**(-alpha*g0(t) - beta*(g(T) + (m-1)/M)) * |T|,   |T| = 2**-g(T)

the element containing zero carries ``eta_t(t|[1,M+1])**2 / (K-1)``, and every
other leaf of ``[0, 1]`` carries zero.  Consequently the zero element holds a
fraction ``1/K`` of the total, and refining it scales every other indicator by
``2**-alpha``.

All values are :class:`~doerfler_lab.logscalar.LogScalar`.  Leaves of one
macro cell and one generation share the same value, which is what lets the
markers work on partitions with astronomically many leaves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

from .logscalar import ZERO, LogScalar, log2_sum
from .mesh import Element, ElementSet, MeshError, NotALeafError, Partition


class EstimatorError(ValueError):
    pass


@dataclass(frozen=True)
class EstimatorParams:
    alpha: float
    beta: float
    K: float
    M: int

    def __post_init__(self):
        if not self.alpha > 0 or not self.beta > 0:
            raise EstimatorError("alpha and beta must be positive")
        if not self.K > 1:
            raise EstimatorError("K must exceed 1")
        if int(self.M) != self.M or self.M < 1:
            raise EstimatorError("M must be a positive integer")

    @property
    def rho(self) -> float:
        """Reduction constant ``2**(-min(alpha, beta)/2)``."""
        return 2.0 ** (-min(self.alpha, self.beta) / 2)

    def base_exponent(self, m: int, gen: int) -> float:
        """log2 of a single leaf value at ``g0 = 0``."""
        return -self.beta * gen - self.beta * (m - 1) / self.M - gen

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "K": self.K, "M": self.M}


class Group(NamedTuple):
    """``count`` leaves of one macro and generation sharing ``log2`` value."""

    log2: float
    macro: int
    gen: int
    count: int


@dataclass(frozen=True)
class _Evaluation:
    g0: int
    cell_sq: tuple  # LogScalar per unit cell m = 1..M
    interior_sq: LogScalar  # eta^2(t|[1, M+1])
    zero_sq: LogScalar
    total_sq: LogScalar


def _check_M(p: EstimatorParams, t: ElementSet) -> None:
    if t.M != p.M:
        raise EstimatorError(f"partition has M={t.M}, parameters have M={p.M}")


@lru_cache(maxsize=512)
def _evaluate(p: EstimatorParams, t: Partition) -> _Evaluation:
    _check_M(p, t)
    g0 = t.g0
    shift = -p.alpha * g0
    # sums at g0 = 0 first, so that g0 enters as a single exact shift
    base = [log2_sum(math.log2(c) + p.base_exponent(m, g) for g, _, c in t.runs(m))
            for m in range(1, p.M + 1)]
    cells = [b.times_pow2(shift) for b in base]
    interior = LogScalar.sum(base).times_pow2(shift)
    zero = interior.times_pow2(-math.log2(p.K - 1))
    total = interior.times_pow2(math.log2(p.K) - math.log2(p.K - 1))
    return _Evaluation(g0, tuple(cells), interior, zero, total)


def _leaf_exponent(p: EstimatorParams, g0: int, m: int, gen: int) -> float:
    return -p.alpha * g0 + p.base_exponent(m, gen)


def indicator_sq(p: EstimatorParams, t: Partition, e: Element) -> LogScalar:
    """Squared indicator of the leaf ``e`` of ``t``."""
    _check_M(p, t)
    if e not in t:
        raise NotALeafError(f"{e} is not a leaf of the partition")
    if e.macro >= 1:
        return LogScalar(_leaf_exponent(p, t.g0, e.macro, e.gen))
    if e == t.zero_element:
        return _evaluate(p, t).zero_sq
    return ZERO


def subset_sq(p: EstimatorParams, t: Partition, s: ElementSet) -> LogScalar:
    """Sum of squared indicators over a set of leaves of ``t``."""
    _check_M(p, t)
    if not s.issubset(t):
        raise NotALeafError("set contains elements that are not leaves")
    return _subset_sq_unchecked(p, t, s)


def _subset_sq_unchecked(p: EstimatorParams, t: Partition, s: ElementSet) -> LogScalar:
    g0 = t.g0
    terms = [math.log2(c) + _leaf_exponent(p, g0, m, g)
             for m in range(1, p.M + 1) for g, _, c in s.runs(m)]
    if t.zero_element in s:
        terms.append(_evaluate(p, t).zero_sq.log2)
    return log2_sum(terms)


def total_sq(p: EstimatorParams, t: Partition) -> LogScalar:
    return _evaluate(p, t).total_sq


def interior_sq(p: EstimatorParams, t: Partition) -> LogScalar:
    """``eta_t(t|[1, M+1])**2``."""
    return _evaluate(p, t).interior_sq


def cell_sq(p: EstimatorParams, t: Partition, m: int) -> LogScalar:
    """``eta_t(t|[m, m+1])**2`` for a unit cell ``1 <= m <= M``."""
    if not 1 <= m <= p.M:
        raise MeshError(f"unit cell index {m} outside 1..{p.M}")
    return _evaluate(p, t).cell_sq[m - 1]


def indicator_groups(p: EstimatorParams, t: Partition) -> list[Group]:
    """Positive indicator values grouped by ``(macro, gen)``.

    The zero element forms its own group of size one.  Zero-valued leaves of
    ``[0, 1]`` are omitted.
    """
    ev = _evaluate(p, t)
    groups = [Group(ev.zero_sq.log2, 0, ev.g0, 1)]
    for m in range(1, p.M + 1):
        for g, c in sorted(t.gen_counts(m).items()):
            groups.append(Group(_leaf_exponent(p, ev.g0, m, g), m, g, c))
    return groups


def delta_sq(p: EstimatorParams, coarse: Partition, fine: Partition) -> LogScalar:
    """``eta_coarse(coarse)**2 - eta_fine(fine)**2`` for ``fine >= coarse``.

    When the zero element is not refined all other indicators off ``[0, 1]``
    are unchanged on common leaves, so the difference is evaluated as
    ``K/(K-1) * (eta_c(c\\f)**2 - eta_f(f\\c)**2)``, which avoids cancelling two
    nearly equal totals.  Otherwise the totals differ by at least ``2**-alpha``
    and are subtracted directly.
    """
    _check_M(p, coarse)
    if not fine.refines(coarse):
        raise EstimatorError("fine partition is not a refinement of coarse")
    if coarse == fine:
        return ZERO
    if fine.g0 == coarse.g0:
        removed = _subset_sq_unchecked(p, coarse, coarse.difference(fine))
        added = _subset_sq_unchecked(p, fine, fine.difference(coarse))
        return (removed - added).times_pow2(math.log2(p.K) - math.log2(p.K - 1))
    return total_sq(p, coarse) - total_sq(p, fine)


def distance_to_finest_sq(p: EstimatorParams, t: Partition) -> LogScalar:
    """``delta(t)**2``; the finest limit has vanishing estimator."""
    return total_sq(p, t)


def clear_cache() -> None:
    _evaluate.cache_clear()
