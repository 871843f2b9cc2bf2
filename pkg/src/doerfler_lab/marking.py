"""Marking strategies: optimal Dörfler, the cyclic prescribed set, maximum.

The markers work on the grouped indicator table of
:func:`~doerfler_lab.estimator.indicator_groups`: all leaves of one macro cell
and generation share a value, so sorting leaves by indicator amounts to
sorting groups.  Ties are broken by ``(macro, gen, offset)``, smallest first.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Sequence

from .estimator import (EstimatorParams, Group, indicator_groups, subset_sq,
                        total_sq)
from .logscalar import ZERO, LogScalar, log2_sum
from .mesh import ElementSet, MarkedSet, Partition

logger = logging.getLogger(__name__)

# Dörfler sums that are equal in exact arithmetic may miss theta*total by
# round-off; the greedy threshold is relaxed by this relative amount.  One
# leaf must carry more than this share to be resolved (about 2**39 leaves per
# cell on the reference trajectory).
DORFLER_RTOL = 1e-13
# tolerance of verify_optimal_dorfler's "satisfies"
SATISFIES_RTOL = 1e-10
# log2 slack for the maximum strategy's ">= mu * max" comparison
MAX_LOG2_TOL = 1e-12
# exhaustive minimality oracle is used below this many leaves
EXHAUSTIVE_LIMIT = 13

KINDS = ("dorfler-greedy", "dorfler-prescribed", "maximum", "ideal")


class MarkingError(ValueError):
    pass


class ZeroIndicatorError(MarkingError):
    pass


@dataclass(frozen=True)
class MarkerConfig:
    kind: str
    theta: float | None = None
    mu: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise MarkingError(f"unknown marker kind {self.kind!r}")
        needs_theta = self.kind.startswith("dorfler")
        if needs_theta != (self.theta is not None):
            raise MarkingError(f"theta is {'required' if needs_theta else 'not allowed'} for {self.kind}")
        if self.theta is not None and not 0 < self.theta < 1:
            raise MarkingError("theta must lie in (0, 1)")
        needs_mu = self.kind == "maximum"
        if needs_mu != (self.mu is not None):
            raise MarkingError(f"mu is {'required' if needs_mu else 'not allowed'} for {self.kind}")
        if self.mu is not None and not 0 < self.mu <= 1:
            raise MarkingError("mu must lie in (0, 1]")


def _order(groups: Sequence[Group]) -> list[Group]:
    return sorted(groups, key=lambda g: (-g.log2, g.macro, g.gen))


def greedy_selection(groups: Sequence[Group], theta: float) -> list[tuple[Group, int]]:
    """Shortest prefix (in descending value) reaching ``theta`` of the total.

    Returns ``(group, n)`` pairs: the first ``n`` leaves (by offset) of each
    group are selected.
    """
    groups = [g for g in groups if g.log2 != -math.inf]
    if not groups:
        raise ZeroIndicatorError("all indicators vanish")
    # normalise by the largest value so that log2 magnitudes stay small
    top = max(g.log2 for g in groups)
    total = log2_sum(math.log2(g.count) + g.log2 - top for g in groups)
    target = total.times_pow2(math.log2(theta) + math.log1p(-DORFLER_RTOL) / math.log(2))
    ordered = _order(groups)
    picked: list[tuple[Group, int]] = []
    prefix = ZERO
    for i, g in enumerate(ordered):
        v = g.log2 - top
        gsum = LogScalar(math.log2(g.count) + v)
        if prefix + gsum >= target:
            need = 2.0 ** ((target - prefix).log2 - v) if target > prefix else 0.0
            n = min(g.count, max(1, math.ceil(need)))
            picked.append((g, n))
            if i + 1 < len(ordered) and abs(ordered[i + 1].log2 - g.log2) <= MAX_LOG2_TOL:
                logger.info("indicator tie at the Dörfler cut: %s vs %s", g, ordered[i + 1])
            return picked
        picked.append((g, g.count))
        prefix = prefix + gsum
    return picked


def greedy_cardinality(groups: Sequence[Group], theta: float) -> int:
    return sum(n for _, n in greedy_selection(groups, theta))


def _build(t: Partition, selection) -> MarkedSet:
    runs: dict[int, list] = {}
    for g, n in selection:
        left = n
        for gen, s, c in t.runs(g.macro):
            if left == 0:
                break
            if gen != g.gen:
                continue
            take = min(c, left)
            runs.setdefault(g.macro, []).append((gen, s, take))
            left -= take
    return ElementSet.from_runs(t.M, runs)


def dorfler_greedy(p: EstimatorParams, t: Partition, theta: float) -> MarkedSet:
    """Minimal-cardinality set holding at least ``theta`` of ``eta_t(t)**2``."""
    if not 0 < theta < 1:
        raise MarkingError("theta must lie in (0, 1)")
    return _build(t, greedy_selection(indicator_groups(p, t), theta))


def prescribed_cell(k: int, M: int) -> int:
    """Unit cell marked at step ``k`` of the cyclic schedule."""
    return (k % M) + 1


def dorfler_prescribed(p: EstimatorParams, t: Partition, k: int) -> MarkedSet:
    """The zero element together with every leaf of cell ``(k mod M) + 1``."""
    z = t.zero_element
    m = prescribed_cell(k, t.M)
    return ElementSet.from_runs(t.M, {0: [(z.gen, z.offset, 1)], m: t.runs(m)})


def maximum_selection(groups: Sequence[Group], mu: float) -> list[tuple[Group, int]]:
    groups = [g for g in groups if g.log2 != -math.inf]
    if not groups:
        raise ZeroIndicatorError("all indicators vanish")
    cut = math.log2(mu) + max(g.log2 for g in groups) - MAX_LOG2_TOL
    return [(g, g.count) for g in groups if g.log2 >= cut]


def maximum_strategy(p: EstimatorParams, t: Partition, mu: float) -> MarkedSet:
    """All leaves whose squared indicator is at least ``mu`` times the largest."""
    if not 0 < mu <= 1:
        raise MarkingError("mu must lie in (0, 1]")
    return _build(t, maximum_selection(indicator_groups(p, t), mu))


def ideal_marking(p: EstimatorParams, t: Partition) -> MarkedSet:
    z = t.zero_element
    return ElementSet.from_runs(t.M, {0: [(z.gen, z.offset, 1)]})


def mark(config: MarkerConfig, p: EstimatorParams, t: Partition, k: int) -> MarkedSet:
    if config.kind == "dorfler-greedy":
        return dorfler_greedy(p, t, config.theta)
    if config.kind == "dorfler-prescribed":
        return dorfler_prescribed(p, t, k)
    if config.kind == "maximum":
        return maximum_strategy(p, t, config.mu)
    return ideal_marking(p, t)


@dataclass(frozen=True)
class DorflerCheck:
    satisfies: bool
    equality_gap: float
    minimal: bool
    cardinality: int
    minimal_cardinality: int


def exhaustive_min_cardinality(values: Sequence[float], theta: float) -> int:
    """Smallest subset size reaching ``theta * sum(values)`` by enumeration."""
    target = theta * math.fsum(values) * (1 - DORFLER_RTOL)
    for size in range(1, len(values) + 1):
        for combo in itertools.combinations(values, size):
            if math.fsum(combo) >= target:
                return size
    return len(values)


def verify_optimal_dorfler(p: EstimatorParams, t: Partition, marked: ElementSet,
                           theta: float) -> DorflerCheck:
    """Check the Dörfler property and minimal cardinality of ``marked``."""
    total = total_sq(p, t)
    got = subset_sq(p, t, marked)
    gap = got.ratio(total) - theta
    satisfies = got >= total.times_pow2(math.log2(theta) + math.log2(1 - SATISFIES_RTOL))
    groups = indicator_groups(p, t)
    best = greedy_cardinality(groups, theta)
    if t.count < EXHAUSTIVE_LIMIT:
        top = max(g.log2 for g in groups)
        values = [2.0 ** (g.log2 - top) for g in groups for _ in range(g.count)]
        values += [0.0] * (t.count - len(values))
        brute = exhaustive_min_cardinality(values, theta)
        if brute != best:
            raise AssertionError(f"greedy cardinality {best} disagrees with enumeration {brute}")
    return DorflerCheck(satisfies=satisfies, equality_gap=gap,
                        minimal=marked.count == best, cardinality=marked.count,
                        minimal_cardinality=best)
