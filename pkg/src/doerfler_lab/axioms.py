"""Checkers for the axioms of adaptivity on seeded random refinements.

Every checker evaluates the squared form of its inequality in the log domain
and reports a relative slack ``(rhs - lhs) / max(lhs, rhs)``; equalities
report ``-|lhs - rhs| / max(lhs, rhs)``.  A check passes when the worst slack
is at least ``-tolerance``.

Instance ``i`` of a suite draws from ``numpy.random.default_rng([seed, i])``,
so results do not depend on how instances are split across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .estimator import (EstimatorParams, delta_sq, distance_to_finest_sq,
                        indicator_sq, subset_sq, total_sq)
from .logscalar import ZERO, LogScalar, absdiff
from .mesh import Element, ElementSet, NotALeafError, Partition

TOLERANCE = 1e-9
EFFICIENCY_TOLERANCE = 1e-13
ORTHOGONALITY_TOLERANCE = 1e-12

AXIOMS = ("A1", "A2", "A3", "A4", "A1'", "A4'", "monotonicity")


class AxiomError(ValueError):
    pass


@dataclass
class AxiomReport:
    axiom: str
    pairs_tested: int
    worst_slack: float
    constant: float | None
    tolerance: float = TOLERANCE
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(self.worst_slack >= -self.tolerance)

    def merge(self, other: "AxiomReport") -> "AxiomReport":
        if other.axiom != self.axiom:
            raise ValueError("cannot merge reports of different axioms")
        return AxiomReport(self.axiom, self.pairs_tested + other.pairs_tested,
                           min(self.worst_slack, other.worst_slack),
                           self.constant, self.tolerance)

    def to_json(self) -> dict:
        return asdict(self)


def _inequality_slack(lhs: LogScalar, rhs: LogScalar) -> float:
    top = max(lhs, rhs)
    if top.is_zero:
        return 0.0
    return (rhs / top).value - (lhs / top).value


def _equality_slack(lhs: LogScalar, rhs: LogScalar) -> float:
    top = max(lhs, rhs)
    if top.is_zero:
        return 0.0
    return -abs((rhs / top).value - (lhs / top).value)


def _require_nested(coarse: Partition, fine: Partition) -> None:
    if not fine.refines(coarse):
        raise AxiomError("partitions are not nested")


def check_stability(p: EstimatorParams, t: Partition, ts: Partition) -> AxiomReport:
    """(A1) ``|eta_t(C) - eta_ts(C)| <= delta(t, ts)`` on the common leaves ``C``.

    Checked as ``|eta_t(C)^2 - eta_ts(C)^2| <= delta^2``, which implies it via
    ``|a - b| <= sqrt(|a^2 - b^2|)``.
    """
    _require_nested(t, ts)
    common = t.common(ts)
    lhs = absdiff(subset_sq(p, t, common), subset_sq(p, ts, common))
    return AxiomReport("A1", 1, _inequality_slack(lhs, delta_sq(p, t, ts)), 1.0)


def check_reduction(p: EstimatorParams, t: Partition, ts: Partition) -> AxiomReport:
    """(A2) ``eta_ts(ts \\ t) <= rho * eta_t(t \\ ts)``, ``rho = 2**(-min(alpha, beta)/2)``."""
    _require_nested(t, ts)
    lhs = subset_sq(p, ts, ts.difference(t))
    rhs = subset_sq(p, t, t.difference(ts)).times_pow2(-min(p.alpha, p.beta))
    return AxiomReport("A2", 1, _inequality_slack(lhs, rhs), p.rho)


def check_discrete_reliability(p: EstimatorParams, t: Partition, ts: Partition) -> AxiomReport:
    """(A3) ``delta(t, ts)^2 <= K * eta_t(t \\ ts)^2``."""
    _require_nested(t, ts)
    rhs = subset_sq(p, t, t.difference(ts)) * p.K
    return AxiomReport("A3", 1, _inequality_slack(delta_sq(p, t, ts), rhs), p.K)


def check_quasi_orthogonality(p: EstimatorParams, chain: Sequence[Partition]) -> AxiomReport:
    """(A4) ``sum_k delta(t_{k+1}, t_k)^2 <= eta_{t_1}(t_1)^2`` (constant 1)."""
    for a, b in zip(chain, chain[1:]):
        _require_nested(a, b)
    lhs = LogScalar.sum(delta_sq(p, a, b) for a, b in zip(chain, chain[1:]))
    return AxiomReport("A4", 1, _inequality_slack(lhs, total_sq(p, chain[0])), 1.0)


def check_efficiency(p: EstimatorParams, t: Partition) -> AxiomReport:
    """(A1') ``delta(t) = eta_t(t)``, i.e. constant 1."""
    lhs, rhs = distance_to_finest_sq(p, t), total_sq(p, t)
    slack = -abs(lhs.log2 - rhs.log2) if lhs and rhs else _equality_slack(lhs, rhs)
    return AxiomReport("A1'", 1, slack, 1.0, EFFICIENCY_TOLERANCE)


def check_orthogonality(p: EstimatorParams, t: Partition, ts: Partition,
                        to: Partition) -> AxiomReport:
    """(A4') ``delta(to, ts)^2 + delta(ts, t)^2 = delta(to, t)^2``."""
    _require_nested(t, ts)
    _require_nested(ts, to)
    lhs = delta_sq(p, ts, to) + delta_sq(p, t, ts)
    return AxiomReport("A4'", 1, _equality_slack(lhs, delta_sq(p, t, to)), None,
                       ORTHOGONALITY_TOLERANCE)


def check_local_monotonicity(p: EstimatorParams, t: Partition, leaf: Element) -> AxiomReport:
    """Bisecting one leaf never increases the indicator mass it carried."""
    if leaf not in t:
        raise NotALeafError(f"{leaf} is not a leaf")
    ts = t.refine(ElementSet.from_elements(t.M, [leaf]))
    a, b = leaf.children()
    lhs = indicator_sq(p, ts, a) + indicator_sq(p, ts, b)
    return AxiomReport("monotonicity", 1, _inequality_slack(lhs, indicator_sq(p, t, leaf)), 1.0)


# -- random instances ---------------------------------------------------------

def random_refinement(rng: np.random.Generator, t: Partition, rounds: int,
                      density: float, max_depth: int = 8) -> Partition:
    """Refine ``rounds`` times, marking each leaf with probability ``density``."""
    for _ in range(rounds):
        leaves = [e for e in t if e.gen < max_depth]
        hit = rng.random(len(leaves)) < density
        marked = [e for e, h in zip(leaves, hit) if h]
        if marked:
            t = t.refine(ElementSet.from_elements(t.M, marked))
    return t


def random_partition(rng: np.random.Generator, M: int, rounds: int = 4,
                     density: float = 0.3, max_depth: int = 8) -> Partition:
    return random_refinement(rng, Partition.initial(M), rounds, density, max_depth)


@dataclass(frozen=True)
class RefinementPairGen:
    seed: int = 0
    max_extra_generations: int = 6
    density: float = 0.3
    base_rounds: int = 3
    max_depth: int = 8

    def rng(self, index: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, index])

    def refine_strictly(self, rng, t: Partition) -> Partition:
        rounds = int(rng.integers(1, self.max_extra_generations + 1))
        ts = random_refinement(rng, t, rounds, self.density, self.max_depth)
        if ts == t:
            leaves = [e for e in t if e.gen < self.max_depth]
            pick = leaves[int(rng.integers(len(leaves)))]
            ts = t.refine(ElementSet.from_elements(t.M, [pick]))
        return ts

    def base(self, rng, M: int) -> Partition:
        rounds = int(rng.integers(0, self.base_rounds + 1))
        return random_partition(rng, M, rounds, self.density, self.max_depth)

    def pair(self, index: int, M: int) -> tuple[Partition, Partition]:
        rng = self.rng(index)
        t = self.base(rng, M)
        return t, self.refine_strictly(rng, t)

    def chain(self, index: int, M: int, length: int | None = None) -> list[Partition]:
        rng = self.rng(index)
        if length is None:
            length = int(rng.integers(2, 6))
        out = [self.base(rng, M)]
        for _ in range(length - 1):
            out.append(random_refinement(rng, out[-1], 1, self.density, self.max_depth))
        return out


# -- suites -------------------------------------------------------------------

def _instance(p: EstimatorParams, gen: RefinementPairGen, index: int) -> tuple[list, bool]:
    rng = gen.rng(index)
    t = gen.base(rng, p.M)
    ts = gen.refine_strictly(rng, t)
    to = random_refinement(rng, ts, int(rng.integers(0, 3)), gen.density, gen.max_depth)
    chain = [t]
    for _ in range(int(rng.integers(1, 5))):
        chain.append(random_refinement(rng, chain[-1], 1, gen.density, gen.max_depth))
    leaves = [e for e in t if e.gen < gen.max_depth]
    leaf = leaves[int(rng.integers(len(leaves)))]
    reports = [
        check_stability(p, t, ts),
        check_reduction(p, t, ts),
        check_discrete_reliability(p, t, ts),
        check_quasi_orthogonality(p, chain),
        check_efficiency(p, ts),
        check_orthogonality(p, t, ts, to),
        check_local_monotonicity(p, t, leaf),
    ]
    return reports, ts.g0 > t.g0


def _chunk(args) -> tuple[dict, dict]:
    p, gen, indices = args
    merged: dict[str, AxiomReport] = {}
    coverage = {"zero_refined": 0, "zero_unrefined": 0}
    for i in indices:
        reports, zero_refined = _instance(p, gen, i)
        coverage["zero_refined" if zero_refined else "zero_unrefined"] += 1
        for r in reports:
            merged[r.axiom] = merged[r.axiom].merge(r) if r.axiom in merged else r
    return merged, coverage


@dataclass
class SuiteResult:
    params: EstimatorParams
    reports: list[AxiomReport]
    coverage: dict

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)


def run_suite(p: EstimatorParams, n: int = 1000, seed: int = 0, workers: int = 1,
              generator: RefinementPairGen | None = None) -> SuiteResult:
    """Run every checker on ``n`` seeded random instances."""
    gen = generator or RefinementPairGen(seed=seed)
    workers = max(1, workers)
    chunks = [range(i, n, workers) for i in range(workers)]
    jobs = [(p, gen, c) for c in chunks if len(c)]
    if workers == 1:
        parts = [_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk, jobs))
    merged: dict[str, AxiomReport] = {}
    coverage = {"zero_refined": 0, "zero_unrefined": 0}
    for rep, cov in parts:
        for k, v in cov.items():
            coverage[k] += v
        for a, r in rep.items():
            merged[a] = merged[a].merge(r) if a in merged else r
    return SuiteResult(p, [merged[a] for a in AXIOMS if a in merged], coverage)


def parameter_sets(seed: int = 0, n_random: int = 5,
                   reference: EstimatorParams | None = None) -> list[EstimatorParams]:
    """The reference parameters followed by ``n_random`` draws.

    Draws use ``alpha, beta ~ U[0.05, 2]``, ``K ~ U(1, 10]``, ``M ~ U{1..8}``.
    """
    from .params import reference_solution

    out = [reference or reference_solution().estimator_params()]
    rng = np.random.default_rng([seed, 10**6])
    for _ in range(n_random):
        alpha, beta = rng.uniform(0.05, 2.0, size=2)
        K = 10.0 - rng.uniform(0.0, 9.0)  # (1, 10]
        M = int(rng.integers(1, 9))
        out.append(EstimatorParams(alpha=float(alpha), beta=float(beta), K=float(K), M=M))
    return out
