"""The adaptive loop: estimate, mark, refine; with trajectory bookkeeping.

Every step records the cardinality, the squared estimator (as log2), the
rate functional ``log2((#T_k - #T_0)**s * eta_k)`` and the marked set.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .estimator import EstimatorParams, distance_to_finest_sq, total_sq
from .marking import (DorflerCheck, MarkerConfig, ZeroIndicatorError, mark,
                      verify_optimal_dorfler)
from .mesh import MarkedSet, Partition
from .params import ParamSolution

DEFAULT_STOP_LOG2_ETA = -4000.0
CSV_HEADER = ["k", "cardinality", "added", "eta_sq_log2", "delta_sq_log2",
              "rate_log2", "g0", "marked_count"]


@dataclass(frozen=True)
class RunConfig:
    params: EstimatorParams
    marker: MarkerConfig
    max_iterations: int | None = None
    rate_exponent: float | None = None
    stop_log2_eta: float = DEFAULT_STOP_LOG2_ETA
    check_optimality: bool = True

    def __post_init__(self):
        if isinstance(self.params, ParamSolution):
            object.__setattr__(self, "params", self.params.estimator_params())
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")

    @property
    def iterations(self) -> int:
        return self.max_iterations if self.max_iterations is not None else 100 * self.params.M

    @property
    def s(self) -> float:
        # beta equals s0 in the construction
        return self.rate_exponent if self.rate_exponent is not None else self.params.beta


@dataclass(frozen=True)
class TrajectoryRecord:
    k: int
    cardinality: int
    added: int
    eta_sq_log2: float
    delta_sq_log2: float
    rate_log2: float | None
    marked: MarkedSet
    g0: int
    dorfler: DorflerCheck | None = None

    def csv_row(self) -> list[str]:
        rate = "" if self.rate_log2 is None else _fmt(self.rate_log2)
        return [str(self.k), str(self.cardinality), str(self.added),
                _fmt(self.eta_sq_log2), _fmt(self.delta_sq_log2), rate,
                str(self.g0), str(self.marked.count)]


@dataclass(frozen=True)
class MarkingFailure:
    k: int
    reason: str


class Trajectory(list):
    """List of :class:`TrajectoryRecord` plus the run's context."""

    def __init__(self, records=(), *, config: RunConfig, failure: MarkingFailure | None = None):
        super().__init__(records)
        self.config = config
        self.failure = failure

    @property
    def cycle_length(self) -> int:
        return self.config.params.M

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self:
            w.writerow(r.csv_row())
        return buf.getvalue()


def _fmt(x: float) -> str:
    return format(x, ".15g")


def rate_functional(record: TrajectoryRecord, s: float) -> float | None:
    """``s*log2(added) + eta_sq_log2/2``; undefined (None) before any refinement."""
    if record.added < 1:
        return None
    return s * math.log2(record.added) + 0.5 * record.eta_sq_log2


def iterate(config: RunConfig) -> Iterator[tuple[Partition, TrajectoryRecord]]:
    """Yield ``(partition, record)`` for ``k = 0, 1, ...``.

    Raises :class:`~doerfler_lab.marking.ZeroIndicatorError` if marking fails.
    """
    p = config.params
    t = Partition.initial(p.M)
    n0 = t.count
    theta = config.marker.theta
    for k in range(config.iterations + 1):
        eta = total_sq(p, t)
        marked = mark(config.marker, p, t, k)
        check = None
        if config.check_optimality and theta is not None:
            check = verify_optimal_dorfler(p, t, marked, theta)
        added = t.count - n0
        rate = config.s * math.log2(added) + 0.5 * eta.log2 if added else None
        rec = TrajectoryRecord(
            k=k, cardinality=t.count, added=added, eta_sq_log2=eta.log2,
            delta_sq_log2=distance_to_finest_sq(p, t).log2,
            rate_log2=rate, marked=marked, g0=t.g0, dorfler=check)
        yield t, rec
        if k == config.iterations or eta.log2 < config.stop_log2_eta:
            return
        t = t.refine(marked)


def run(config: RunConfig) -> Trajectory:
    records = []
    failure = None
    try:
        for _, rec in iterate(config):
            records.append(rec)
    except ZeroIndicatorError as exc:
        failure = MarkingFailure(k=len(records), reason=str(exc))
    return Trajectory(records, config=config, failure=failure)


@dataclass(frozen=True)
class DivergenceReport:
    diverges: bool
    growth_exponent_per_cycle: float
    positive_increment_fraction: float
    cycles_used: int

    def to_json(self) -> dict:
        return dict(self.__dict__)


class TrajectoryTooShort(ValueError):
    pass


TRANSIENT_CYCLES = 2
POSITIVE_FRACTION = 0.95


def cycle_boundary_rates(trajectory, s: float, cycle_length: int | None = None):
    """``(l, rate_log2)`` at ``k = l*M`` for ``l >= 1``."""
    M = cycle_length or trajectory.cycle_length
    out = []
    for rec in trajectory:
        if rec.k % M == 0 and rec.added >= 1:
            out.append((rec.k // M, rate_functional(rec, s)))
    return out


def divergence_report(trajectory, s: float, cycle_length: int | None = None) -> DivergenceReport:
    """Least-squares growth of the rate functional across cycle boundaries."""
    M = cycle_length or trajectory.cycle_length
    if len(trajectory) < 3 * M:
        raise TrajectoryTooShort(f"need at least {3 * M} records, got {len(trajectory)}")
    pts = [(l, r) for l, r in cycle_boundary_rates(trajectory, s, M) if l > TRANSIENT_CYCLES]
    if len(pts) < 2:
        raise TrajectoryTooShort("not enough cycle boundaries after the transient")
    ls = np.array([l for l, _ in pts], dtype=float)
    rs = np.array([r for _, r in pts], dtype=float)
    slope = float(np.polyfit(ls, rs, 1)[0])
    inc = np.diff(rs)
    frac = float(np.mean(inc > 0))
    return DivergenceReport(diverges=bool(slope > 0 and frac >= POSITIVE_FRACTION),
                            growth_exponent_per_cycle=slope,
                            positive_increment_fraction=frac, cycles_used=len(pts))


def burn_in(trajectory, window: int = 50) -> int | None:
    """First ``k`` after which ``window`` consecutive steps mark only the zero element."""
    streak_start = None
    for i, rec in enumerate(trajectory):
        only_zero = rec.marked.count == 1 and rec.marked.runs(0) and rec.marked.runs(0)[0][1] == 0
        if only_zero:
            if streak_start is None:
                streak_start = i
            if i - streak_start + 1 >= window:
                return trajectory[streak_start].k
        else:
            streak_start = None
    return None
