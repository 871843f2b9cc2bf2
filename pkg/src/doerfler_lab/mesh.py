"""Bisection refinements of the unit-cell partition of ``(0, M+1)``.

Elements are dyadic subintervals of a macro cell ``[m, m+1]`` identified by
``(macro, gen, offset)``; endpoints are derived with exact integer arithmetic
and never stored as floats.

Partitions are stored run-length compressed: within one macro cell the leaves
are kept as runs ``(gen, start, count)`` of consecutive leaves of equal
generation, sorted by position.  A cell that has been uniformly bisected
``l`` times is a single run, so partitions with ``2**400`` leaves are as
cheap as the initial one.

The lattice operations use the fact that for bisection trees in 1D the leaf
containing an interior point ``x`` has generation ``max(g_a(x), g_b(x))`` in
the join and ``min(g_a(x), g_b(x))`` in the meet.
"""

from __future__ import annotations

import bisect as _bisect
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

MAX_GENERATION = 4096

Run = tuple  # (gen, start, count)


class MeshError(ValueError):
    pass


class NotALeafError(MeshError):
    pass


class MacroMismatchError(MeshError):
    pass


class GenerationLimitError(MeshError):
    pass


@dataclass(frozen=True, order=True, slots=True)
class Element:
    """Closed interval ``[macro + offset*2**-gen, macro + (offset+1)*2**-gen]``.

    The dataclass ordering ``(macro, gen, offset)`` is the lexicographic
    tie-break order used by the markers; use :meth:`position_key` to sort by
    left endpoint.
    """

    macro: int
    gen: int
    offset: int

    def __post_init__(self):
        if self.macro < 0 or self.gen < 0:
            raise MeshError(f"invalid element {tuple(self)}")
        if not 0 <= self.offset < (1 << self.gen):
            raise MeshError(f"offset {self.offset} out of range for gen {self.gen}")

    def __iter__(self):
        yield self.macro
        yield self.gen
        yield self.offset

    @property
    def left(self) -> Fraction:
        return self.macro + Fraction(self.offset, 1 << self.gen)

    @property
    def right(self) -> Fraction:
        return self.macro + Fraction(self.offset + 1, 1 << self.gen)

    @property
    def length(self) -> Fraction:
        return Fraction(1, 1 << self.gen)

    def children(self) -> tuple["Element", "Element"]:
        g, o = self.gen + 1, 2 * self.offset
        return Element(self.macro, g, o), Element(self.macro, g, o + 1)

    def parent(self) -> "Element | None":
        if self.gen == 0:
            return None
        return Element(self.macro, self.gen - 1, self.offset >> 1)

    def contains(self, other: "Element") -> bool:
        """Whether ``other`` is a (non-strict) dyadic descendant of ``self``."""
        if other.macro != self.macro or other.gen < self.gen:
            return False
        return other.offset >> (other.gen - self.gen) == self.offset

    def position_key(self) -> tuple:
        return (self.macro, self.left)

    def __repr__(self):
        return f"Element({self.macro}, {self.gen}, {self.offset})"


def bisect(e: Element) -> tuple[Element, Element]:
    """The two halves of ``e``."""
    return e.children()


# -- run-list helpers ---------------------------------------------------------

def _run_span(run: Run, G: int) -> tuple[int, int]:
    g, s, c = run
    sh = G - g
    return s << sh, (s + c) << sh


def _max_gen(*run_lists: Sequence[Run]) -> int:
    return max((r[0] for runs in run_lists for r in runs), default=0)


def _push(out: list, run: Run) -> None:
    """Append ``run`` to ``out``, merging with a contiguous same-gen predecessor."""
    if run[2] <= 0:
        return
    if out:
        g, s, c = out[-1]
        if g == run[0] and s + c == run[1]:
            out[-1] = (g, s, c + run[2])
            return
    out.append(run)


def _canonical(runs: Iterable[Run]) -> tuple:
    runs = [r for r in runs if r[2] > 0]
    G = _max_gen(runs)
    runs.sort(key=lambda r: r[1] << (G - r[0]))
    out: list = []
    prev_hi = None
    for r in runs:
        lo, hi = _run_span(r, G)
        if prev_hi is not None and lo < prev_hi:
            raise MeshError("overlapping elements")
        prev_hi = hi
        _push(out, r)
    return tuple(out)


def _segments(a: Sequence[Run], b: Sequence[Run]):
    """Sweep two run lists; yield ``(lo, hi, ga, gb, G)`` on common refinements.

    ``ga``/``gb`` is ``None`` where the respective list does not cover.
    """
    G = _max_gen(a, b)
    pts = sorted({p for runs in (a, b) for r in runs for p in _run_span(r, G)})
    spans_a = [_run_span(r, G) for r in a]
    spans_b = [_run_span(r, G) for r in b]
    ia = ib = 0
    for lo, hi in zip(pts, pts[1:]):
        while ia < len(a) and spans_a[ia][1] <= lo:
            ia += 1
        while ib < len(b) and spans_b[ib][1] <= lo:
            ib += 1
        ga = a[ia][0] if ia < len(a) and spans_a[ia][0] <= lo else None
        gb = b[ib][0] if ib < len(b) and spans_b[ib][0] <= lo else None
        if ga is None and gb is None:
            continue
        yield lo, hi, ga, gb, G


def _from_segments(segs: Iterable[tuple[int, int, int, int]]) -> tuple:
    """Build a canonical run list from ``(lo, hi, gen, G)`` pieces in order."""
    out: list = []
    pending = None  # (lo, hi, gen, G) coalesced by gen
    def flush():
        lo, hi, g, G = pending
        sh = G - g
        if lo % (1 << sh) or hi % (1 << sh):
            raise MeshError("segment not aligned to its generation")
        _push(out, (g, lo >> sh, (hi - lo) >> sh))
    for seg in segs:
        if pending and pending[2] == seg[2] and pending[1] == seg[0]:
            pending = (pending[0], seg[1], pending[2], pending[3])
            continue
        if pending:
            flush()
        pending = seg
    if pending:
        flush()
    return tuple(out)


def _locate(runs: Sequence[Run], gen: int, offset: int) -> int:
    """Index of the run containing leaf ``(gen, offset)``, or -1."""
    # last run whose left endpoint is <= offset * 2**-gen
    lo, hi = 0, len(runs)
    while lo < hi:
        mid = (lo + hi) // 2
        g, s, _ = runs[mid]
        if (s << gen) <= (offset << g):
            lo = mid + 1
        else:
            hi = mid
    i = lo - 1
    if i < 0:
        return -1
    g, s, c = runs[i]
    if g == gen and s <= offset < s + c:
        return i
    return -1


# -- sets of elements ---------------------------------------------------------

class ElementSet:
    """Immutable set of pairwise non-overlapping elements over ``M+1`` macros.

    Iteration yields elements sorted by ``(macro, left endpoint)``.  The size
    can exceed machine integers; use :attr:`count` rather than ``len`` for
    huge sets.
    """

    __slots__ = ("M", "_runs", "_hash", "_count")

    def __init__(self, M: int, runs: Sequence[Sequence[Run]]):
        if len(runs) != M + 1:
            raise MeshError(f"expected {M + 1} macro run lists, got {len(runs)}")
        self.M = M
        self._runs = tuple(tuple(r) for r in runs)
        self._hash = None
        self._count = None

    @classmethod
    def empty(cls, M: int) -> "ElementSet":
        return cls(M, [()] * (M + 1))

    @classmethod
    def from_elements(cls, M: int, elements: Iterable[Element]) -> "ElementSet":
        per_macro: list[list[Run]] = [[] for _ in range(M + 1)]
        for e in elements:
            if not isinstance(e, Element):
                e = Element(*e)
            if e.macro > M:
                raise MeshError(f"{e} outside macros 0..{M}")
            per_macro[e.macro].append((e.gen, e.offset, 1))
        return cls(M, [_canonical(r) for r in per_macro])

    @classmethod
    def from_runs(cls, M: int, runs: dict[int, Iterable[Run]]) -> "ElementSet":
        per_macro = [_canonical(runs.get(m, ())) for m in range(M + 1)]
        return cls(M, per_macro)

    def runs(self, m: int) -> tuple:
        return self._runs[m]

    @property
    def count(self) -> int:
        if self._count is None:
            self._count = sum(c for runs in self._runs for _, _, c in runs)
        return self._count

    def __len__(self):
        return self.count

    def __bool__(self):
        return any(self._runs)

    def __iter__(self) -> Iterator[Element]:
        for m, runs in enumerate(self._runs):
            for g, s, c in runs:
                for o in range(s, s + c):
                    yield Element(m, g, o)

    def __contains__(self, e) -> bool:
        if not isinstance(e, Element):
            return False
        if e.macro > self.M:
            return False
        return _locate(self._runs[e.macro], e.gen, e.offset) >= 0

    def __eq__(self, other):
        if not isinstance(other, ElementSet):
            return NotImplemented
        return self.M == other.M and self._runs == other._runs

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.M, self._runs))
        return self._hash

    def issubset(self, other: "ElementSet") -> bool:
        if self.M != other.M:
            return False
        for m, runs in enumerate(self._runs):
            theirs = other._runs[m]
            for g, s, c in runs:
                i = _locate(theirs, g, s)
                if i < 0 or s + c > theirs[i][1] + theirs[i][2]:
                    return False
        return True

    def union(self, other: "ElementSet") -> "ElementSet":
        _check_same_M(self, other)
        return ElementSet(self.M, [
            _canonical(a + b) for a, b in zip(self._runs, other._runs)])

    def restrict(self, m: int) -> "ElementSet":
        """Elements of macro ``m`` only."""
        runs = [()] * (self.M + 1)
        runs[m] = self._runs[m]
        return ElementSet(self.M, runs)

    def gen_counts(self, m: int) -> dict[int, int]:
        out: dict[int, int] = {}
        for g, _, c in self._runs[m]:
            out[g] = out.get(g, 0) + c
        return out

    def to_json(self) -> list:
        return [[e.macro, e.gen, e.offset] for e in self]

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))

    @classmethod
    def from_json(cls, M: int, triples: list) -> "ElementSet":
        return cls.from_elements(M, (Element(*t) for t in triples))

    def __repr__(self):
        if self.count <= 12:
            return f"{type(self).__name__}(M={self.M}, {list(self)})"
        return f"{type(self).__name__}(M={self.M}, count={self.count})"


MarkedSet = ElementSet


def _check_same_M(a: ElementSet, b: ElementSet) -> None:
    if a.M != b.M:
        raise MacroMismatchError(f"macro counts differ: {a.M} vs {b.M}")


class Partition(ElementSet):
    """A bisection refinement of ``{[0,1], [1,2], ..., [M, M+1]}``."""

    __slots__ = ()

    @classmethod
    def initial(cls, M: int) -> "Partition":
        if M < 1:
            raise MeshError("need M >= 1 macro cells beyond [0, 1]")
        return cls(M, [((0, 0, 1),)] * (M + 1))

    @classmethod
    def from_elements(cls, M: int, elements: Iterable[Element]) -> "Partition":
        es = ElementSet.from_elements(M, elements)
        t = cls(M, es._runs)
        t.validate()
        return t

    @classmethod
    def from_json(cls, M: int, triples: list) -> "Partition":
        return cls.from_elements(M, (Element(*t) for t in triples))

    @classmethod
    def loads(cls, text: str) -> "Partition":
        triples = json.loads(text)
        M = max(t[0] for t in triples)
        return cls.from_json(M, triples)

    def validate(self) -> None:
        """Check the tiling invariant exactly: every macro is covered once."""
        for m, runs in enumerate(self._runs):
            G = _max_gen(runs)
            pos = 0
            for r in runs:
                lo, hi = _run_span(r, G)
                if lo != pos:
                    raise MeshError(f"macro {m} is not tiled at {Fraction(lo, 1 << G)}")
                pos = hi
            if pos != 1 << G:
                raise MeshError(f"macro {m} is not fully covered")

    # -- basic queries --

    @property
    def zero_element(self) -> Element:
        g, s, _ = self._runs[0][0]
        return Element(0, g, s)

    @property
    def g0(self) -> int:
        return self._runs[0][0][0]

    @property
    def max_generation(self) -> int:
        return _max_gen(*self._runs)

    def leaves_in_cell(self, m: int) -> ElementSet:
        if not 1 <= m <= self.M:
            raise MeshError(f"unit cell index {m} outside 1..{self.M}")
        return self.restrict(m)

    def generation_at(self, m: int, x: Fraction) -> int:
        """Generation of the leaf containing interior point ``m + x``."""
        for g, s, c in self._runs[m]:
            if Fraction(s, 1 << g) <= x < Fraction(s + c, 1 << g):
                return g
        raise MeshError(f"point {m + x} not covered")

    # -- refinement --

    def refine(self, marked: ElementSet, max_gen: int = MAX_GENERATION) -> "Partition":
        """``(self \\ marked) ∪ bisect(marked)``."""
        _check_same_M(self, marked)
        new_runs = list(self._runs)
        for m, mruns in enumerate(marked._runs):
            if mruns:
                new_runs[m] = _refine_runs(self._runs[m], mruns, m, max_gen)
        return Partition(self.M, new_runs)

    # -- lattice --

    def meet(self, other: "Partition") -> "Partition":
        """Finest common coarsening."""
        return self._combine(other, min)

    def join(self, other: "Partition") -> "Partition":
        """Coarsest common refinement."""
        return self._combine(other, max)

    def _combine(self, other: "Partition", pick) -> "Partition":
        _check_same_M(self, other)
        out = []
        for a, b in zip(self._runs, other._runs):
            if a == b:
                out.append(a)
            else:
                out.append(_from_segments(
                    (lo, hi, pick(ga, gb), G) for lo, hi, ga, gb, G in _segments(a, b)))
        return Partition(self.M, out)

    def refines(self, other: "Partition") -> bool:
        """``other <= self``: every leaf of ``self`` lies inside a leaf of ``other``."""
        _check_same_M(self, other)
        for a, b in zip(self._runs, other._runs):
            if a == b:
                continue
            for _, _, ga, gb, _ in _segments(a, b):
                if ga < gb:
                    return False
        return True

    def difference(self, other: ElementSet) -> ElementSet:
        """Leaves of ``self`` that are not leaves of ``other``."""
        _check_same_M(self, other)
        out = []
        for a, b in zip(self._runs, other._runs):
            if a == b:
                out.append(())
            else:
                out.append(_from_segments(
                    (lo, hi, ga, G) for lo, hi, ga, gb, G in _segments(a, b)
                    if ga is not None and ga != gb))
        return ElementSet(self.M, out)

    def common(self, other: "Partition") -> ElementSet:
        """Leaves shared by ``self`` and ``other``."""
        _check_same_M(self, other)
        out = []
        for a, b in zip(self._runs, other._runs):
            if a == b:
                out.append(a)
            else:
                out.append(_from_segments(
                    (lo, hi, ga, G) for lo, hi, ga, gb, G in _segments(a, b)
                    if ga is not None and ga == gb))
        return ElementSet(self.M, out)

    def uniform_refine(self, times: int = 1) -> "Partition":
        t = self
        for _ in range(times):
            t = t.refine(t)
        return t


def _refine_runs(truns: tuple, mruns: tuple, m: int, max_gen: int) -> tuple:
    # group marked runs by the partition run that contains them
    hits: dict[int, list] = {}
    for g, s, c in mruns:
        i = _locate(truns, g, s)
        if i < 0 or s + c > truns[i][1] + truns[i][2]:
            raise NotALeafError(f"marked element {Element(m, g, s)} is not a leaf")
        if g + 1 > max_gen:
            raise GenerationLimitError(f"generation {g + 1} exceeds limit {max_gen}")
        hits.setdefault(i, []).append((g, s, c))
    out: list = []
    prev = 0
    for i in sorted(hits):
        if prev < i:
            _push(out, truns[prev])
            out.extend(truns[prev + 1:i])
        g, S, C = truns[i]
        pos = S
        for _, s, c in hits[i]:
            _push(out, (g, pos, s - pos))
            _push(out, (g + 1, 2 * s, 2 * c))
            pos = s + c
        _push(out, (g, pos, S + C - pos))
        prev = i + 1
    if prev < len(truns):
        _push(out, truns[prev])
        out.extend(truns[prev + 1:])
    return tuple(out)


# -- functional surface -------------------------------------------------------

def initial_partition(M: int) -> Partition:
    return Partition.initial(M)


def refine(t: Partition, marked: ElementSet, max_gen: int = MAX_GENERATION) -> Partition:
    return t.refine(marked, max_gen=max_gen)


def meet(a: Partition, b: Partition) -> Partition:
    return a.meet(b)


def join(a: Partition, b: Partition) -> Partition:
    return a.join(b)


def is_refinement(a: Partition, b: Partition) -> bool:
    """True iff ``b <= a``."""
    return a.refines(b)


def zero_element(t: Partition) -> Element:
    return t.zero_element


def g0(t: Partition) -> int:
    return t.g0


def leaves_in_unit_interval(t: Partition, m: int) -> ElementSet:
    return t.leaves_in_cell(m)
