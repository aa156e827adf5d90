"""Persistent homology over Z/2 by boundary-matrix reduction.

Columns are Python integers used as bitsets; row ``i`` is bit ``i`` in the
filtration order (value, dimension, lexicographic).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .complexes import FilteredComplex, Simplex, facets

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class Bar:
    dim: int
    birth: float
    death: float

    @property
    def length(self) -> float:
        return self.death - self.birth

    def alive(self, t: float) -> bool:
        return self.birth <= t < self.death


@dataclass
class Barcode:
    bars: list[Bar]
    zero_length: list[Bar] = field(default_factory=list)

    def __post_init__(self):
        self.bars = sorted(self.bars)

    def __len__(self) -> int:
        return len(self.bars)

    def __iter__(self):
        return iter(self.bars)

    def in_dim(self, k: int) -> list[Bar]:
        return [b for b in self.bars if b.dim == k]

    def betti(self, t: float) -> list[int]:
        top = max((b.dim for b in self.bars), default=-1)
        out = [0] * (top + 1)
        for b in self.bars:
            if b.alive(t):
                out[b.dim] += 1
        return out


def _zero(a: float, b: float, tol: float) -> bool:
    return abs(b - a) <= tol * max(1.0, abs(a))


def boundary_columns(order: Sequence[Simplex]) -> list[int]:
    pos = {Q: i for i, Q in enumerate(order)}
    cols = []
    for Q in order:
        c = 0
        for F in facets(Q):
            c |= 1 << pos[F]
        cols.append(c)
    return cols


def reduce_columns(cols: list[int]) -> list[tuple[int, int]]:
    """Standard left-to-right reduction; returns (birth index, death index) pairs."""
    owner: dict[int, int] = {}
    reduced = list(cols)
    pairs = []
    for j in range(len(reduced)):
        c = reduced[j]
        while c:
            low = c.bit_length() - 1
            k = owner.get(low)
            if k is None:
                owner[low] = j
                pairs.append((low, j))
                break
            c ^= reduced[k]
        reduced[j] = c
    return pairs


def compute_barcode(K: FilteredComplex, keep_zero: bool = False, tol: float = 1e-9) -> Barcode:
    """Barcode of the sublevel filtration of ``K``.

    Bars of length zero (a facet and cofacet entering at one value) are moved
    to ``zero_length`` unless ``keep_zero`` is set.
    """
    order = K.ordered()
    vals = [K.values[Q] for Q in order]
    pairs = reduce_columns(boundary_columns(order))
    paired = set()
    bars, zero = [], []
    for i, j in pairs:
        paired.add(i)
        paired.add(j)
        bar = Bar(len(order[i]) - 1, vals[i], vals[j])
        (bars if keep_zero or not _zero(vals[i], vals[j], tol) else zero).append(bar)
    for i, Q in enumerate(order):
        if i not in paired:
            bars.append(Bar(len(Q) - 1, vals[i], math.inf))
    if zero:
        logger.debug("discarded %d zero-length bars", len(zero))
    return Barcode(bars, zero)


@dataclass
class BarcodeComparison:
    ok: bool
    diff: list[tuple[int, Bar]]
    barcodes: list[Barcode]

    def __bool__(self) -> bool:
        return self.ok


def _same_value(a: float, b: float, tol: float) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= tol * max(1.0, abs(a))


def _unmatched(A: Sequence[Bar], B: Sequence[Bar], tol: float) -> tuple[list[Bar], list[Bar]]:
    rest = list(B)
    left = []
    for a in A:
        for i, b in enumerate(rest):
            if a.dim == b.dim and _same_value(a.birth, b.birth, tol) and _same_value(a.death, b.death, tol):
                del rest[i]
                break
        else:
            left.append(a)
    return left, rest


def compare_barcodes(filtrations: Sequence[FilteredComplex | Barcode], tol: float = 1e-9) -> BarcodeComparison:
    """Multiset equality of all barcodes against the first one.

    ``diff`` holds (index of filtration, bar) for every bar without a partner;
    bars missing from the first barcode are reported under index 0.
    """
    codes = [f if isinstance(f, Barcode) else compute_barcode(f, tol=tol) for f in filtrations]
    diff = []
    for k, code in enumerate(codes[1:], start=1):
        only_first, only_here = _unmatched(codes[0].bars, code.bars, tol)
        diff += [(0, b) for b in only_first] + [(k, b) for b in only_here]
    return BarcodeComparison(not diff, diff, codes)


# -- rank oracles ----------------------------------------------------------------------


def _rank(vectors: Iterable[int]) -> int:
    basis: dict[int, int] = {}
    for v in vectors:
        while v:
            low = v.bit_length() - 1
            if low not in basis:
                basis[low] = v
                break
            v ^= basis[low]
    return len(basis)


def _boundary_in(simplices: Iterable[Simplex], k: int, index: dict[Simplex, int]) -> list[int]:
    cols = []
    for Q in simplices:
        if len(Q) == k + 1:
            c = 0
            for F in facets(Q):
                c |= 1 << index[F]
            cols.append(c)
    return cols


def _dim_index(simplices: Iterable[Simplex], k: int) -> dict[Simplex, int]:
    return {Q: i for i, Q in enumerate(sorted(Q for Q in simplices if len(Q) == k + 1))}


def betti_numbers(simplices: Iterable[Simplex]) -> list[int]:
    """Betti numbers over Z/2 from ranks of boundary matrices, trailing zeros dropped."""
    S = set(simplices)
    top = max((len(Q) - 1 for Q in S), default=-1)
    idx = [_dim_index(S, k) for k in range(top + 1)]
    rank = [0] * (top + 2)
    for k in range(1, top + 1):
        rank[k] = _rank(_boundary_in(S, k, idx[k - 1]))
    betti = [len(idx[k]) - rank[k] - rank[k + 1] for k in range(top + 1)]
    while betti and betti[-1] == 0:
        betti.pop()
    return betti


def euler_characteristic(simplices: Iterable[Simplex]) -> int:
    return sum((-1) ** (len(Q) - 1) for Q in simplices)


def _cycle_basis(simplices: set[Simplex], k: int, index: dict[Simplex, int]) -> list[int]:
    """Basis of k-cycles of ``simplices``, written in the coordinates ``index``."""
    chains = sorted(Q for Q in simplices if len(Q) == k + 1)
    if k == 0:
        return [1 << index[Q] for Q in chains]
    low_index = _dim_index(simplices, k - 1)
    basis: dict[int, tuple[int, int]] = {}
    cycles = []
    for Q in chains:
        b = 0
        for F in facets(Q):
            b |= 1 << low_index[F]
        track = 1 << index[Q]
        while b:
            low = b.bit_length() - 1
            if low not in basis:
                basis[low] = (b, track)
                break
            b ^= basis[low][0]
            track ^= basis[low][1]
        if not b:
            cycles.append(track)
    return cycles


def induced_map_rank(sub: Iterable[Simplex], sup: Iterable[Simplex], k: int) -> int:
    """Rank of ``H_k(sub) -> H_k(sup)`` induced by inclusion."""
    A, B = set(sub), set(sup)
    if not A <= B:
        raise ValueError("first complex is not a subcomplex of the second")
    index = _dim_index(B, k)
    boundaries = _boundary_in(B, k + 1, index)
    cycles = _cycle_basis(A, k, index)
    return _rank(boundaries + cycles) - _rank(boundaries)


def inclusion_is_isomorphism(sub: Iterable[Simplex], sup: Iterable[Simplex]) -> bool:
    A, B = set(sub), set(sup)
    ba, bb = betti_numbers(A), betti_numbers(B)
    top = max(len(ba), len(bb))
    ba += [0] * (top - len(ba))
    bb += [0] * (top - len(bb))
    return ba == bb and all(induced_map_rank(A, B, k) == ba[k] for k in range(top))
