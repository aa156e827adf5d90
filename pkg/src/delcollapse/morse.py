"""Generalized discrete gradients of radius functions.

A generalized discrete vector field partitions a complex into intervals
``[P, R] = {Q : P <= Q <= R}``.  For the radius function ``rho_E`` every
Delaunay sphere ``S`` contributes the interval ``[Front(S), Incl(S)]``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Hashable, Iterable, Mapping, NamedTuple, Sequence

from .complexes import FilteredComplex, Simplex, facets
from .geometry import EPS, DegenerateInput, WeightedPointSet, smallest_sphere


class PreconditionViolated(ValueError):
    pass


class Interval(NamedTuple):
    lower: Simplex
    upper: Simplex

    @property
    def singular(self) -> bool:
        return self.lower == self.upper

    @property
    def free(self) -> tuple[int, ...]:
        low = set(self.lower)
        return tuple(v for v in self.upper if v not in low)

    def __contains__(self, Q) -> bool:
        Q = set(Q)
        return set(self.lower) <= Q <= set(self.upper)

    def members(self) -> list[Simplex]:
        free = self.free
        out = []
        for k in range(len(free) + 1):
            for extra in itertools.combinations(free, k):
                out.append(tuple(sorted(self.lower + extra)))
        return out

    def __len__(self) -> int:
        return 2 ** len(self.free)


@dataclass
class GeneralizedVectorField:
    complex: FilteredComplex
    intervals: list[Interval]
    index: dict[Simplex, int] = field(default_factory=dict)

    def interval_of(self, Q: Simplex) -> Interval:
        return self.intervals[self.index[Q]]

    def value(self, i: int) -> float:
        return self.complex.values[self.intervals[i].lower]


@dataclass
class DiscreteGradient:
    """Facet-cofacet pairs plus critical simplices; together they partition a complex."""

    pairs: list[tuple[Simplex, Simplex]]
    critical: list[Simplex]

    @property
    def simplices(self) -> set[Simplex]:
        out = set(self.critical)
        for a, b in self.pairs:
            out.add(a)
            out.add(b)
        return out


def sphere_interval(X: WeightedPointSet, Q: Simplex, E: Iterable[int], eps: float = EPS) -> Interval:
    """``[Front(S), Incl(S)]`` for ``S = S(Q, E)``."""
    cert = smallest_sphere(X, Q, E, eps)
    if cert is None:
        raise ValueError(f"{Q} has no Delaunay sphere for E={sorted(E)}")
    return Interval(tuple(sorted(cert.front)), tuple(sorted(cert.incl_set)))


def radius_intervals(
    X: WeightedPointSet, E: Iterable[int], simplices: Iterable[Simplex], eps: float = EPS
) -> dict[Simplex, Interval]:
    """Unclipped gradient interval of ``rho_E`` for each simplex."""
    E = frozenset(E)
    return {Q: sphere_interval(X, Q, E, eps) for Q in simplices}


def radius_gradient(X: WeightedPointSet, E: Iterable[int], K: FilteredComplex, eps: float = EPS) -> GeneralizedVectorField:
    """Gradient of ``rho_E`` on ``K = Del_r(X, E)``."""
    E = frozenset(E)
    intervals: list[Interval] = []
    index: dict[Simplex, int] = {}
    for Q in K.ordered():
        if Q in index:
            continue
        iv = sphere_interval(X, Q, E, eps)
        if Q not in iv:
            raise DegenerateInput(f"{Q} not in its own interval {iv}")
        for P in iv.members():
            if P not in K:
                raise ValueError(f"interval {iv} of {Q} leaves the complex at {P}; is it dimension-truncated?")
            if P in index:
                raise DegenerateInput(f"{P} lies in two intervals: {intervals[index[P]]} and {iv}")
            index[P] = len(intervals)
        intervals.append(iv)
    return GeneralizedVectorField(K, intervals, index)


def _contracted_acyclic(simplices: Iterable[Simplex], node: Mapping[Simplex, Hashable]) -> bool:
    """No directed cycle in the Hasse diagram after contracting each node class."""
    graph: dict[Hashable, set] = {}
    for Q in simplices:
        nq = node[Q]
        graph.setdefault(nq, set())
        for F in facets(Q):
            nf = node[F]
            if nf != nq:
                graph[nq].add(nf)
    try:
        tuple(TopologicalSorter(graph).static_order())
    except CycleError:
        return False
    return True


def _is_partition(intervals: Sequence[Interval], simplices: set[Simplex], index: Mapping[Simplex, int]) -> bool:
    seen = 0
    for i, iv in enumerate(intervals):
        for P in iv.members():
            if P not in simplices or index.get(P) != i:
                return False
            seen += 1
    return seen == len(simplices)


def is_generalized_morse(K: FilteredComplex, W: GeneralizedVectorField, tol: float = 1e-9) -> bool:
    """Values weakly increase along faces, with equality exactly within intervals, and W is acyclic."""
    if not _is_partition(W.intervals, set(K.values), W.index):
        return False
    vals = K.values
    for Q in vals:
        for F in facets(Q):
            same = W.index[F] == W.index[Q]
            diff = vals[Q] - vals[F]
            if same and abs(diff) > tol:
                return False
            if not same and diff <= tol:
                return False
    return _contracted_acyclic(vals, W.index)


def vertex_refine(W: GeneralizedVectorField, order: Sequence[int] | None = None) -> DiscreteGradient:
    """Split every non-singular interval into pairs along its first free vertex."""
    rank = None if order is None else {v: i for i, v in enumerate(order)}
    pairs, critical = [], []
    for iv in W.intervals:
        if iv.singular:
            critical.append(iv.lower)
        else:
            pairs.extend(refine_interval(iv, rank))
    return DiscreteGradient(pairs, critical)


def refine_interval(iv: Interval, rank: Mapping[int, int] | None = None) -> list[tuple[Simplex, Simplex]]:
    free = iv.free
    x = min(free, key=(lambda v: rank[v]) if rank else None)
    out = []
    for Q in iv.members():
        if x not in Q:
            out.append((Q, tuple(sorted(Q + (x,)))))
    return out


def critical_simplices(W: GeneralizedVectorField) -> list[tuple[Simplex, float]]:
    vals = W.complex.values
    crit = [(iv.lower, vals[iv.lower]) for iv in W.intervals if iv.singular]
    return sorted(crit, key=lambda t: (t[1], len(t[0]), t[0]))


def compose_gradients(V0: DiscreteGradient, V1: DiscreteGradient) -> DiscreteGradient:
    """Gradient on the complex of ``V1`` with pairs from both, given V1's pairs avoid V0's complex."""
    K0, K1 = V0.simplices, V1.simplices
    if not K0 <= K1:
        raise PreconditionViolated("complex of V0 is not contained in complex of V1")
    for a, b in V1.pairs:
        if a in K0 or b in K0:
            raise PreconditionViolated(f"pair ({a}, {b}) of V1 meets the complex of V0")
    pairs = list(V0.pairs) + list(V1.pairs)
    paired = {s for p in pairs for s in p}
    return DiscreteGradient(pairs, sorted(K1 - paired, key=lambda Q: (len(Q), Q)))


def _interval_lookup(W, Q: Simplex) -> Interval:
    if isinstance(W, GeneralizedVectorField):
        return W.interval_of(Q)
    return W[Q]


def sum_refinement(WE, WF, K: FilteredComplex) -> GeneralizedVectorField:
    """Common refinement ``{I & J != {}}`` of two gradients, restricted to ``K``.

    ``WE`` and ``WF`` are fields or mappings from simplices to their intervals;
    intersections of intervals are intervals ``[P1 | P2, R1 & R2]``.
    """
    groups: dict[tuple[Interval, Interval], list[Simplex]] = {}
    for Q in K.ordered():
        groups.setdefault((_interval_lookup(WE, Q), _interval_lookup(WF, Q)), []).append(Q)
    intervals, index = [], {}
    for (I, J), members in groups.items():
        iv = Interval(tuple(sorted(set(I.lower) | set(J.lower))), tuple(sorted(set(I.upper) & set(J.upper))))
        if set(iv.members()) != set(members):
            raise DegenerateInput(f"intersection of {I} and {J} is not the interval {iv} within the complex")
        for P in members:
            index[P] = len(intervals)
        intervals.append(iv)
    return GeneralizedVectorField(K, intervals, index)


def is_gradient(V: DiscreteGradient, K: FilteredComplex | Iterable[Simplex] | None = None) -> bool:
    """True iff V partitions K into facet-cofacet pairs and singletons without closed V-paths."""
    simplices = set(K.values) if isinstance(K, FilteredComplex) else (V.simplices if K is None else set(K))
    node: dict[Simplex, Simplex] = {}
    for Q in V.critical:
        if Q in node:
            return False
        node[Q] = Q
    for a, b in V.pairs:
        if len(b) != len(a) + 1 or not set(a) < set(b):
            return False
        if a in node or b in node:
            return False
        node[a] = node[b] = b
    if set(node) != simplices:
        return False
    if any(F not in simplices for Q in simplices for F in facets(Q)):
        return False
    return _contracted_acyclic(simplices, node)
