"""Wrap complexes: lower sets of the critical intervals of the Delaunay gradient."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .complexes import INF, FilteredComplex, build_delaunay, facets
from .geometry import EPS, WeightedPointSet
from .morse import GeneralizedVectorField, radius_gradient


@dataclass
class IntervalDigraph:
    """Arc ``(mu, nu)`` whenever some simplex of ``mu`` is a face of one in ``nu``."""

    field: GeneralizedVectorField
    nodes: list[int]
    arcs: set[tuple[int, int]]

    def predecessors(self) -> dict[int, list[int]]:
        pred: dict[int, list[int]] = {v: [] for v in self.nodes}
        for a, b in sorted(self.arcs):
            pred[b].append(a)
        return pred

    def is_acyclic(self) -> bool:
        from graphlib import CycleError, TopologicalSorter

        try:
            tuple(TopologicalSorter(self.predecessors()).static_order())
        except CycleError:
            return False
        return True


def build_interval_digraph(VX: GeneralizedVectorField) -> IntervalDigraph:
    arcs = set()
    for Q, i in VX.index.items():
        for F in facets(Q):
            j = VX.index[F]
            if j != i:
                arcs.add((j, i))
    return IntervalDigraph(VX, list(range(len(VX.intervals))), arcs)


def lower_sets(G: IntervalDigraph, seeds: list[int]) -> dict[int, int]:
    """Map each interval reachable backwards from ``seeds`` to the first seed reaching it.

    Seeds are processed in the given order, so with seeds sorted by value the
    recorded seed is the one of smallest value.
    """
    pred = G.predecessors()
    owner: dict[int, int] = {}
    for s in seeds:
        if s in owner:
            continue
        owner[s] = s
        todo = deque([s])
        while todo:
            v = todo.popleft()
            for u in pred[v]:
                if u not in owner:
                    owner[u] = s
                    todo.append(u)
    return owner


def wrap_complex(X: WeightedPointSet, sq_radius_cap: float = INF, eps: float = EPS, **kw) -> FilteredComplex:
    """``Wrap_r(X)`` as a filtered complex.

    A simplex enters the Wrap filtration at the smallest value of a critical
    simplex whose lower set contains it, so sublevel sets of the stored
    values are exactly the Wrap complexes at smaller radii.
    """
    K = build_delaunay(X, sq_radius_cap, eps=eps, **kw)
    VX = radius_gradient(X, X.vertices, K, eps)
    G = build_interval_digraph(VX)
    singular = [i for i, iv in enumerate(VX.intervals) if iv.singular]
    singular.sort(key=lambda i: (VX.value(i), VX.intervals[i]))
    owner = lower_sets(G, singular)
    values = {}
    for i, s in owner.items():
        for Q in VX.intervals[i].members():
            values[Q] = VX.value(s)
    return FilteredComplex(X, frozenset(X.vertices), values, sq_radius_cap, "wrap")
