"""Selective Delaunay complexes as filtered simplicial complexes.

``Del_r(X, E)`` holds every simplex ``Q`` whose Delaunay sphere ``S(Q, E)``
exists and has squared radius at most ``r^2``.  ``E = {}`` gives the Cech
complex and ``E = X`` the Delaunay (alpha) complex.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .geometry import EPS, WeightedPointSet, smallest_sphere

logger = logging.getLogger(__name__)

Simplex = tuple[int, ...]
INF = math.inf


def simplex(vertices: Iterable[int]) -> Simplex:
    """Normalize a vertex collection into a simplex (sorted tuple, no duplicates)."""
    vs = tuple(sorted(int(v) for v in vertices))
    if not vs:
        raise ValueError("a simplex needs at least one vertex")
    if len(set(vs)) != len(vs):
        raise ValueError(f"duplicate vertices in {vs}")
    return vs


def facets(Q: Simplex) -> list[Simplex]:
    if len(Q) == 1:
        return []
    return [Q[:i] + Q[i + 1:] for i in range(len(Q))]


def dim(Q: Simplex) -> int:
    return len(Q) - 1


def filtration_key(value: float, Q: Simplex):
    return (value, len(Q), Q)


@dataclass(frozen=True)
class FilteredComplex:
    """An immutable simplicial complex with a value on every simplex.

    ``selective`` is the set ``E`` of the radius function the values come
    from; ``kind`` labels the construction (cech, delaunay, delcech,
    selective, wrap) and is used in file headers.
    """

    points: WeightedPointSet | None
    selective: frozenset[int]
    values: dict[Simplex, float]
    cap: float = INF
    kind: str = "selective"
    dim_hint: int | None = field(default=None, compare=False)

    def __contains__(self, Q) -> bool:
        return tuple(Q) in self.values

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[Simplex]:
        return iter(self.ordered())

    def get(self, Q: Iterable[int]) -> float | None:
        return self.values.get(tuple(sorted(Q)))

    def value(self, Q: Simplex) -> float:
        return self.values[Q]

    @property
    def ambient_dim(self) -> int | None:
        return self.points.dim if self.points is not None else self.dim_hint

    @property
    def dimension(self) -> int:
        return max((len(Q) - 1 for Q in self.values), default=-1)

    def ordered(self) -> list[Simplex]:
        """Simplices sorted by (value, dimension, lexicographic)."""
        return sorted(self.values, key=lambda Q: filtration_key(self.values[Q], Q))

    def simplices(self, k: int | None = None) -> set[Simplex]:
        if k is None:
            return set(self.values)
        return {Q for Q in self.values if len(Q) == k + 1}

    def f_vector(self) -> list[int]:
        counts = [0] * (self.dimension + 1)
        for Q in self.values:
            counts[len(Q) - 1] += 1
        return counts

    def restrict(self, sq_radius_cap: float, eps: float = EPS) -> "FilteredComplex":
        """Sublevel complex of simplices with value at most the cap."""
        vals = {Q: v for Q, v in self.values.items() if v <= sq_radius_cap + eps}
        return FilteredComplex(self.points, self.selective, vals, min(self.cap, sq_radius_cap), self.kind, self.dim_hint)

    def is_closed(self) -> bool:
        return all(F in self.values for Q in self.values for F in facets(Q))

    def is_monotone(self, tol: float = 1e-9) -> bool:
        return all(self.values[F] <= self.values[Q] + tol for Q in self.values for F in facets(Q))


def complex_contains(K: FilteredComplex, Q: Iterable[int]) -> float | None:
    """Value of ``Q`` in ``K``, or None if absent."""
    return K.get(Q)


def _candidates(level: list[Simplex], present: set[Simplex], m: int) -> list[Simplex]:
    out = []
    for sigma in level:
        for v in range(sigma[-1] + 1, m):
            tau = sigma + (v,)
            if all(F in present for F in facets(tau)):
                out.append(tau)
    return out


def build_selective_delaunay(
    X: WeightedPointSet,
    E: Iterable[int],
    sq_radius_cap: float = INF,
    max_dim: int | None = None,
    eps: float = EPS,
    threads: int = 1,
    kind: str = "selective",
) -> FilteredComplex:
    """``Del_r(X, E)`` with ``r^2 = sq_radius_cap``, values ``rho_E``.

    Simplices are explored dimension by dimension; a candidate is only solved
    once all of its facets are present.
    """
    E = frozenset(int(e) for e in E)
    m = len(X)
    top = m - 1 if max_dim is None else min(max_dim, m - 1)

    def value(Q: Simplex):
        cert = smallest_sphere(X, Q, E, eps)
        if cert is None or cert.sq_radius > sq_radius_cap + eps:
            return None
        return cert.sq_radius

    values: dict[Simplex, float] = {}
    level = [(v,) for v in range(m)]
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        k = 0
        while level and k <= top:
            results = list(pool.map(value, level)) if pool else [value(Q) for Q in level]
            kept = [Q for Q, s in zip(level, results) if s is not None]
            values.update((Q, s) for Q, s in zip(level, results) if s is not None)
            logger.debug("dimension %d: %d of %d candidates kept", k, len(kept), len(level))
            level = _candidates(kept, set(kept), m)
            k += 1
    finally:
        if pool:
            pool.shutdown()
    return FilteredComplex(X, E, values, sq_radius_cap, kind)


def build_cech(
    X: WeightedPointSet, sq_radius_cap: float = INF, max_dim: int | None = None, **kw
) -> FilteredComplex:
    return build_selective_delaunay(X, (), sq_radius_cap, max_dim, kind="cech", **kw)


def build_delaunay(
    X: WeightedPointSet, sq_radius_cap: float = INF, max_dim: int | None = None, **kw
) -> FilteredComplex:
    """Delaunay (alpha) complex.  Under general position no simplex exceeds dimension n."""
    top = X.dim if max_dim is None else max_dim
    return build_selective_delaunay(X, X.vertices, sq_radius_cap, top, kind="delaunay", **kw)


def build_delaunay_cech(
    X: WeightedPointSet, sq_radius_cap: float = INF, eps: float = EPS, **kw
) -> FilteredComplex:
    """Cech values on the simplices of the Delaunay triangulation."""
    tri = build_delaunay(X, INF, eps=eps, **kw)
    values = {}
    for Q in tri.values:
        s = smallest_sphere(X, Q, (), eps).sq_radius
        if s <= sq_radius_cap + eps:
            values[Q] = s
    return FilteredComplex(X, frozenset(), values, sq_radius_cap, "delcech")


def build_complex(
    kind: str,
    X: WeightedPointSet,
    sq_radius_cap: float = INF,
    E: Iterable[int] | None = None,
    max_dim: int | None = None,
    **kw,
) -> FilteredComplex:
    """Dispatch on the complex type name used by the CLI and file headers."""
    if kind == "cech":
        return build_cech(X, sq_radius_cap, max_dim, **kw)
    if kind == "delaunay":
        return build_delaunay(X, sq_radius_cap, max_dim, **kw)
    if kind == "delcech":
        return build_delaunay_cech(X, sq_radius_cap, **kw)
    if kind == "selective":
        if E is None:
            raise ValueError("selective complex needs E")
        return build_selective_delaunay(X, E, sq_radius_cap, max_dim, **kw)
    if kind == "wrap":
        from .wrap import wrap_complex

        return wrap_complex(X, sq_radius_cap, **kw)
    raise ValueError(f"unknown complex type {kind!r}")
