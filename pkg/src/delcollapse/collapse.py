"""Explicit collapses Cech_r -> DelCech_r -> Del_r -> Wrap_r and their replay check.

Two collapse steps connect ``Del_r(X, E)`` to ``Del_r(X, F)`` for ``E <= F``:

1. ``Del_r(X, E) -> Del_r(X, E) & Del(X, F)`` removes the pairs
   ``{Q - g(Q), Q + g(Q)}`` of the consistent pairing map ``g``;
2. ``Del_r(X, E) & Del(X, F) -> Del_r(X, F)`` removes vertex-refined
   intervals of the common refinement of the ``rho_E`` and ``rho_F``
   gradients.

``Del_r(X) -> Wrap_r(X)`` removes the refined non-singular Delaunay intervals
outside the lower sets of critical simplices.
"""
from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .complexes import INF, FilteredComplex, Simplex, build_cech, build_delaunay, build_selective_delaunay, facets
from .geometry import EPS, DegenerateInput, WeightedPointSet, check_general_position, smallest_sphere
from .morse import (
    DiscreteGradient,
    GeneralizedVectorField,
    radius_gradient,
    radius_intervals,
    refine_interval,
    sum_refinement,
)
from .wrap import wrap_complex

logger = logging.getLogger(__name__)

Pair = tuple[Simplex, Simplex]


class CollapseError(RuntimeError):
    """Pairs that cannot be ordered into elementary collapses."""


@dataclass(frozen=True)
class CollapseStep:
    facet: Simplex
    cofacet: Simplex
    value: float


@dataclass
class CollapseSequence:
    source: str
    target: str
    steps: list[CollapseStep]
    start: FilteredComplex | None = field(default=None, repr=False)

    def pairs(self) -> list[Pair]:
        return [(s.facet, s.cofacet) for s in self.steps]

    def __len__(self) -> int:
        return len(self.steps)

    def then(self, other: "CollapseSequence") -> "CollapseSequence":
        return CollapseSequence(self.source, other.target, self.steps + other.steps, self.start)


@dataclass
class ReplayReport:
    ok: bool
    step: int | None = None
    message: str = ""
    offending: list[Simplex] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def _simplex_set(K) -> set[Simplex]:
    return set(K.values) if isinstance(K, FilteredComplex) else set(K)


def verify_collapse(K, seq: CollapseSequence | Sequence[Pair], K_target) -> ReplayReport:
    """Replay ``seq`` on a copy of ``K`` and compare the result with ``K_target``.

    Each step must remove a facet whose only remaining cofacet is the paired
    cofacet, and that cofacet must be maximal.
    """
    current = _simplex_set(K)
    target = _simplex_set(K_target)
    pairs = seq.pairs() if isinstance(seq, CollapseSequence) else list(seq)
    verts = sorted({v for Q in current for v in Q})

    def cofacets(Q):
        out = []
        for v in verts:
            if v not in Q:
                C = tuple(sorted(Q + (v,)))
                if C in current:
                    out.append(C)
        return out

    for k, (a, b) in enumerate(pairs):
        if a not in current or b not in current:
            return ReplayReport(False, k, f"step {k}: ({a}, {b}) not both present", [s for s in (a, b) if s not in current])
        if len(b) != len(a) + 1 or not set(a) < set(b):
            return ReplayReport(False, k, f"step {k}: {a} is not a facet of {b}")
        up_b = cofacets(b)
        if up_b:
            return ReplayReport(False, k, f"step {k}: {b} is not maximal", up_b)
        up_a = cofacets(a)
        if up_a != [b]:
            return ReplayReport(False, k, f"step {k}: {a} is not free, cofacets {up_a}", up_a)
        current.discard(a)
        current.discard(b)
    if current != target:
        extra, missing = sorted(current - target), sorted(target - current)
        return ReplayReport(False, None, f"final complex differs: {len(extra)} extra, {len(missing)} missing", extra + missing)
    return ReplayReport(True)


def schedule_collapse(
    simplices: Iterable[Simplex],
    pairs: Sequence[Pair],
    priority: Callable[[Pair], tuple],
) -> list[Pair]:
    """Order ``pairs`` into valid elementary collapses of ``simplices``.

    Among the pairs whose removal is currently legal, the one with the
    smallest ``priority`` goes first.  Raises CollapseError if the pairs do not
    form an acyclic matching of a difference ``K - K'`` with ``K'`` a
    subcomplex.
    """
    simplices = set(simplices)
    owner: dict[Simplex, int] = {}
    for i, (a, b) in enumerate(pairs):
        owner[a] = owner[b] = i
    verts = sorted({v for Q in simplices for v in Q})
    after: list[list[int]] = [[] for _ in pairs]
    indeg = [0] * len(pairs)
    for i, (a, b) in enumerate(pairs):
        before = set()
        for Q in (a, b):
            for v in verts:
                if v in Q:
                    continue
                C = tuple(sorted(Q + (v,)))
                if C == b or C not in simplices:
                    continue
                j = owner.get(C)
                if j is None:
                    raise CollapseError(f"{C} is kept but is a coface of {Q}")
                before.add(j)
        before.discard(i)
        indeg[i] = len(before)
        for j in before:
            after[j].append(i)
    heap = [(priority(p), i) for i, p in enumerate(pairs) if indeg[i] == 0]
    heapq.heapify(heap)
    out = []
    while heap:
        _, i = heapq.heappop(heap)
        out.append(pairs[i])
        for j in after[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(heap, (priority(pairs[j]), j))
    if len(out) != len(pairs):
        raise CollapseError(f"{len(pairs) - len(out)} pairs lie on closed paths")
    return out


def _revlex(Q: Simplex) -> tuple:
    return tuple(-v for v in Q)


@dataclass
class PairingAssignment:
    """The consistent pairing map ``g`` on ``Del(X, E) - Del(X, F)``."""

    E: frozenset[int]
    F: frozenset[int]
    g: dict[Simplex, int]

    def pairs(self) -> list[Pair]:
        out = set()
        for Q, x in self.g.items():
            lo = tuple(v for v in Q if v != x)
            hi = tuple(sorted(set(Q) | {x}))
            out.add((lo, hi))
        return sorted(out, key=lambda p: (len(p[0]), p))

    def __len__(self) -> int:
        return len(self.g)


def pairing_map(
    X: WeightedPointSet,
    E: Iterable[int],
    F: Iterable[int],
    domain: Iterable[Simplex] | None = None,
    eps: float = EPS,
) -> PairingAssignment:
    """``g(Q)``: the first vertex ``x_j`` (in vertex order) whose exclusion kills ``Q``.

    Starting from ``A = F & Excl(S(Q, E))``, the vertices of ``F`` are added to
    ``A`` in order; ``g(Q)`` is the first one after which ``Q`` has no sphere.
    """
    E, F = frozenset(E), frozenset(F)
    if not E <= F:
        raise ValueError("pairing needs E <= F")
    if domain is None:
        big = build_selective_delaunay(X, E, INF, eps=eps)
        small = build_selective_delaunay(X, F, INF, eps=eps)
        domain = [Q for Q in big.ordered() if Q not in small]
    g = {}
    for Q in domain:
        cert = smallest_sphere(X, Q, E, eps)
        if cert is None:
            raise ValueError(f"{Q} is not in Del(X, E)")
        A = set(F & cert.excl_set)
        for x in X.vertices:
            if x not in F or x in A:
                continue
            if smallest_sphere(X, Q, A | {x}, eps) is None:
                g[Q] = x
                break
            A.add(x)
        else:
            raise ValueError(f"{Q} lies in Del(X, F)")
    return PairingAssignment(E, F, g)


def same_sphere(X: WeightedPointSet, P: Simplex, Q: Simplex, E: Iterable[int], tol: float = 1e-9) -> bool:
    """Whether ``S(P, E)`` and ``S(Q, E)`` exist and coincide."""
    E = frozenset(E)
    a, b = smallest_sphere(X, P, E), smallest_sphere(X, Q, E)
    if a is None or b is None:
        return False
    scale = max(1.0, abs(a.sq_radius))
    return abs(a.sq_radius - b.sq_radius) <= tol * scale and np.allclose(a.center, b.center, rtol=0, atol=tol * scale)


def check_pairing(X: WeightedPointSet, P: PairingAssignment, small: Iterable[Simplex] | None = None) -> list[str]:
    """Violations of the pairing invariants; empty when all hold."""
    if small is None:
        small = build_selective_delaunay(X, P.F, INF).values
    small = set(small)
    problems = []
    for Q, x in P.g.items():
        lo = tuple(v for v in Q if v != x)
        hi = tuple(sorted(set(Q) | {x}))
        if x not in P.F - P.E:
            problems.append(f"{Q}: g={x} not in F - E")
        if not lo or not same_sphere(X, lo, hi, P.E):
            problems.append(f"{Q}: spheres of {lo} and {hi} differ")
        if lo in small or hi in small:
            problems.append(f"{Q}: {lo} or {hi} in Del(X, F)")
        if P.g.get(lo) != x or P.g.get(hi) != x:
            problems.append(f"{Q}: g({lo})={P.g.get(lo)}, g({hi})={P.g.get(hi)}, expected {x}")
    return problems


class SelectiveCollapse:
    """``Del_r(X, E) -> Del_r(X, E) & DelTri(X, F) -> Del_r(X, F)`` at one cap.

    Both stages are restrictions of cap-free constructions: pairs of ``g`` and
    intervals of ``W`` have constant values, so building at ``r`` and
    restricting a build at infinity give the same pairs.
    """

    def __init__(self, X: WeightedPointSet, E: Iterable[int], F: Iterable[int], sq_radius_cap: float = INF,
                 eps: float = EPS, labels: tuple[str, str, str] = ("Del(X,E)", "Del(X,E)&DelTri(X,F)", "Del(X,F)")):
        self.X = X
        self.E, self.F = frozenset(E), frozenset(F)
        if not self.E <= self.F:
            raise ValueError("E must be a subset of F")
        self.cap = sq_radius_cap
        self.eps = eps
        self.labels = labels
        self.rank = {v: i for i, v in enumerate(X.vertices)}
        self.source = build_selective_delaunay(X, self.E, sq_radius_cap, eps=eps)
        rho_F = {}
        for Q in self.source.ordered():
            if all(P in rho_F for P in facets(Q)):
                cert = smallest_sphere(X, Q, self.F, eps)
                if cert is not None:
                    rho_F[Q] = cert.sq_radius
        self.rho_F = rho_F
        vals = self.source.values
        self.middle = FilteredComplex(X, self.E, {Q: vals[Q] for Q in rho_F}, sq_radius_cap, "selective")
        self.target = FilteredComplex(
            X, self.F, {Q: v for Q, v in rho_F.items() if v <= sq_radius_cap + eps}, sq_radius_cap, "selective"
        )
        domain = [Q for Q in self.source.ordered() if Q not in rho_F]
        self.pairing = pairing_map(X, self.E, self.F, domain, eps)
        self._W: GeneralizedVectorField | None = None

    @property
    def W(self) -> GeneralizedVectorField:
        """Common refinement of the ``rho_E`` and ``rho_F`` intervals on the middle complex."""
        if self._W is None:
            simplices = list(self.middle.values)
            IE = radius_intervals(self.X, self.E, simplices, self.eps)
            IF = radius_intervals(self.X, self.F, simplices, self.eps)
            self._W = sum_refinement(IE, IF, self.middle)
        return self._W

    def first_stage_pairs(self) -> list[Pair]:
        return self.pairing.pairs()

    def first_stage(self) -> CollapseSequence:
        vals = self.source.values
        g = self.pairing.g

        # Later vertices' pairs first, x_1's pairs last.
        def key(p):
            lo, hi = p
            return (-self.rank[g[hi]], -vals[hi], -len(hi), _revlex(hi))

        order = schedule_collapse(vals, self.first_stage_pairs(), key)
        steps = [CollapseStep(lo, hi, vals[hi]) for lo, hi in order]
        return CollapseSequence(self.labels[0], self.labels[1], steps, self.source)

    def second_stage_pairs(self) -> list[Pair]:
        pairs = []
        for iv in self.W.intervals:
            gone = [Q not in self.target for Q in iv.members()]
            if not any(gone):
                continue
            if not all(gone):
                raise DegenerateInput(f"interval {iv} straddles the cap")
            if iv.singular:
                raise DegenerateInput(f"critical simplex {iv.lower} in the middle complex but not the target")
            pairs.extend(refine_interval(iv, self.rank))
        return pairs

    def second_stage(self) -> CollapseSequence:
        vals = self.middle.values
        rho_F = self.rho_F

        def key(p):
            lo, hi = p
            return (-vals[hi], -rho_F[hi], -len(hi), _revlex(hi))

        order = schedule_collapse(vals, self.second_stage_pairs(), key)
        steps = [CollapseStep(lo, hi, vals[hi]) for lo, hi in order]
        return CollapseSequence(self.labels[1], self.labels[2], steps, self.middle)

    def sequence(self) -> CollapseSequence:
        return self.first_stage().then(self.second_stage())


def del_to_wrap(X: WeightedPointSet, sq_radius_cap: float = INF, eps: float = EPS):
    """Delaunay complex, Wrap complex and the collapse between them at one cap."""
    K = build_delaunay(X, sq_radius_cap, eps=eps)
    VX = radius_gradient(X, X.vertices, K, eps)
    wrap = wrap_complex(X, sq_radius_cap, eps=eps)
    rank = {v: i for i, v in enumerate(X.vertices)}
    pairs = []
    for iv in VX.intervals:
        if iv.lower in wrap:
            continue
        if iv.singular:
            raise DegenerateInput(f"critical simplex {iv.lower} outside the Wrap complex")
        pairs.extend(refine_interval(iv, rank))
    vals = K.values

    def key(p):
        lo, hi = p
        return (-vals[hi], -len(hi), _revlex(hi))

    order = schedule_collapse(vals, pairs, key)
    seq = CollapseSequence("delaunay", "wrap", [CollapseStep(lo, hi, vals[hi]) for lo, hi in order], K)
    return K, wrap, seq


HIERARCHY = ("cech", "delcech", "delaunay", "wrap")


def _cech_collapse(X: WeightedPointSet, sq_radius_cap: float, eps: float) -> SelectiveCollapse:
    return SelectiveCollapse(X, (), X.vertices, sq_radius_cap, eps, labels=HIERARCHY[:3])


def collapse_cech_to_delcech(X: WeightedPointSet, sq_radius_cap: float = INF, eps: float = EPS) -> CollapseSequence:
    return _cech_collapse(X, sq_radius_cap, eps).first_stage()


def collapse_delcech_to_del(X: WeightedPointSet, sq_radius_cap: float = INF, eps: float = EPS) -> CollapseSequence:
    return _cech_collapse(X, sq_radius_cap, eps).second_stage()


def collapse_del_to_wrap(X: WeightedPointSet, sq_radius_cap: float = INF, eps: float = EPS) -> CollapseSequence:
    return del_to_wrap(X, sq_radius_cap, eps)[2]


@dataclass
class HierarchyLevel:
    """The four complexes at one cap and the three collapses between them."""

    cap: float
    complexes: dict[str, FilteredComplex]
    sequences: list[CollapseSequence]

    def verify(self) -> list[ReplayReport]:
        return [
            verify_collapse(self.complexes[a], seq, self.complexes[b])
            for (a, b), seq in zip(zip(HIERARCHY, HIERARCHY[1:]), self.sequences)
        ]

    def combined_gradient(self) -> DiscreteGradient:
        """All stage pairs as one discrete gradient on the Cech complex."""
        pairs = [p for seq in self.sequences for p in seq.pairs()]
        paired = {s for p in pairs for s in p}
        crit = sorted(set(self.complexes["cech"].values) - paired, key=lambda Q: (len(Q), Q))
        return DiscreteGradient(pairs, crit)

    def chain(self, source: str, target: str) -> CollapseSequence:
        i, j = HIERARCHY.index(source), HIERARCHY.index(target)
        if j < i:
            raise ValueError(f"{target} is not downstream of {source}")
        seq = CollapseSequence(source, source, [], self.complexes[source])
        for s in self.sequences[i:j]:
            seq = seq.then(s)
        return seq


def collapse_hierarchy(X: WeightedPointSet, sq_radius_cap: float = INF, eps: float = EPS) -> HierarchyLevel:
    """``Cech_r -> DelCech_r -> Del_r -> Wrap_r`` with every collapse sequence."""
    sel = _cech_collapse(X, sq_radius_cap, eps)
    cech = FilteredComplex(X, frozenset(), sel.source.values, sq_radius_cap, "cech")
    delcech = FilteredComplex(X, frozenset(), sel.middle.values, sq_radius_cap, "delcech")
    dl, wrap, s3 = del_to_wrap(X, sq_radius_cap, eps)
    if set(dl.values) != set(sel.target.values):
        raise DegenerateInput("Delaunay complex differs from the selective build with E = X")
    s1, s2 = sel.first_stage(), sel.second_stage()
    s1.start, s2.start = cech, delcech
    return HierarchyLevel(
        sq_radius_cap, {"cech": cech, "delcech": delcech, "delaunay": dl, "wrap": wrap}, [s1, s2, s3]
    )


# -- zigzag between Delaunay complexes of two point sets ---------------------------


def union_point_set(X: WeightedPointSet, Y: WeightedPointSet) -> tuple[WeightedPointSet, list[int], list[int]]:
    """``X | Y`` with identical weighted points merged, plus index maps from X and Y."""
    if X.dim != Y.dim:
        raise ValueError(f"dimensions differ: {X.dim} vs {Y.dim}")
    coords, weights, where = [], [], {}

    def add(c, w):
        key = (c, w)
        if key not in where:
            where[key] = len(coords)
            coords.append(c)
            weights.append(w)
        return where[key]

    ix = [add(c, w) for c, w in zip(X.coords, X.weights)]
    iy = [add(c, w) for c, w in zip(Y.coords, Y.weights)]
    return WeightedPointSet(X.dim, tuple(coords), tuple(weights)), ix, iy


def _relabel(K: FilteredComplex, index: Sequence[int]) -> set[Simplex]:
    return {tuple(sorted(index[v] for v in Q)) for Q in K.values}


@dataclass
class ZigzagReport:
    cap: float
    sizes: dict[str, int]
    inclusions: list[tuple[str, str, bool]]
    collapses: list[tuple[str, str, bool, int]]

    @property
    def ok(self) -> bool:
        return all(r[2] for r in self.inclusions) and all(r[2] for r in self.collapses)

    def lines(self) -> list[str]:
        out = [f"zigzag cap={self.cap}"]
        out += [f"size {k}={v}" for k, v in self.sizes.items()]
        out += [f"inclusion {a} <= {b}: {'ok' if ok else 'FAIL'}" for a, b, ok in self.inclusions]
        out += [f"collapse {a} -> {b}: {'ok' if ok else 'FAIL'} steps={n}" for a, b, ok, n in self.collapses]
        return out


def zigzag_connect(
    X: WeightedPointSet, Y: WeightedPointSet, sq_radius_cap: float = INF, eps: float = EPS, check_gp: bool = True
) -> ZigzagReport:
    """Build and verify the diagram connecting ``Del_r(X)`` and ``Del_r(Y)`` through ``X | Y``.

    Every arrow of the diagram is checked as a subset relation in the vertex
    indexing of the union; the homotopy-equivalence arrows are additionally
    realized as collapses and replayed.
    """
    U, ix, iy = union_point_set(X, Y)
    if check_gp:
        bad = check_general_position(U)
        if bad:
            raise DegenerateInput(f"union not in general position: {bad[0]}")
    allU = list(U.vertices)
    sx, sy = sorted(set(ix)), sorted(set(iy))
    r = sq_radius_cap

    S = {
        "Cech(X)": _relabel(build_cech(X, r, eps=eps), ix),
        "Cech(Y)": _relabel(build_cech(Y, r, eps=eps), iy),
        "Cech(X|Y)": set(build_cech(U, r, eps=eps).values),
        "Del(X)": _relabel(build_delaunay(X, r, eps=eps), ix),
        "Del(Y)": _relabel(build_delaunay(Y, r, eps=eps), iy),
        "Del(X|Y)": set(build_delaunay(U, r, eps=eps).values),
        "Del(X|Y,X)": set(build_selective_delaunay(U, sx, r, eps=eps).values),
        "Del(X|Y,Y)": set(build_selective_delaunay(U, sy, r, eps=eps).values),
    }
    arrows = [
        ("Cech(X)", "Cech(X|Y)"),
        ("Cech(Y)", "Cech(X|Y)"),
        ("Del(X|Y,X)", "Cech(X|Y)"),
        ("Del(X|Y,Y)", "Cech(X|Y)"),
        ("Del(X)", "Cech(X)"),
        ("Del(Y)", "Cech(Y)"),
        ("Del(X)", "Del(X|Y,X)"),
        ("Del(X|Y)", "Del(X|Y,X)"),
        ("Del(X|Y)", "Del(X|Y,Y)"),
        ("Del(Y)", "Del(X|Y,Y)"),
    ]
    inclusions = [(a, b, S[a] <= S[b]) for a, b in arrows]

    collapses = []
    plans = [
        ("Cech(X|Y)", "Del(X|Y,X)", U, (), sx, list(range(len(U)))),
        ("Cech(X|Y)", "Del(X|Y,Y)", U, (), sy, list(range(len(U)))),
        ("Del(X|Y,X)", "Del(X|Y)", U, sx, allU, list(range(len(U)))),
        ("Del(X|Y,Y)", "Del(X|Y)", U, sy, allU, list(range(len(U)))),
        ("Cech(X)", "Del(X)", X, (), list(X.vertices), ix),
        ("Cech(Y)", "Del(Y)", Y, (), list(Y.vertices), iy),
    ]
    for a, b, P, E, F, index in plans:
        sel = SelectiveCollapse(P, E, F, r, eps)
        seq = sel.sequence()
        rep = verify_collapse(sel.source, seq, sel.target)
        ok = bool(rep) and _relabel(sel.source, index) == S[a] and _relabel(sel.target, index) == S[b]
        if not rep:
            logger.warning("collapse %s -> %s failed: %s", a, b, rep.message)
        collapses.append((a, b, ok, len(seq)))
    return ZigzagReport(r, {k: len(v) for k, v in S.items()}, inclusions, collapses)
