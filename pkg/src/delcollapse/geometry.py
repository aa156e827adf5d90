"""Constrained smallest spheres of weighted points and their KKT certificates.

A sphere ``S`` with center ``z`` and squared radius ``s`` *includes* a point
``x`` of weight ``w`` when ``|z - x|^2 <= s + w`` and *excludes* it when
``|z - x|^2 >= s + w``.  For vertex sets ``Q`` and ``E`` the Delaunay sphere
``S(Q, E)`` is the sphere of minimal ``s`` that includes ``Q`` and excludes
``E``.  Two independent routes compute it:

* :func:`smallest_sphere` -- a Welzl-style recursion over the constraints,
  valid because the program is LP-type with a unique optimum;
* :func:`smallest_sphere_oracle` -- exhaustive enumeration of candidate
  support sets, each solved through the full KKT linear system.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

EPS = 1e-9
EPS_GP = 1e-7

# When set, every fresh solver result is re-validated with check_kkt.
VERIFY_CERTIFICATES = False


class DegenerateInput(ValueError):
    """The input violates general position within tolerance."""


class CertificateError(RuntimeError):
    """A solver produced a sphere that fails the KKT check."""


@dataclass(frozen=True)
class WeightedPointSet:
    """Ordered points in R^n with real weights.

    The list order is the vertex order: vertex ``i`` is ``coords[i]``.
    """

    dim: int
    coords: tuple[tuple[float, ...], ...]
    weights: tuple[float, ...]
    _cache: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dimension must be positive, got {self.dim}")
        if len(self.coords) != len(self.weights):
            raise ValueError("coords and weights differ in length")
        for i, c in enumerate(self.coords):
            if len(c) != self.dim:
                raise ValueError(f"point {i} has {len(c)} coordinates, expected {self.dim}")

    @classmethod
    def from_arrays(cls, coords, weights=None, dim=None) -> "WeightedPointSet":
        arr = np.asarray(coords, dtype=float)
        if arr.size == 0:
            if dim is None:
                raise ValueError("dim is required for an empty point set")
            arr = arr.reshape(0, dim)
        if arr.ndim != 2:
            raise ValueError("coords must be a 2-d array")
        if weights is None:
            weights = np.zeros(len(arr))
        w = np.asarray(weights, dtype=float).reshape(-1)
        return cls(
            dim=int(arr.shape[1]) if dim is None else int(dim),
            coords=tuple(tuple(float(v) for v in row) for row in arr),
            weights=tuple(float(v) for v in w),
        )

    def __len__(self) -> int:
        return len(self.coords)

    @cached_property
    def array(self) -> np.ndarray:
        return np.array(self.coords, dtype=float).reshape(len(self.coords), self.dim)

    @cached_property
    def weight_array(self) -> np.ndarray:
        return np.array(self.weights, dtype=float)

    @property
    def vertices(self) -> range:
        return range(len(self.coords))

    @property
    def is_weighted(self) -> bool:
        return any(w != 0.0 for w in self.weights)


@dataclass(frozen=True)
class Sphere:
    center: np.ndarray
    sq_radius: float

    def power(self, X: WeightedPointSet, idx=None) -> np.ndarray:
        """``|z - x|^2 - s - w_x``; negative inside, positive outside."""
        pts = X.array if idx is None else X.array[list(idx)]
        w = X.weight_array if idx is None else X.weight_array[list(idx)]
        d = pts - self.center
        return np.einsum("ij,ij->i", d, d) - self.sq_radius - w

    def tolerance(self, eps: float = EPS) -> float:
        # Rounding in the power test grows with the squared radius.
        return eps * max(1.0, abs(self.sq_radius))

    def includes(self, X: WeightedPointSet, i: int, eps: float = EPS) -> bool:
        return float(self.power(X, [i])[0]) <= self.tolerance(eps)

    def excludes(self, X: WeightedPointSet, i: int, eps: float = EPS) -> bool:
        return float(self.power(X, [i])[0]) >= -self.tolerance(eps)

    def on(self, X: WeightedPointSet, i: int, eps: float = EPS) -> bool:
        return abs(float(self.power(X, [i])[0])) <= self.tolerance(eps)


@dataclass(frozen=True)
class SphereCertificate:
    """A sphere together with its KKT witness.

    ``coeffs`` holds the affine coefficients of the center over ``on_set``;
    vertices outside ``on_set`` implicitly have coefficient zero.
    """

    sphere: Sphere
    on_set: frozenset[int]
    incl_set: frozenset[int]
    excl_set: frozenset[int]
    front: frozenset[int]
    back: frozenset[int]
    coeffs: dict[int, float]

    @property
    def sq_radius(self) -> float:
        return self.sphere.sq_radius

    @property
    def center(self) -> np.ndarray:
        return self.sphere.center


def _as_set(vs: Iterable[int] | None) -> frozenset[int]:
    return frozenset() if vs is None else frozenset(int(v) for v in vs)


def _check_indices(X: WeightedPointSet, *sets: frozenset[int]) -> None:
    m = len(X)
    for s in sets:
        for v in s:
            if not 0 <= v < m:
                raise IndexError(f"vertex {v} out of range for {m} points")


def circumsphere(X: WeightedPointSet, idx: Sequence[int]) -> tuple[np.ndarray, float, np.ndarray]:
    """Smallest circumsphere of the weighted points ``idx``.

    Returns ``(center, sq_radius, coeffs)`` where the center is the affine
    combination ``sum(coeffs[k] * x[idx[k]])``.  Raises ``DegenerateInput``
    if the points are affinely dependent.
    """
    idx = list(idx)
    pts = X.array[idx]
    p0 = pts[0]
    if len(idx) == 1:
        return p0.copy(), float(-X.weight_array[idx[0]]) + 0.0, np.ones(1)
    U = pts[1:] - p0
    w = X.weight_array[idx]
    rhs = 0.5 * (np.einsum("ij,ij->i", U, U) - w[1:] + w[0])
    # Minimum-norm solution of U d = rhs keeps the center in the affine hull
    # without squaring the condition number of U.
    d, _, rank, _ = np.linalg.lstsq(U, rhs, rcond=None)
    if rank < len(U):
        raise DegenerateInput(f"affinely dependent points {idx}")
    mu = np.linalg.lstsq(U.T, d, rcond=None)[0]
    z = p0 + d
    s = float(d @ d - w[0]) + 0.0
    return z, s, np.concatenate(([1.0 - mu.sum()], mu))


def _certificate(X: WeightedPointSet, on: Sequence[int], eps: float) -> SphereCertificate:
    """Certificate for the smallest circumsphere of ``on``, classified over all of X."""
    on = sorted(on)
    if len(on) > X.dim + 1:
        raise DegenerateInput(f"{len(on)} points on one sphere in R^{X.dim}: {on}")
    z, s, rho = circumsphere(X, on)
    sphere = Sphere(z, s)
    pw = sphere.power(X)
    tol = sphere.tolerance(eps)
    found = frozenset(int(i) for i in np.flatnonzero(np.abs(pw) <= tol))
    if found != frozenset(on):
        raise DegenerateInput(f"points {sorted(found ^ frozenset(on))} lie on the sphere of {on} within tolerance")
    coeffs = {v: float(r) for v, r in zip(on, rho)}
    if any(abs(r) <= eps for r in coeffs.values()):
        raise DegenerateInput(f"vanishing affine coefficient on {on}: {coeffs}")
    return SphereCertificate(
        sphere=sphere,
        on_set=frozenset(on),
        incl_set=frozenset(int(i) for i in np.flatnonzero(pw <= tol)),
        excl_set=frozenset(int(i) for i in np.flatnonzero(pw >= -tol)),
        front=frozenset(v for v, r in coeffs.items() if r > 0),
        back=frozenset(v for v, r in coeffs.items() if r < 0),
        coeffs=coeffs,
    )


# Sentinel spheres of the recursion.  _UNBOUNDED stands for s = -inf, which
# happens when no point has to be included; it excludes everything.
_UNBOUNDED = object()
_INFEASIBLE = object()

_IN, _OUT, _ON = 0, 1, 2


class _Welzl:
    def __init__(self, X: WeightedPointSet, Q: frozenset[int], E: frozenset[int], eps: float):
        self.X = X
        self.eps = eps
        self.kind = {}
        for v in Q | E:
            self.kind[v] = _ON if (v in Q and v in E) else (_IN if v in Q else _OUT)

    def satisfied(self, D, p: int) -> bool:
        k = self.kind[p]
        if D is _UNBOUNDED:
            return k == _OUT
        z, s = D
        d = self.X.array[p] - z
        pw = float(d @ d) - s - self.X.weights[p]
        tol = self.eps * max(1.0, abs(s))
        if k == _IN:
            return pw <= tol
        if k == _OUT:
            return pw >= -tol
        return abs(pw) <= tol

    def sphere(self, R: list[int]):
        # supports repeat across queries on one point set, so share them
        key = ("circumsphere", tuple(sorted(R)))
        cache = self.X._cache
        if key not in cache:
            z, s, _ = circumsphere(self.X, key[1])
            cache[key] = (z, s)
        return cache[key]

    def solve(self, P: list[int], R: list[int]):
        if len(R) == self.X.dim + 1:
            D = self.sphere(R)
            return D if all(self.satisfied(D, p) for p in P) else _INFEASIBLE
        if not P:
            return self.sphere(R) if R else _UNBOUNDED
        p = P[-1]
        D = self.solve(P[:-1], R)
        if D is _INFEASIBLE or self.satisfied(D, p):
            return D
        return self.solve(P[:-1], R + [p])


def _support(X: WeightedPointSet, z: np.ndarray, s: float, eps: float) -> list[int]:
    sph = Sphere(z, s)
    pw = sph.power(X)
    on = [int(i) for i in np.flatnonzero(np.abs(pw) <= sph.tolerance(eps))]
    if not on:
        raise DegenerateInput(f"no point within {eps} of the sphere (min |power| {np.min(np.abs(pw)):.3g})")
    return on


def smallest_sphere(
    X: WeightedPointSet,
    Q: Iterable[int],
    E: Iterable[int] = (),
    eps: float = EPS,
) -> SphereCertificate | None:
    """Smallest sphere that includes ``Q`` and excludes ``E``.

    Returns ``None`` when no such sphere exists.  Results are memoized on the
    point set.
    """
    Q, E = _as_set(Q), _as_set(E)
    if not Q:
        raise ValueError("Q must be nonempty")
    key = (Q, E, eps)
    cache = X._cache
    if key in cache:
        return cache[key]
    _check_indices(X, Q, E)

    solver = _Welzl(X, Q, E, eps)
    # Inclusion constraints are scanned first so the recursion leaves the
    # unbounded regime early; the order does not affect the (unique) optimum.
    P = sorted(E - Q, reverse=True) + sorted(Q, reverse=True)
    D = solver.solve(P, [])
    if D is _INFEASIBLE:
        cert = None
    else:
        cert = _certificate(X, _support(X, *D, eps), eps)
        if not (cert.front <= Q and cert.back <= E):
            raise DegenerateInput(
                f"sphere for Q={sorted(Q)}, E={sorted(E)} has front {sorted(cert.front)} "
                f"and back {sorted(cert.back)}"
            )
        if VERIFY_CERTIFICATES and not check_kkt(X, Q, E, cert, eps):
            raise CertificateError(f"certificate for Q={sorted(Q)}, E={sorted(E)} fails check_kkt")
    cache[key] = cert
    return cert


def _kkt_system(X: WeightedPointSet, T: Sequence[int]):
    """Center, squared radius and affine coefficients of the sphere through T.

    With origin at the first point of T and ``U`` the edge vectors, the KKT
    conditions say the center offset ``d = U^T lam'`` satisfies
    ``U d = (|u|^2 - w + w_0) / 2``.  A QR factorization ``U^T = QR`` gives
    ``R^T y = rhs``, ``d = Q y`` and ``lam' = R^{-1} y``.  Returns None for
    affinely dependent T.
    """
    T = list(T)
    origin = X.array[T[0]]
    w = X.weight_array[T]
    if len(T) == 1:
        return origin.copy(), float(-w[0]) + 0.0, np.ones(1)
    U = X.array[T[1:]] - origin
    rhs = 0.5 * (np.einsum("ij,ij->i", U, U) - w[1:] + w[0])
    Qm, R = np.linalg.qr(U.T)
    diag = np.abs(np.diag(R))
    if diag.min() <= 1e-12 * max(1.0, diag.max()):
        return None
    y = np.linalg.solve(R.T, rhs)
    # one round of iterative refinement on the on-sphere equations
    y += np.linalg.solve(R.T, rhs - U @ (Qm @ y))
    d = Qm @ y
    lam = np.linalg.solve(R, y)
    return origin + d, float(d @ d - w[0]) + 0.0, np.concatenate(([1.0 - lam.sum()], lam))


def smallest_sphere_oracle(
    X: WeightedPointSet,
    Q: Iterable[int],
    E: Iterable[int] = (),
    eps: float = EPS,
) -> SphereCertificate | None:
    """Brute-force reference for :func:`smallest_sphere`.

    Every subset ``T`` of ``Q | E`` with at most ``n + 1`` points is tried as
    the set of points on the sphere.  A candidate survives if its sphere is
    feasible, every positive coefficient sits on a point of ``Q`` and every
    negative one on a point of ``E``.  The survivor of minimal squared radius
    wins; exact ties go to the lexicographically smallest ``T``.
    """
    Q, E = _as_set(Q), _as_set(E)
    if not Q:
        raise ValueError("Q must be nonempty")
    _check_indices(X, Q, E)
    qi, ei = sorted(Q), sorted(E)
    best = None
    for k in range(1, X.dim + 2):
        for T in itertools.combinations(sorted(Q | E), k):
            res = _kkt_system(X, T)
            if res is None:
                continue
            z, s, lam = res
            if any(l > 0 and t not in Q for t, l in zip(T, lam)):
                continue
            if any(l < 0 and t not in E for t, l in zip(T, lam)):
                continue
            sph = Sphere(z, s)
            tol = sph.tolerance(eps)
            if qi and np.any(sph.power(X, qi) > tol):
                continue
            if ei and np.any(sph.power(X, ei) < -tol):
                continue
            if best is None or s < best[0] - 1e-12 * max(1.0, abs(s)):
                best = (s, T, z, lam)
    if best is None:
        return None
    s, T, z, lam = best
    sphere = Sphere(z, s)
    pw = sphere.power(X)
    tol = sphere.tolerance(eps)
    on = frozenset(int(i) for i in np.flatnonzero(np.abs(pw) <= tol))
    if on != frozenset(T):
        raise DegenerateInput(f"on-set {sorted(on)} differs from support {list(T)}")
    coeffs = {int(t): float(l) for t, l in zip(T, lam)}
    if any(abs(l) <= eps for l in coeffs.values()):
        raise DegenerateInput(f"vanishing affine coefficient on {list(T)}")
    return SphereCertificate(
        sphere=sphere,
        on_set=on,
        incl_set=frozenset(int(i) for i in np.flatnonzero(pw <= tol)),
        excl_set=frozenset(int(i) for i in np.flatnonzero(pw >= -tol)),
        front=frozenset(t for t, l in coeffs.items() if l > 0),
        back=frozenset(t for t, l in coeffs.items() if l < 0),
        coeffs=coeffs,
    )


def check_kkt(
    X: WeightedPointSet,
    Q: Iterable[int],
    E: Iterable[int],
    cert: SphereCertificate,
    eps: float = EPS,
) -> bool:
    """True iff ``cert`` proves its sphere is ``S(Q, E)``.

    Checks feasibility, that the recorded sets match the sphere, that the
    center is the recorded affine combination of the on-set, and the sign
    conditions ``Front <= Q`` and ``Back <= E``.
    """
    Q, E = _as_set(Q), _as_set(E)
    sph = cert.sphere
    pw = sph.power(X)
    tol = sph.tolerance(eps)
    if any(pw[q] > tol for q in Q) or any(pw[e] < -tol for e in E):
        return False
    on = frozenset(int(i) for i in np.flatnonzero(np.abs(pw) <= tol))
    if on != cert.on_set or not on:
        return False
    if cert.incl_set != frozenset(int(i) for i in np.flatnonzero(pw <= tol)):
        return False
    if cert.excl_set != frozenset(int(i) for i in np.flatnonzero(pw >= -tol)):
        return False
    if set(cert.coeffs) != set(on):
        return False
    lam = np.array([cert.coeffs[v] for v in sorted(on)])
    if abs(lam.sum() - 1.0) > 1e-7 * max(1.0, float(np.max(np.abs(lam)))):
        return False
    z = lam @ X.array[sorted(on)]
    if np.max(np.abs(z - sph.center)) > 1e-7 * max(1.0, float(np.max(np.abs(z)))):
        return False
    if cert.front != frozenset(v for v, l in cert.coeffs.items() if l > 0):
        return False
    if cert.back != frozenset(v for v, l in cert.coeffs.items() if l < 0):
        return False
    if cert.front | cert.back != on:
        return False
    return cert.front <= Q and cert.back <= E


@dataclass(frozen=True)
class Violation:
    kind: str  # "a": affinely dependent subset, "b": extra point on a circumsphere
    subset: tuple[int, ...]
    point: int | None = None
    residual: float = 0.0

    def __str__(self) -> str:
        if self.kind == "a":
            return f"(a) affinely dependent: {list(self.subset)} (singular value {self.residual:.3g})"
        return f"(b) point {self.point} on circumsphere of {list(self.subset)} (power {self.residual:.3g})"


def check_general_position(
    X: WeightedPointSet,
    eps_gp: float = EPS_GP,
    max_subsets: int | None = 500_000,
    seed: int = 0,
) -> list[Violation]:
    """List general position violations of ``X``; empty means accepted.

    Every subset of at most ``n + 1`` points must be affinely independent and
    no other point may lie on its smallest circumsphere.  Above
    ``max_subsets`` candidate subsets, a seeded random sample is checked.
    """
    m, n = len(X), X.dim
    sizes = range(1, min(n + 1, m) + 1)
    total = sum(math.comb(m, k) for k in sizes)
    if max_subsets is not None and total > max_subsets:
        logger.warning("checking %d of %d subsets for general position", max_subsets, total)
        rng = np.random.default_rng(seed)
        subsets = set()
        weights = np.array([math.comb(m, k) for k in sizes], dtype=float)
        while len(subsets) < max_subsets:
            k = int(rng.choice(list(sizes), p=weights / weights.sum()))
            subsets.add(tuple(sorted(int(i) for i in rng.choice(m, size=k, replace=False))))
        candidates = sorted(subsets, key=lambda t: (len(t), t))
    else:
        candidates = (T for k in sizes for T in itertools.combinations(range(m), k))

    out = []
    for T in candidates:
        if len(T) > 1:
            U = X.array[list(T[1:])] - X.array[T[0]]
            sv = np.linalg.svd(U, compute_uv=False)
            if sv[-1] < eps_gp:
                out.append(Violation("a", T, residual=float(sv[-1])))
                continue
        z, s, _ = circumsphere(X, T)
        pw = Sphere(z, s).power(X)
        inside = set(T)
        for i in np.flatnonzero(np.abs(pw) < eps_gp):
            if int(i) not in inside:
                out.append(Violation("b", T, int(i), float(pw[i])))
    return out


def perturb(X: WeightedPointSet, magnitude: float, rng_seed: int = 0) -> WeightedPointSet:
    """Copy of ``X`` with every coordinate jittered uniformly in ``[-magnitude, magnitude]``."""
    if not magnitude > 0:
        raise ValueError(f"magnitude must be positive, got {magnitude}")
    rng = np.random.default_rng(rng_seed)
    jitter = rng.uniform(-magnitude, magnitude, size=X.array.shape)
    return WeightedPointSet.from_arrays(X.array + jitter, X.weight_array, dim=X.dim)


def random_point_set(
    n_points: int,
    dim: int,
    rng: np.random.Generator | int = 0,
    weighted: bool = False,
    weight_scale: float = 1.0,
    eps_gp: float = EPS_GP,
    max_tries: int = 100,
) -> WeightedPointSet:
    """Uniform points in the unit cube, redrawn until in general position.

    With ``weighted``, weights are uniform in ``[0, weight_scale)``.
    """
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    for _ in range(max_tries):
        coords = rng.uniform(0.0, 1.0, size=(n_points, dim))
        weights = rng.uniform(0.0, 1.0, size=n_points) * weight_scale if weighted else np.zeros(n_points)
        X = WeightedPointSet.from_arrays(coords, weights, dim=dim)
        if not check_general_position(X, eps_gp):
            return X
    raise DegenerateInput(f"no general position sample after {max_tries} tries")
