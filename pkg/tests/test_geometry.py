from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from conftest import equilateral, obtuse, random_instances

from delcollapse.geometry import (
    DegenerateInput,
    Sphere,
    SphereCertificate,
    WeightedPointSet,
    check_general_position,
    check_kkt,
    perturb,
    smallest_sphere,
    smallest_sphere_oracle,
)

A, B, C = 0, 1, 2


def test_single_unweighted_point():
    X = WeightedPointSet.from_arrays([[0.0, 0.0]])
    cert = smallest_sphere(X, {0})
    assert np.allclose(cert.center, [0, 0]) and cert.sq_radius == 0
    assert cert.on_set == {0} and cert.front == {0} and cert.back == set()


def test_single_weighted_point_has_negative_radius():
    X = WeightedPointSet.from_arrays([[0.0, 0.0]], [1.0])
    cert = smallest_sphere(X, {0})
    assert np.allclose(cert.center, [0, 0])
    assert cert.sq_radius == pytest.approx(-1.0, abs=1e-12)


@pytest.mark.parametrize("solver", [smallest_sphere, smallest_sphere_oracle])
def test_obtuse_edge_excluding_apex(solver):
    cert = solver(obtuse(), {A, B}, {C})
    assert np.allclose(cert.center, [2.0, -1.5], atol=1e-12)
    assert cert.sq_radius == pytest.approx(6.25, abs=1e-12)
    assert cert.on_set == {A, B, C}
    assert cert.coeffs[A] == pytest.approx(1.25) and cert.coeffs[B] == pytest.approx(1.25)
    assert cert.coeffs[C] == pytest.approx(-1.5)
    assert cert.front == {A, B} and cert.back == {C}


@pytest.mark.parametrize("solver", [smallest_sphere, smallest_sphere_oracle])
def test_obtuse_edge_unconstrained(solver):
    cert = solver(obtuse(), {A, B}, ())
    assert np.allclose(cert.center, [2.0, 0.0], atol=1e-12)
    assert cert.sq_radius == pytest.approx(4.0, abs=1e-12)
    assert cert.on_set == {A, B} and cert.incl_set == {A, B, C}


@pytest.mark.parametrize("solver", [smallest_sphere, smallest_sphere_oracle])
def test_equilateral_circumsphere(solver):
    cert = solver(equilateral(), {0, 1, 2}, ())
    assert cert.sq_radius == pytest.approx(1 / 3, abs=1e-12)
    assert np.allclose(cert.center, equilateral().array.mean(axis=0))


@pytest.mark.parametrize("solver", [smallest_sphere, smallest_sphere_oracle])
def test_diametral_sphere_misses_apex(solver):
    cert = solver(equilateral(), {0, 1}, {2})
    assert cert.sq_radius == pytest.approx(0.25, abs=1e-12)
    assert cert.on_set == {0, 1} and cert.back == set()


@pytest.mark.parametrize("solver", [smallest_sphere, smallest_sphere_oracle])
def test_point_on_sphere_from_both_sides(solver):
    X = WeightedPointSet.from_arrays([[1.0, 2.0], [5.0, 5.0]], [0.5, 0.0])
    cert = solver(X, {0}, {0})
    assert cert.sq_radius == pytest.approx(-0.5) and cert.on_set == {0}
    assert np.allclose(cert.center, [1.0, 2.0])


def test_infeasible_returns_none():
    # the unweighted center point is covered by the power cells of three heavy neighbours
    X = WeightedPointSet.from_arrays([[0.0, 0.0], [1.0, 0.0], [-0.5, 0.87], [-0.5, -0.87]], [0.0, 2.0, 2.0, 2.0])
    assert smallest_sphere(X, {0}, {1, 2, 3}) is None
    assert smallest_sphere_oracle(X, {0}, {1, 2, 3}) is None
    assert smallest_sphere(X, {0}, {1, 2}) is not None


def test_empty_Q_rejected():
    with pytest.raises(ValueError):
        smallest_sphere(obtuse(), set())


def test_sphere_predicates():
    X = obtuse()
    S = Sphere(np.array([2.0, 0.0]), 4.0)
    assert S.on(X, A) and S.on(X, B)
    assert S.includes(X, C) and not S.excludes(X, C)


def test_check_kkt_accepts_solver_output():
    X = obtuse()
    cert = smallest_sphere(X, {A, B}, {C})
    assert check_kkt(X, {A, B}, {C}, cert)


def test_check_kkt_rejects_inflated_radius():
    X = obtuse()
    cert = smallest_sphere(X, {A, B}, {C})
    bad = SphereCertificate(Sphere(cert.center, cert.sq_radius + 1), cert.on_set, cert.incl_set,
                            cert.excl_set, cert.front, cert.back, cert.coeffs)
    assert not check_kkt(X, {A, B}, {C}, bad)


def test_check_kkt_rejects_back_outside_E():
    X = obtuse()
    cert = smallest_sphere(X, {A, B}, {C})
    assert not check_kkt(X, {A, B}, set(), cert)


def test_general_position_clean():
    X = WeightedPointSet.from_arrays([[0, 0], [3, 0.2], [1.1, 2.3], [2.2, -1.7]])
    assert check_general_position(X) == []


def test_general_position_collinear():
    X = WeightedPointSet.from_arrays([[0, 0], [1, 1], [2, 2]])
    bad = check_general_position(X)
    assert any(v.kind == "a" and set(v.subset) == {0, 1, 2} for v in bad)


def test_general_position_cocircular_square():
    X = WeightedPointSet.from_arrays([[0, 0], [1, 0], [1, 1], [0, 1]])
    assert any(v.kind == "b" for v in check_general_position(X))


def test_perturb_is_deterministic_and_keeps_weights():
    X = WeightedPointSet.from_arrays([[0, 0], [1, 0], [1, 1], [0, 1]], [0.1, 0.2, 0.3, 0.4])
    Y1, Y2 = perturb(X, 1e-6, 42), perturb(X, 1e-6, 42)
    assert Y1.coords == Y2.coords and Y1.weights == X.weights
    assert np.all(np.abs(Y1.array - X.array) <= 1e-6)


def test_perturb_rejects_nonpositive_magnitude():
    with pytest.raises(ValueError):
        perturb(equilateral(), 0.0, 1)


def test_perturbed_square_is_in_general_position():
    X = WeightedPointSet.from_arrays([[0, 0], [1, 0], [1, 1], [0, 1]])
    for seed in range(5):
        if not check_general_position(perturb(X, 1e-6, seed)):
            return
    pytest.fail("five perturbations in a row stayed degenerate")


def test_degenerate_on_set_raises():
    # (1, 1) sits on the diametral circle of the first two points
    X = WeightedPointSet.from_arrays([[0, 0], [2, 0], [1, 1]])
    with pytest.raises(DegenerateInput):
        smallest_sphere(X, {0, 1, 2})


def _subsets(m):
    return [frozenset(c) for k in range(m + 1) for c in itertools.combinations(range(m), k)]


@pytest.mark.parametrize("X", random_instances(12, seed=11, max_points=5), ids=lambda X: f"m{len(X)}n{X.dim}")
def test_monotone_in_E(X):
    for Q in _subsets(len(X))[1:]:
        subs = _subsets(len(X))
        for E in subs[:: max(1, len(subs) // 6)]:
            a = smallest_sphere(X, Q, E)
            for y in X.vertices:
                b = smallest_sphere(X, Q, E | {y})
                if a is not None and b is not None:
                    assert a.sq_radius <= b.sq_radius + 1e-9 * max(1, abs(b.sq_radius))


@pytest.mark.parametrize("X", random_instances(10, seed=12, max_points=6, min_points=3), ids=lambda X: f"m{len(X)}n{X.dim}")
def test_same_sphere_lemma(X):
    rng = np.random.default_rng(len(X))
    for _ in range(40):
        Q = frozenset(int(v) for v in rng.choice(len(X), rng.integers(1, len(X) + 1), replace=False))
        E = frozenset(int(v) for v in X.vertices if rng.random() < 0.5)
        S = smallest_sphere(X, Q, E)
        if S is None:
            continue
        for x in S.incl_set - S.front:
            for P in (Q - {x}, Q | {x}):
                if P:
                    T = smallest_sphere(X, P, E)
                    assert T is not None and T.sq_radius == pytest.approx(S.sq_radius, abs=1e-9)
                    assert np.allclose(T.center, S.center, atol=1e-9)
        for y in S.excl_set - S.back:
            for F in (E - {y}, E | {y}):
                T = smallest_sphere(X, Q, F)
                assert T is not None and T.sq_radius == pytest.approx(S.sq_radius, abs=1e-9)
