from __future__ import annotations

import math

import numpy as np
import pytest

from delcollapse import geometry
from delcollapse.geometry import WeightedPointSet, random_point_set

ACCEPTANCE: list[str] = []


@pytest.fixture(autouse=True)
def verify_certificates(monkeypatch):
    """Test mode: every fresh solver result is re-checked against its KKT certificate."""
    monkeypatch.setattr(geometry, "VERIFY_CERTIFICATES", True)


def obtuse() -> WeightedPointSet:
    return WeightedPointSet.from_arrays([[0.0, 0.0], [4.0, 0.0], [2.0, 1.0]])


def equilateral() -> WeightedPointSet:
    return WeightedPointSet.from_arrays([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])


def kite() -> WeightedPointSet:
    return WeightedPointSet.from_arrays([[0.0, 0.0], [2.0, 0.0], [1.0, 1.2], [1.0, -1.2]])


def random_instances(count: int, seed: int, max_points: int, dims=(2, 3), min_points: int = 1, weighted=None):
    """Reproducible GP instances; ``weighted=None`` alternates weighted and unweighted."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        n = int(dims[i % len(dims)])
        m = int(rng.integers(min_points, max_points + 1))
        w = (i % 2 == 1) if weighted is None else weighted
        out.append(random_point_set(m, n, rng, weighted=w))
    return out


def record(number: int, name: str, ok: bool, detail: str = "") -> None:
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else "")
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
