from __future__ import annotations

import io
import subprocess
import sys

import pytest
from conftest import obtuse

from delcollapse import formats
from delcollapse.cli import main
from delcollapse.complexes import build_delaunay
from delcollapse.geometry import WeightedPointSet
from delcollapse.persistence import compute_barcode


@pytest.fixture
def pts(tmp_path):
    def write(text, name="points.txt"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    return write


OBTUSE = "dim 2\n# obtuse triangle\n0 0\n4 0\n2 1\n"
EQUI = "dim 2\n0 0\n1 0\n0.5 0.8660254037844386\n"
SQUARE = "dim 2\n0 0\n1 0\n1 1\n0 1\n"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_points_roundtrip():
    X = WeightedPointSet.from_arrays([[0.1, 0.2], [3.0, 4.5]], [0.0, 0.25])
    buf = io.StringIO()
    formats.write_points(X, buf)
    Y = formats.read_points(io.StringIO(buf.getvalue()))
    assert Y.coords == X.coords and Y.weights == X.weights


def test_points_parse_errors():
    with pytest.raises(formats.FormatError):
        formats.read_points(io.StringIO("dim 2\n0 0 0\n"))
    with pytest.raises(formats.FormatError):
        formats.read_points(io.StringIO("dim x\n"))
    with pytest.raises(formats.FormatError):
        formats.read_points(io.StringIO("dim 2\n0 nan\n"))


def test_complex_roundtrip_and_format():
    K = build_delaunay(obtuse())
    text = formats.complex_text(K)
    assert text.splitlines()[0] == "complex dim=2 E=all cap=inf type=delaunay"
    assert "0,1,2 6.25" in text
    R = formats.read_complex(io.StringIO(text))
    assert R.values.keys() == K.values.keys() and R.kind == "delaunay"
    assert compute_barcode(R).bars == compute_barcode(K).bars


def test_complex_rejects_open_complex():
    with pytest.raises(formats.FormatError):
        formats.read_complex(io.StringIO("complex dim=2 E=all cap=inf\n0 0\n0,1 1\n"))


def test_build_delaunay(capsys, pts):
    code, out, _ = run(capsys, "build", "--type", "delaunay", "--cap", "inf", pts(OBTUSE))
    assert code == 0 and len(out.splitlines()) == 8


def test_build_selective(capsys, pts):
    code, out, _ = run(capsys, "build", "--type", "selective", "--E", "0,2", "--cap", "4.0", pts(OBTUSE))
    assert code == 0 and out.startswith("complex dim=2 E=0,2 cap=4 type=selective")


def test_build_wrap(capsys, pts):
    code, out, _ = run(capsys, "build", "--type", "wrap", "--cap", "4.0", pts(OBTUSE))
    lines = out.splitlines()
    assert code == 0 and lines[0].startswith("wrap ")
    assert [l.split()[0] for l in lines[1:]] == ["0", "1", "2", "0,2", "1,2"]


def test_build_rejects_E_without_selective(capsys, pts):
    assert run(capsys, "build", "--type", "cech", "--E", "0", pts(OBTUSE))[0] == 2


def test_build_degenerate_exit_code(capsys, pts):
    code, _, err = run(capsys, "build", pts(SQUARE))
    assert code == 3 and "perturb" in err
    # skipping the check only defers the failure to the solver
    code, _, err = run(capsys, "build", "--no-gp-check", "--type", "cech", pts(SQUARE))
    assert code == 3 and "degenerate" in err


def test_gradient(capsys, pts):
    code, out, _ = run(capsys, "gradient", pts(OBTUSE))
    lines = out.splitlines()
    assert code == 0 and lines[0] == "gradient E=all"
    assert sum(l.endswith("critical") for l in lines) == 5
    assert "interval lower=0,1 upper=0,1,2 value=6.25" in lines
    code, out, _ = run(capsys, "gradient", "--E", "empty", pts("dim 2\n0.5 0.5\n", "one.txt"))
    assert code == 0 and out.splitlines()[1:] == ["interval lower=0 upper=0 value=0 critical"]
    assert run(capsys, "gradient", "--E", "0,9", pts(OBTUSE))[0] == 2
    assert run(capsys, "gradient", "--E", "a,b", pts(OBTUSE))[0] == 2


def test_collapse_commands(capsys, pts):
    code, out, err = run(capsys, "collapse", "--from", "cech", "--to", "wrap", "--cap", "inf", pts(OBTUSE))
    assert code == 0 and "verified" in err
    assert out.splitlines() == ["collapse from=cech to=wrap", "step 0: facet=0,1 cofacet=0,1,2 value=6.25"]
    code, out, _ = run(capsys, "collapse", "--from", "delaunay", "--to", "wrap", pts(EQUI))
    assert code == 0 and out.splitlines() == ["collapse from=delaunay to=wrap"]
    assert run(capsys, "collapse", "--from", "wrap", "--to", "cech", pts(OBTUSE))[0] == 2


def test_persistence_command(capsys, pts):
    code, out, _ = run(capsys, "persistence", "--type", "cech", pts(EQUI))
    assert code == 0
    assert out.splitlines() == ["dim,birth,death", "0,0,0.25", "0,0,0.25", "0,0,inf", "1,0.25,0.333333333333"]


def test_persistence_roundtrip_through_file(capsys, pts, tmp_path):
    X = pts(OBTUSE)
    cfile = str(tmp_path / "k.txt")
    assert run(capsys, "build", "--type", "cech", X, "-o", cfile)[0] == 0
    _, direct, _ = run(capsys, "persistence", "--type", "cech", X)
    code, via_file, _ = run(capsys, "persistence", "--complex", cfile)
    assert code == 0 and via_file == direct


def test_compare_random_seed_7(capsys, tmp_path):
    p = str(tmp_path / "r.txt")
    assert run(capsys, "generate", "--seed", "7", "-o", p)[0] == 0
    code, out, _ = run(capsys, "compare", p)
    assert code == 0 and out == "EQUAL\n"


def test_compare_mismatched_ground_sets(capsys, pts, tmp_path):
    a, b = str(tmp_path / "a.txt"), str(tmp_path / "b.txt")
    run(capsys, "build", pts(OBTUSE), "-o", a)
    run(capsys, "build", pts("dim 2\n0 0\n1 0\n", "two.txt"), "-o", b)
    assert run(capsys, "compare", "--complex", a, b)[0] == 2


def test_checkgp_and_perturb(capsys, pts, tmp_path):
    sq = pts(SQUARE)
    code, out, _ = run(capsys, "checkgp", sq)
    assert code == 3 and "(b)" in out
    for seed in range(5):
        q = str(tmp_path / f"p{seed}.txt")
        assert run(capsys, "perturb", sq, "--magnitude", "1e-6", "--seed", str(seed), "-o", q)[0] == 0
        code, out, _ = run(capsys, "checkgp", q)
        if code == 0:
            assert out == "OK\n"
            break
    else:
        pytest.fail("perturbation never reached general position")
    assert run(capsys, "checkgp", str(tmp_path / "missing.txt"))[0] == 2


def test_perturb_deterministic(capsys, pts):
    sq = pts(SQUARE)
    a = run(capsys, "perturb", sq, "--seed", "42")[1]
    b = run(capsys, "perturb", sq, "--seed", "42")[1]
    assert a == b and a != SQUARE


def test_build_is_byte_identical(capsys, tmp_path):
    p = str(tmp_path / "r.txt")
    run(capsys, "generate", "--seed", "3", "--n-points", "7", "--weighted", "-o", p)
    for kind in ("cech", "wrap"):
        assert run(capsys, "build", "--type", kind, p)[1] == run(capsys, "build", "--type", kind, p)[1]


def test_zigzag_command(capsys, pts):
    code, out, _ = run(capsys, "zigzag", pts("dim 2\n0 0\n2 0\n", "x.txt"), pts("dim 2\n1 1.1\n", "y.txt"), "--cap", "2")
    assert code == 0 and out.count(": ok") == 16
    assert run(capsys, "zigzag", pts("dim 2\n0 0\n2 0\n", "x.txt"), pts("dim 2\n1 1\n", "y.txt"), "--cap", "2")[0] == 3


def test_usage_errors(capsys, pts):
    assert run(capsys, "build", pts(OBTUSE), "--cap", "abc")[0] == 2
    assert run(capsys, "nonsense")[0] == 2
    assert run(capsys, "build", "/nonexistent/points.txt")[0] == 2
    assert run(capsys, "persistence")[0] == 2


def test_module_entry_point(pts):
    res = subprocess.run([sys.executable, "-m", "delcollapse", "build", pts(OBTUSE)], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("complex dim=2")
