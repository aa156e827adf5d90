"""Plain-text interchange: points, complexes, gradients, collapses and barcodes."""
from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Iterable, TextIO

from .collapse import CollapseSequence, CollapseStep
from .complexes import FilteredComplex, Simplex
from .geometry import WeightedPointSet
from .morse import GeneralizedVectorField
from .persistence import Barcode, Bar


class FormatError(ValueError):
    pass


def fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x + 0.0, ".12g")


def parse_real(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise FormatError(f"not a number: {text!r}") from None


def fmt_simplex(Q: Iterable[int]) -> str:
    return ",".join(str(v) for v in Q)


def parse_simplex(text: str) -> Simplex:
    try:
        vs = tuple(sorted(int(t) for t in text.split(",")))
    except ValueError:
        raise FormatError(f"bad simplex {text!r}") from None
    if not vs or len(set(vs)) != len(vs) or vs[0] < 0:
        raise FormatError(f"bad simplex {text!r}")
    return vs


def fmt_vertex_set(E: Iterable[int], n_vertices: int | None) -> str:
    E = sorted(E)
    if not E:
        return "empty"
    if n_vertices is not None and E == list(range(n_vertices)):
        return "all"
    return fmt_simplex(E)


def parse_vertex_set(text: str, n_vertices: int | None = None) -> frozenset[int] | str:
    """``all``, ``empty`` or a comma list; ``all`` stays symbolic when the size is unknown."""
    if text == "empty":
        return frozenset()
    if text == "all":
        return frozenset(range(n_vertices)) if n_vertices is not None else "all"
    return frozenset(parse_simplex(text))


def _lines(source: str | Path | TextIO) -> list[str]:
    if isinstance(source, (str, Path)):
        text = Path(source).read_text()
    else:
        text = source.read()
    out = []
    for raw in text.splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            out.append(line)
    return out


def _fields(tokens: Iterable[str]) -> dict[str, str]:
    out = {}
    for tok in tokens:
        key, sep, val = tok.partition("=")
        if not sep:
            raise FormatError(f"expected key=value, got {tok!r}")
        out[key] = val
    return out


# -- points --------------------------------------------------------------------------


def read_points(source: str | Path | TextIO) -> WeightedPointSet:
    """First line ``dim <n>`` (or just ``<n>``), then one point per line with optional ``w=<weight>``."""
    lines = _lines(source)
    if not lines:
        raise FormatError("empty point file")
    head = lines[0].split()
    if head[0] == "dim":
        head = head[1:]
    if len(head) != 1 or not head[0].isdigit() or int(head[0]) < 1:
        raise FormatError(f"bad header {lines[0]!r}")
    n = int(head[0])
    coords, weights = [], []
    for k, line in enumerate(lines[1:], start=2):
        toks = line.split()
        w = 0.0
        if toks and toks[-1].startswith("w="):
            w = parse_real(toks.pop()[2:])
        if len(toks) != n:
            raise FormatError(f"point {k - 1}: expected {n} coordinates, got {len(toks)}")
        c = [parse_real(t) for t in toks]
        if not all(map(math.isfinite, c + [w])):
            raise FormatError(f"point {k - 1}: non-finite value")
        coords.append(c)
        weights.append(w)
    return WeightedPointSet.from_arrays(coords, weights, dim=n)


def write_points(X: WeightedPointSet, out: TextIO) -> None:
    out.write(f"dim {X.dim}\n")
    for c, w in zip(X.coords, X.weights):
        line = " ".join(repr(float(v)) for v in c)
        if X.is_weighted:
            line += f" w={float(w)!r}"
        out.write(line + "\n")


# -- complexes -------------------------------------------------------------------------


def write_complex(K: FilteredComplex, out: TextIO) -> None:
    n_vertices = len(K.points) if K.points is not None else None
    dim = K.ambient_dim if K.ambient_dim is not None else K.dimension
    label = "wrap" if K.kind == "wrap" else "complex"
    out.write(f"{label} dim={dim} E={fmt_vertex_set(K.selective, n_vertices)} cap={fmt(K.cap)} type={K.kind}\n")
    for Q in K.ordered():
        out.write(f"{fmt_simplex(Q)} {fmt(K.values[Q])}\n")


def complex_text(K: FilteredComplex) -> str:
    buf = io.StringIO()
    write_complex(K, buf)
    return buf.getvalue()


def read_complex(source: str | Path | TextIO) -> FilteredComplex:
    lines = _lines(source)
    if not lines:
        raise FormatError("empty complex file")
    head = lines[0].split()
    if head[0] not in ("complex", "wrap"):
        raise FormatError(f"bad header {lines[0]!r}")
    meta = _fields(head[1:])
    for key in ("dim", "E", "cap"):
        if key not in meta:
            raise FormatError(f"header lacks {key}=")
    values = {}
    for line in lines[1:]:
        toks = line.split()
        if len(toks) != 2:
            raise FormatError(f"bad simplex line {line!r}")
        values[parse_simplex(toks[0])] = parse_real(toks[1])
    n_vertices = len({v for Q in values for v in Q})
    E = parse_vertex_set(meta["E"], n_vertices)
    kind = meta.get("type", "wrap" if head[0] == "wrap" else "selective")
    try:
        dim = int(meta["dim"])
    except ValueError:
        raise FormatError(f"bad dim {meta['dim']!r}") from None
    K = FilteredComplex(None, E, values, parse_real(meta["cap"]), kind, dim)
    if not K.is_closed():
        raise FormatError("complex is not closed under faces")
    return K


# -- gradients and collapses ----------------------------------------------------------


def write_gradient(V: GeneralizedVectorField, E: Iterable[int], out: TextIO) -> None:
    K = V.complex
    n_vertices = len(K.points) if K.points is not None else None
    out.write(f"gradient E={fmt_vertex_set(E, n_vertices)}\n")
    order = sorted(range(len(V.intervals)), key=lambda i: (V.value(i), len(V.intervals[i].lower), V.intervals[i]))
    for i in order:
        iv = V.intervals[i]
        line = f"interval lower={fmt_simplex(iv.lower)} upper={fmt_simplex(iv.upper)} value={fmt(V.value(i))}"
        if iv.singular:
            line += " critical"
        out.write(line + "\n")


def write_collapse(seq: CollapseSequence, out: TextIO) -> None:
    out.write(f"collapse from={seq.source} to={seq.target}\n")
    for k, s in enumerate(seq.steps):
        out.write(f"step {k}: facet={fmt_simplex(s.facet)} cofacet={fmt_simplex(s.cofacet)} value={fmt(s.value)}\n")


def read_collapse(source: str | Path | TextIO) -> CollapseSequence:
    lines = _lines(source)
    if not lines or not lines[0].startswith("collapse"):
        raise FormatError("missing collapse header")
    meta = _fields(lines[0].split()[1:])
    steps = []
    for line in lines[1:]:
        toks = line.split()
        if len(toks) != 5 or toks[0] != "step":
            raise FormatError(f"bad step line {line!r}")
        f = _fields(toks[2:])
        steps.append(CollapseStep(parse_simplex(f["facet"]), parse_simplex(f["cofacet"]), parse_real(f["value"])))
    return CollapseSequence(meta.get("from", "?"), meta.get("to", "?"), steps)


# -- barcodes --------------------------------------------------------------------------


def write_barcode(code: Barcode, out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["dim", "birth", "death"])
    for b in code.bars:
        w.writerow([b.dim, fmt(b.birth), fmt(b.death)])


def read_barcode(source: str | Path | TextIO) -> Barcode:
    text = Path(source).read_text() if isinstance(source, (str, Path)) else source.read()
    rows = list(csv.DictReader(io.StringIO(text)))
    try:
        return Barcode([Bar(int(r["dim"]), float(r["birth"]), float(r["death"])) for r in rows])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad barcode CSV: {exc}") from None
