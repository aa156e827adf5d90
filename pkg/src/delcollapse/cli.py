"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
3 degenerate input (run ``perturb`` first).
"""
from __future__ import annotations

import argparse
import contextlib
import logging
import math
import sys
from pathlib import Path
from typing import Iterator, TextIO

from . import formats
from .collapse import HIERARCHY, collapse_hierarchy, verify_collapse, zigzag_connect
from .complexes import INF, FilteredComplex, build_complex
from .geometry import EPS, EPS_GP, DegenerateInput, WeightedPointSet, check_general_position, perturb, random_point_set
from .morse import radius_gradient
from .persistence import compare_barcodes, compute_barcode

logger = logging.getLogger("delcollapse")

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_DEGENERATE = 0, 1, 2, 3
TYPES = ("cech", "delaunay", "delcech", "selective", "wrap")
CECH_WARN = 1_000_000


class UsageError(Exception):
    pass


def parse_cap(text: str) -> float:
    if text.strip().lower() in ("inf", "+inf"):
        return INF
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cap must be a decimal or 'inf', got {text!r}") from None
    if math.isnan(v):
        raise argparse.ArgumentTypeError("cap must not be nan")
    return v


def resolve_E(text: str | None, X: WeightedPointSet) -> frozenset[int]:
    try:
        E = formats.parse_vertex_set(text, len(X))
    except formats.FormatError as exc:
        raise UsageError(f"invalid --E: {exc}") from None
    bad = [v for v in E if v >= len(X)]
    if bad:
        raise UsageError(f"--E names vertices {bad} but there are only {len(X)} points")
    return E


@contextlib.contextmanager
def output(path: str | None) -> Iterator[TextIO]:
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def load_points(path: str, args) -> WeightedPointSet:
    try:
        X = formats.read_points(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    if not getattr(args, "no_gp_check", False):
        bad = check_general_position(X, args.eps_gp)
        if bad:
            raise DegenerateInput(f"{path}: {len(bad)} general position violations, first: {bad[0]}")
    return X


def load_complex(path: str) -> FilteredComplex:
    try:
        return formats.read_complex(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _cech_bound(m: int, max_dim: int | None) -> int:
    top = m if max_dim is None else min(m, max_dim + 1)
    return sum(math.comb(m, k) for k in range(1, top + 1))


def make_complex(X: WeightedPointSet, args, kind: str) -> FilteredComplex:
    if kind != "selective" and args.E is not None:
        raise UsageError("--E is only accepted with --type selective")
    E = resolve_E(args.E, X) if kind == "selective" else None
    if kind == "selective" and args.E is None:
        raise UsageError("--type selective needs --E")
    if kind == "cech" and args.cap == INF and _cech_bound(len(X), args.max_dim) > CECH_WARN:
        logger.warning("Cech complex at cap=inf may have up to %d simplices", _cech_bound(len(X), args.max_dim))
    kw = {"eps": args.eps}
    if kind != "delcech" and kind != "wrap":
        kw["threads"] = args.threads
    K = build_complex(kind, X, args.cap, E=E, max_dim=args.max_dim if kind not in ("delcech", "wrap") else None, **kw)
    if kind == "cech" and len(K) > CECH_WARN:
        logger.warning("Cech complex has %d simplices", len(K))
    return K


# -- commands ---------------------------------------------------------------------------


def cmd_build(args) -> int:
    X = load_points(args.points, args)
    K = make_complex(X, args, args.type)
    with output(args.output) as out:
        formats.write_complex(K, out)
    return EXIT_OK


def cmd_gradient(args) -> int:
    X = load_points(args.points, args)
    E = resolve_E(args.E if args.E is not None else "all", X)
    from .complexes import build_selective_delaunay

    K = build_selective_delaunay(X, E, args.cap, eps=args.eps, threads=args.threads)
    V = radius_gradient(X, E, K, args.eps)
    with output(args.output) as out:
        formats.write_gradient(V, E, out)
    return EXIT_OK


def cmd_collapse(args) -> int:
    src, dst = args.from_type, args.to_type
    if HIERARCHY.index(dst) < HIERARCHY.index(src):
        raise UsageError(f"{dst} is not downstream of {src}; order is {' -> '.join(HIERARCHY)}")
    X = load_points(args.points, args)
    level = collapse_hierarchy(X, args.cap, args.eps)
    seq = level.chain(src, dst)
    report = verify_collapse(level.complexes[src], seq, level.complexes[dst])
    with output(args.output) as out:
        formats.write_collapse(seq, out)
    if report:
        print(f"verified {len(seq)} steps {src} -> {dst}", file=sys.stderr)
        return EXIT_OK
    print(f"verification failed: {report.message}", file=sys.stderr)
    return EXIT_VERIFY


def cmd_persistence(args) -> int:
    if args.complex:
        K = load_complex(args.complex)
    elif args.points:
        K = make_complex(load_points(args.points, args), args, args.type)
    else:
        raise UsageError("persistence needs a points file or --complex")
    code = compute_barcode(K, keep_zero=args.keep_zero)
    for b in code.zero_length:
        logger.debug("zero-length bar %s", b)
    with output(args.output) as out:
        formats.write_barcode(code, out)
    return EXIT_OK


def cmd_compare(args) -> int:
    if args.complex:
        Ks = [load_complex(p) for p in args.complex]
        grounds = {(len({v for Q in K.values for v in Q if len(Q) == 1}), K.ambient_dim) for K in Ks}
        if len(grounds) > 1:
            raise UsageError(f"complexes have different ground sets: {sorted(grounds)}")
        labels = list(args.complex)
    elif args.points:
        X = load_points(args.points, args)
        kinds = args.types.split(",")
        for k in kinds:
            if k not in TYPES or k == "selective":
                raise UsageError(f"unknown type {k!r} in --types")
        Ks = [make_complex(X, args, k) for k in kinds]
        labels = kinds
    else:
        raise UsageError("compare needs a points file or --complex files")
    res = compare_barcodes(Ks)
    with output(args.output) as out:
        out.write("EQUAL\n" if res.ok else "DIFFERENT\n")
        for i, bar in res.diff:
            out.write(f"{labels[i]}: dim={bar.dim} birth={formats.fmt(bar.birth)} death={formats.fmt(bar.death)}\n")
    return EXIT_OK if res.ok else EXIT_VERIFY


def cmd_checkgp(args) -> int:
    try:
        X = formats.read_points(args.points)
    except OSError as exc:
        raise UsageError(f"cannot read {args.points}: {exc.strerror}") from None
    bad = check_general_position(X, args.eps_gp)
    with output(args.output) as out:
        for v in bad:
            out.write(f"{v}\n")
        out.write("OK\n" if not bad else f"{len(bad)} violations; try 'perturb'\n")
    return EXIT_OK if not bad else EXIT_DEGENERATE


def cmd_perturb(args) -> int:
    try:
        X = formats.read_points(args.points)
    except OSError as exc:
        raise UsageError(f"cannot read {args.points}: {exc.strerror}") from None
    if not args.magnitude > 0:
        raise UsageError("--magnitude must be positive")
    Y = perturb(X, args.magnitude, args.seed)
    with output(args.output) as out:
        formats.write_points(Y, out)
    return EXIT_OK


def cmd_generate(args) -> int:
    X = random_point_set(args.n_points, args.dim, args.seed, weighted=args.weighted, eps_gp=args.eps_gp)
    with output(args.output) as out:
        formats.write_points(X, out)
    return EXIT_OK


def cmd_zigzag(args) -> int:
    X = load_points(args.points, argparse.Namespace(no_gp_check=True))
    Y = load_points(args.other, argparse.Namespace(no_gp_check=True))
    try:
        report = zigzag_connect(X, Y, args.cap, args.eps, check_gp=not args.no_gp_check)
    except ValueError as exc:
        if isinstance(exc, DegenerateInput):
            raise
        raise UsageError(str(exc)) from None
    with output(args.output) as out:
        out.write("\n".join(report.lines()) + "\n")
    return EXIT_OK if report.ok else EXIT_VERIFY


# -- parser -----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--cap", type=parse_cap, default=INF, help="squared radius cap (decimal or inf)")
    common.add_argument("--max-dim", type=int, default=None)
    common.add_argument("--eps", type=float, default=EPS, help="classification tolerance")
    common.add_argument("--eps-gp", type=float, default=EPS_GP, help="general position tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("-o", "--output", default=None, help="output file (default stdout)")
    common.add_argument("--no-gp-check", action="store_true", help="skip the general position check")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="delcollapse", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", parents=[common], help="write a filtered complex")
    b.add_argument("points")
    b.add_argument("--type", choices=TYPES, default="delaunay")
    b.add_argument("--E", default=None, help="selective set: comma list, all or empty")
    b.set_defaults(func=cmd_build)

    g = sub.add_parser("gradient", parents=[common], help="write the radius-function gradient")
    g.add_argument("points")
    g.add_argument("--E", default=None, help="selective set (default all)")
    g.set_defaults(func=cmd_gradient)

    c = sub.add_parser("collapse", parents=[common], help="write and verify a collapse sequence")
    c.add_argument("points")
    c.add_argument("--from", dest="from_type", choices=HIERARCHY, default="cech")
    c.add_argument("--to", dest="to_type", choices=HIERARCHY, default="wrap")
    c.set_defaults(func=cmd_collapse)

    ph = sub.add_parser("persistence", parents=[common], help="write a barcode CSV")
    ph.add_argument("points", nargs="?")
    ph.add_argument("--complex", default=None, help="read the filtration from a complex file")
    ph.add_argument("--type", choices=TYPES, default="delaunay")
    ph.add_argument("--E", default=None)
    ph.add_argument("--keep-zero", action="store_true", help="keep zero-length bars")
    ph.set_defaults(func=cmd_persistence)

    cp = sub.add_parser("compare", parents=[common], help="compare barcodes of several filtrations")
    cp.add_argument("points", nargs="?")
    cp.add_argument("--complex", nargs="+", default=None)
    cp.add_argument("--types", default="cech,delcech,delaunay,wrap")
    cp.set_defaults(func=cmd_compare, E=None)

    ck = sub.add_parser("checkgp", parents=[common], help="list general position violations")
    ck.add_argument("points")
    ck.set_defaults(func=cmd_checkgp)

    pt = sub.add_parser("perturb", parents=[common], help="jitter coordinates")
    pt.add_argument("points")
    pt.add_argument("--magnitude", type=float, default=1e-6)
    pt.set_defaults(func=cmd_perturb)

    gn = sub.add_parser("generate", parents=[common], help="random points in general position")
    gn.add_argument("--n-points", type=int, default=8)
    gn.add_argument("--dim", type=int, default=2)
    gn.add_argument("--weighted", action="store_true")
    gn.set_defaults(func=cmd_generate)

    z = sub.add_parser("zigzag", parents=[common], help="verify the diagram connecting two Delaunay complexes")
    z.add_argument("points")
    z.add_argument("other")
    z.set_defaults(func=cmd_zigzag)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DegenerateInput as exc:
        print(f"error: degenerate input: {exc}\nhint: run 'delcollapse perturb' to restore general position", file=sys.stderr)
        return EXIT_DEGENERATE
    except (UsageError, formats.FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
