"""Command line: generate instances, multiply, estimate, benchmark.

Exit codes: 0 success, 2 invalid input, 3 verification mismatch.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import math
import os
import sys
from typing import List, Optional, Sequence

from .driver import AUTO, CMM, NAIVE, EmitSink, multiply
from .iosim import IoConfig, SimDisk
from .matrix_store import (FormatError, gen_cancellation_instance, gen_hard_instance, gen_random, load,
                           store)
from .oracle import oracle_multiply
from .semiring import SEMIRINGS, get_semiring
from .sketch_f0 import estimate_columns

EXIT_OK, EXIT_INVALID, EXIT_MISMATCH = 0, 2, 3

CSV_HEADER = ["seed", "algo", "U", "N", "Z_oracle", "Z_hat", "M", "B", "io_reads", "io_writes", "io_total",
              "bound_naive", "bound_cmm", "correct"]

# loading and generating are free of I/O accounting concerns
_SCRATCH = IoConfig(1 << 20, 1 << 10)


class UsageError(Exception):
    pass


def default_seed() -> int:
    raw = os.environ.get("SSMM_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"SSMM_SEED must be an integer, got {raw!r}") from None


def _open_eps(x: str) -> float:
    v = float(x)
    # an accuracy of 1 makes the (1 - eps) side of every band vacuous
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"eps must lie strictly between 0 and 1, got {v}")
    return v


def _unit(x: str) -> float:
    v = float(x)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError(f"value must lie in (0, 1], got {v}")
    return v


def _pos_int(x: str) -> int:
    v = int(x)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def make_disk(M: int, B: int) -> SimDisk:
    try:
        return SimDisk(IoConfig(M, B))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def generate(kind: str, disk: SimDisk, args):
    sr = get_semiring(args.semiring)
    if kind == "random":
        A = gen_random(disk, args.U, args.nnz, sr, args.seed)
        C = gen_random(disk, args.U, args.nnz, sr, args.seed + 1)
        return A, C
    if kind == "hard":
        return gen_hard_instance(disk, args.N, args.Z, sr, args.seed)
    if kind == "cancel":
        A, C, _ = gen_cancellation_instance(disk, args.U, args.pairs, args.seed, sr)
        return A, C
    raise UsageError(f"unknown kind {kind!r}")


def cmd_gen(args) -> int:
    A, C = generate(args.kind, SimDisk(_SCRATCH), args)
    store(A, args.a)
    store(C, args.c)
    print(f"wrote {args.a} ({A.n} triples) and {args.c} ({C.n} triples), U={A.U}")
    return EXIT_OK


def _run(A, C, algo: str, seed: int, verify: bool):
    sink = EmitSink(A.semiring, keep=verify)
    report = multiply(A, C, sink, mode=algo, seed=seed)
    z_oracle, correct = None, "unverified"
    if verify:
        exact = oracle_multiply(A, C)
        z_oracle = exact.Z
        correct = "exact" if sink.entries == exact.as_dict() else "mismatch"
    return report, sink, z_oracle, correct


def _row(seed, report, z_oracle, correct) -> List:
    io = report.io
    return [seed, report.algorithm, report.U, report.N, "" if z_oracle is None else z_oracle,
            "" if report.Z_hat is None else f"{report.Z_hat:.3f}", report.M, report.B, io.reads, io.writes,
            io.total, f"{report.bound_naive:.3f}", f"{report.bound_cmm:.3f}", correct]


def cmd_multiply(args) -> int:
    disk = make_disk(args.M, args.B)
    A, C = load(disk, args.a), load(disk, args.c)
    if A.U != C.U or A.semiring.name != C.semiring.name:
        raise UsageError("operands have different dimensions or semirings")
    report, sink, z_oracle, correct = _run(A, C, args.algo, args.seed, args.verify)
    print(f"algorithm={report.algorithm} U={report.U} N={report.N} emitted={sink.count}")
    if report.Z_hat is not None:
        print(f"Z_hat={report.Z_hat:.3f} colors={report.colors} subproblems={report.subproblems}")
    print(f"io reads={report.io.reads} writes={report.io.writes} total={report.io.total}")
    print(f"bound_naive={report.bound_naive:.3f} bound_cmm={report.bound_cmm:.3f}")
    for name, t in report.phases.items():
        print(f"  {name}: {t.total}")
    if args.verify:
        print(f"verify: {correct} (Z_oracle={z_oracle})")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            w.writerow(_row(args.seed, report, z_oracle, correct))
    return EXIT_MISMATCH if correct == "mismatch" else EXIT_OK


def cmd_estimate(args) -> int:
    disk = make_disk(args.M, args.B)
    A, C = load(disk, args.a), load(disk, args.c)
    if A.U != C.U:
        raise UsageError("operands have different dimensions")
    est = estimate_columns(A, C, args.eps, args.delta, args.seed)
    print(f"Z_hat={est.Z_hat:.3f}")
    if args.columns:
        w = csv.writer(sys.stdout)
        w.writerow(["column", "z_hat"])
        for k, z in enumerate(est.z_hat.tolist()):
            w.writerow([k, f"{z:.3f}"])
    return EXIT_OK


def bench_rows(kind: str, sizes: Sequence, Ms: Sequence[int], Bs: Sequence[int], algos: Sequence[str],
               seeds: Sequence[int], semiring: str = "int64", verify: bool = True):
    """One CSV row per grid point, in grid order."""
    for size, M, B, algo, seed in itertools.product(sizes, Ms, Bs, algos, seeds):
        disk = make_disk(M, B)
        ns = argparse.Namespace(semiring=semiring, seed=seed, **size)
        A, C = generate(kind, disk, ns)
        report, _, z_oracle, correct = _run(A, C, algo, seed, verify)
        yield _row(seed, report, z_oracle, correct)


def _sizes(args) -> List[dict]:
    if args.kind == "hard":
        return [dict(N=n, Z=z) for n in args.N for z in args.Z]
    if args.kind == "random":
        return [dict(U=u, nnz=n) for u in args.U for n in args.nnz]
    return [dict(U=u, pairs=p) for u in args.U for p in args.pairs]


def cmd_bench(args) -> int:
    rows = bench_rows(args.kind, _sizes(args), args.M, args.B, args.algo, args.seeds, args.semiring,
                      not args.no_verify)
    out = open(args.out, "w", newline="") if args.out != "-" else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(CSV_HEADER)
        for row in rows:
            w.writerow(row)
            out.flush()
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ssmm", description="External-memory sparse matrix multiplication.")
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="write a generated instance")
    g.add_argument("kind", choices=["random", "hard", "cancel"])
    g.add_argument("--U", type=_pos_int, default=128)
    g.add_argument("--nnz", type=int, default=500)
    g.add_argument("--N", type=_pos_int, default=1024)
    g.add_argument("--Z", type=_pos_int, default=256)
    g.add_argument("--pairs", type=int, default=8)
    g.add_argument("--semiring", choices=sorted(SEMIRINGS), default="int64")
    g.add_argument("--a", default="A.ssmm")
    g.add_argument("--c", default="C.ssmm")
    g.set_defaults(func=cmd_gen)

    m = sub.add_parser("multiply", help="multiply two stored matrices")
    m.add_argument("a")
    m.add_argument("c")
    m.add_argument("--M", type=_pos_int, default=1 << 12)
    m.add_argument("--B", type=_pos_int, default=1 << 6)
    m.add_argument("--algo", choices=[AUTO, NAIVE, CMM], default=AUTO)
    m.add_argument("--verify", action="store_true")
    m.add_argument("--csv")
    m.set_defaults(func=cmd_multiply)

    e = sub.add_parser("estimate", help="estimate the number of nonzeros of the product")
    e.add_argument("a")
    e.add_argument("c")
    e.add_argument("--eps", type=_open_eps, default=0.25)
    e.add_argument("--delta", type=_unit, default=0.1)
    e.add_argument("--M", type=_pos_int, default=1 << 12)
    e.add_argument("--B", type=_pos_int, default=1 << 6)
    e.add_argument("--columns", action="store_true")
    e.set_defaults(func=cmd_estimate)

    b = sub.add_parser("bench", help="run a grid and write CSV")
    b.add_argument("kind", choices=["random", "hard", "cancel"])
    b.add_argument("--N", type=_pos_int, nargs="*", default=[1 << 10])
    b.add_argument("--Z", type=_pos_int, nargs="*", default=[1 << 8])
    b.add_argument("--U", type=_pos_int, nargs="*", default=[128])
    b.add_argument("--nnz", type=int, nargs="*", default=[500])
    b.add_argument("--pairs", type=int, nargs="*", default=[8])
    b.add_argument("--M", type=_pos_int, nargs="*", default=[1 << 12])
    b.add_argument("--B", type=_pos_int, nargs="*", default=[1 << 6])
    b.add_argument("--algo", choices=[AUTO, NAIVE, CMM], nargs="*", default=[NAIVE, CMM])
    b.add_argument("--seeds", type=int, nargs="*", default=[0])
    b.add_argument("--semiring", choices=sorted(SEMIRINGS), default="int64")
    b.add_argument("--no-verify", action="store_true")
    b.add_argument("--out", default="-")
    b.set_defaults(func=cmd_bench)

    for sp in (g, m, e):
        sp.add_argument("--seed", type=int, default=None)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        if getattr(args, "seed", None) is None and hasattr(args, "seed"):
            args.seed = default_seed()
        return args.func(args)
    except (UsageError, FormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
