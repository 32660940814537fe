"""Sparse matrices as runs of triples on a :class:`SimDisk`.

Also home to the text file format, layout conversion, restriction and the
instance generators (random, lower-bound hard instance, cancellation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .iosim import Records, Run, SimDisk, external_sort
from .semiring import BOOL, INT64, TROPICAL, Semiring, get_semiring

ROW_MAJOR = "row_major"
COLUMN_MAJOR = "column_major"
UNSORTED = "unsorted"
LAYOUTS = (ROW_MAJOR, COLUMN_MAJOR, UNSORTED)

ROWS = "rows"
COLS = "cols"

MAGIC = "SSMM 1"


class FormatError(ValueError):
    """Malformed matrix file."""


@dataclass(frozen=True)
class SparseMatrix:
    disk: SimDisk
    run: Run
    U: int
    semiring: Semiring
    layout: str

    @property
    def n(self) -> int:
        return self.run.n

    @property
    def nnz(self) -> int:
        return self.run.n

    @property
    def dtype(self):
        return self.semiring.dtype

    def peek(self) -> Records:
        """All triples, uncharged.  Oracle and tests only."""
        return self.disk.peek_run(self.run, self.dtype)

    def scan(self):
        return self.disk.scan(self.run)

    def read_all(self) -> Records:
        return self.disk.read_run(self.run, self.dtype)

    def with_run(self, run: Run, layout: str) -> "SparseMatrix":
        return SparseMatrix(self.disk, run, self.U, self.semiring, layout)

    def to_dict(self) -> dict:
        r = self.peek()
        return {(int(a), int(b)): v for a, b, v in zip(r.i.tolist(), r.j.tolist(), r.v.tolist())}


def row_key(U: int):
    return lambda r: r.i * U + r.j


def col_key(U: int):
    return lambda r: r.j * U + r.i


def detect_layout(i: np.ndarray, j: np.ndarray, U: int) -> str:
    if len(i) <= 1:
        return ROW_MAJOR
    rk = i * U + j
    if np.all(rk[1:] > rk[:-1]):
        return ROW_MAJOR
    ck = j * U + i
    if np.all(ck[1:] > ck[:-1]):
        return COLUMN_MAJOR
    return UNSORTED


def _as_values(sr: Semiring, v) -> np.ndarray:
    if sr.dtype is object:
        out = np.empty(len(v), dtype=object)
        out[:] = list(v)
        return out
    return np.asarray(v, dtype=np.int64)


def from_triples(
    disk: SimDisk,
    U: int,
    sr: Semiring,
    i: Sequence[int],
    j: Sequence[int],
    v: Sequence,
    layout: Optional[str] = None,
    charge: bool = False,
) -> SparseMatrix:
    """Build a matrix from triples, validating the stored-triple invariants.

    Input data is installed uncharged unless ``charge`` is set.
    """
    i = np.asarray(i, dtype=np.int64).reshape(-1)
    j = np.asarray(j, dtype=np.int64).reshape(-1)
    v = _as_values(sr, v)
    if not (len(i) == len(j) == len(v)):
        raise ValueError("triple arrays differ in length")
    if len(i):
        if i.min() < 0 or j.min() < 0 or i.max() >= U or j.max() >= U:
            raise ValueError("index out of range")
        keys = i * U + j
        if len(np.unique(keys)) != len(keys):
            raise ValueError("duplicate (i, j) entry")
        if any(sr.is_zero(x) for x in v):
            raise ValueError("explicit zero value in sparse matrix")
    actual = detect_layout(i, j, U)
    if layout is None:
        layout = actual
    elif layout != UNSORTED and layout != actual:
        if not (layout == COLUMN_MAJOR and _is_col_sorted(i, j, U)):
            raise ValueError(f"triples are not in {layout} order")
    recs = Records(i, j, v)
    run = disk.write_run(recs) if charge else disk.install_run(recs)
    return SparseMatrix(disk, run, U, sr, layout)


def _is_col_sorted(i, j, U) -> bool:
    ck = j * U + i
    return bool(np.all(ck[1:] > ck[:-1]))


def from_dense(disk: SimDisk, dense, sr: Semiring, U: Optional[int] = None, layout=ROW_MAJOR):
    """Small helper for tests: every non-zero entry of a nested list."""
    rows = len(dense)
    cols = len(dense[0]) if rows else 0
    U = U if U is not None else max(rows, cols)
    ii, jj, vv = [], [], []
    for a in range(rows):
        for b in range(cols):
            x = dense[a][b]
            if not sr.is_zero(x):
                ii.append(a)
                jj.append(b)
                vv.append(x)
    m = from_triples(disk, U, sr, ii, jj, vv, layout=ROW_MAJOR)
    if layout == COLUMN_MAJOR:
        r = m.peek()
        order = np.lexsort((r.i, r.j))
        m = from_triples(disk, U, sr, r.i[order], r.j[order], r.v[order], layout=COLUMN_MAJOR)
    return m


def empty_like(m: SparseMatrix, layout: Optional[str] = None) -> SparseMatrix:
    return SparseMatrix(m.disk, Run(len(m.disk), 0, 0), m.U, m.semiring, layout or m.layout)


# -- operations on stored matrices -------------------------------------------


def sort_to_layout(m: SparseMatrix, target: str) -> SparseMatrix:
    """External sort into ``target`` order; always charged."""
    if target == ROW_MAJOR:
        key = row_key(m.U)
    elif target == COLUMN_MAJOR:
        key = col_key(m.U)
    else:
        raise ValueError(f"cannot sort to layout {target!r}")
    run = external_sort(m.disk, m.run, key, m.dtype)
    return m.with_run(run, target)


def ensure_layout(m: SparseMatrix, target: str) -> SparseMatrix:
    """Like :func:`sort_to_layout` but free when the tag already matches."""
    if m.layout == target:
        return m
    return sort_to_layout(m, target)


def _filter_pass(m: SparseMatrix, keep_fn, layout) -> SparseMatrix:
    disk = m.disk
    out: List[Records] = []
    pending = Records.empty(m.dtype)
    start = len(disk)
    total = 0
    # one input block plus at most one partial output block in memory
    for blk in m.scan():
        sel = blk.take(keep_fn(blk))
        pending = Records.concat([pending, sel], m.dtype)
        disk.budget.check(len(blk) + len(pending))
        while len(pending) >= disk.B:
            disk.write_block(len(disk), pending.take(slice(0, disk.B)))
            total += disk.B
            pending = pending.take(slice(disk.B, None))
    if len(pending):
        disk.write_block(len(disk), pending)
        total += len(pending)
    return m.with_run(Run(start, total, len(disk) - start), layout)


def restrict(m: SparseMatrix, keep: Iterable[int], axis: str) -> SparseMatrix:
    """Triples whose row (``axis='rows'``) or column index lies in ``keep``."""
    mask = np.zeros(m.U, dtype=bool)
    keep = np.fromiter(keep, dtype=np.int64)
    if len(keep):
        mask[keep] = True
    if axis == ROWS:
        fn = lambda b: mask[b.i]
    elif axis == COLS:
        fn = lambda b: mask[b.j]
    else:
        raise ValueError(axis)
    return _filter_pass(m, fn, m.layout)


def partition(m: SparseMatrix, groups: np.ndarray, ngroups: int, axis: str) -> List[SparseMatrix]:
    """Split ``m`` by the group id of each row or column (``-1`` drops).

    Distribution pass with one output buffer block per group; when more
    groups exist than fit (M/B - 1 buffers) the input is scanned once per
    batch of groups.
    """
    disk = m.disk
    B = disk.B
    per_pass = max(1, disk.M // B - 1)
    results: List[Optional[SparseMatrix]] = [None] * ngroups
    sel = (lambda b: b.i) if axis == ROWS else (lambda b: b.j)
    for g0 in range(0, ngroups, per_pass):
        g1 = min(ngroups, g0 + per_pass)
        bufs = {g: Records.empty(m.dtype) for g in range(g0, g1)}
        blocks = {g: [] for g in range(g0, g1)}
        counts = {g: 0 for g in range(g0, g1)}
        for blk in m.scan():
            gid = groups[sel(blk)]
            for g in np.unique(gid):
                g = int(g)
                if g < g0 or g >= g1:
                    continue
                bufs[g] = Records.concat([bufs[g], blk.take(gid == g)], m.dtype)
            disk.budget.check(len(blk) + sum(len(b) for b in bufs.values()))
            for g, buf in bufs.items():
                while len(buf) >= B:
                    blocks[g].append(len(disk))
                    disk.write_block(len(disk), buf.take(slice(0, B)))
                    counts[g] += B
                    buf = buf.take(slice(B, None))
                bufs[g] = buf
        for g, buf in bufs.items():
            if len(buf):
                blocks[g].append(len(disk))
                disk.write_block(len(disk), buf)
                counts[g] += len(buf)
        for g in range(g0, g1):
            results[g] = m.with_run(disk.relink(blocks[g], counts[g]), m.layout)
    return results


def transpose(m: SparseMatrix) -> SparseMatrix:
    """Swap roles of rows and columns: one scan plus one write pass."""
    flipped = {ROW_MAJOR: COLUMN_MAJOR, COLUMN_MAJOR: ROW_MAJOR, UNSORTED: UNSORTED}[m.layout]
    parts = []
    for blk in m.scan():
        parts.append(Records(blk.j, blk.i, blk.v))
    recs = Records.concat(parts, m.dtype)
    run = m.disk.write_run(recs)
    return m.with_run(run, flipped)


def nonzero_rows(m: SparseMatrix) -> np.ndarray:
    return np.unique(m.peek().i)


def nonzero_cols(m: SparseMatrix) -> np.ndarray:
    return np.unique(m.peek().j)


# -- text format -------------------------------------------------------------


def store(m: SparseMatrix, path) -> None:
    r = m.peek()
    sr = m.semiring
    lines = [MAGIC, f"semiring {sr.name}", f"dim {m.U}", f"nnz {m.n}"]
    lines.extend(f"{a} {b} {sr.format(x)}" for a, b, x in zip(r.i.tolist(), r.j.tolist(), r.v.tolist()))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def load(disk: SimDisk, path) -> SparseMatrix:
    with open(path, "r", newline="") as fh:
        text = fh.read()
    return parse(disk, text)


def parse(disk: SimDisk, text: str) -> SparseMatrix:
    if not text.endswith("\n"):
        raise FormatError("file must end with a newline")
    lines = text[:-1].split("\n")
    if len(lines) < 4 or lines[0] != MAGIC:
        raise FormatError("bad header")
    try:
        kw, name = lines[1].split(" ")
        if kw != "semiring":
            raise FormatError("expected semiring line")
        sr = get_semiring(name)
        kw, dim = lines[2].split(" ")
        if kw != "dim":
            raise FormatError("expected dim line")
        U = int(dim)
        kw, nnz = lines[3].split(" ")
        if kw != "nnz":
            raise FormatError("expected nnz line")
        n = int(nnz)
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    if U < 1 or n < 0:
        raise FormatError("bad dimensions")
    body = lines[4:]
    if len(body) != n:
        raise FormatError(f"expected {n} triples, found {len(body)}")
    ii = np.empty(n, np.int64)
    jj = np.empty(n, np.int64)
    vv = []
    for t, line in enumerate(body):
        parts = line.split(" ")
        if len(parts) != 3:
            raise FormatError(f"bad triple line {t + 5}")
        try:
            ii[t] = int(parts[0])
            jj[t] = int(parts[1])
            vv.append(sr.parse(parts[2]))
        except ValueError as exc:
            raise FormatError(f"line {t + 5}: {exc}") from None
    try:
        return from_triples(disk, U, sr, ii, jj, vv)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


# -- generators --------------------------------------------------------------


def default_sampler(sr: Semiring) -> Callable[[np.random.Generator, int], np.ndarray]:
    """Non-zero values; int64 magnitudes are kept small so sums stay far below 2^40."""
    if sr.name == "int64":
        def sample(rng, n):
            mag = rng.integers(1, 1000, size=n)
            return np.where(rng.random(n) < 0.5, -mag, mag)
    elif sr.name == "bool":
        def sample(rng, n):
            return np.ones(n, dtype=np.int64)
    elif sr.name == "tropical":
        def sample(rng, n):
            return rng.integers(0, 1000, size=n)
    else:
        def sample(rng, n):
            return [sr.one] * n
    return sample


def small_int_sampler(rng: np.random.Generator, n: int) -> np.ndarray:
    """Values in {-2, -1, 1, 2}: frequent cancellation over int64."""
    return rng.choice(np.array([-2, -1, 1, 2]), size=n)


def gen_random(disk: SimDisk, U: int, n: int, sr: Semiring = INT64, seed: int = 0, dist=None) -> SparseMatrix:
    if n > U * U:
        raise ValueError("n exceeds U^2")
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = np.random.default_rng(seed)
    pos = np.sort(rng.choice(U * U, size=n, replace=False)) if n else np.empty(0, np.int64)
    sample = dist or default_sampler(sr)
    vals = np.asarray(sample(rng, n), dtype=np.int64) if sr.dtype is not object else sample(rng, n)
    return from_triples(disk, U, sr, pos // U, pos % U, vals, layout=ROW_MAJOR)


def gen_hard_instance(disk: SimDisk, N: int, Z: int, sr: Semiring = INT64, seed: int = 0):
    """Dense sqrt(Z) x (N/sqrt(Z)) times (N/sqrt(Z)) x sqrt(Z), embedded in U x U.

    A comes back row-major and C column-major.  Values are positive so no
    output entry cancels.
    """
    if N < 1 or Z < 1:
        raise ValueError("N and Z must be positive")
    s = math.isqrt(Z)
    if s * s != Z:
        raise ValueError("sqrt(Z) must be an integer")
    if N % s:
        raise ValueError("N / sqrt(Z) must be an integer")
    if Z >= N * N:
        raise ValueError("Z must be below N^2")
    w = N // s
    U = max(s, w)
    rng = np.random.default_rng(seed)

    def values(n):
        if sr.name == "bool":
            return np.ones(n, dtype=np.int64)
        return rng.integers(1, 10, size=n)

    ai, ak = np.meshgrid(np.arange(s), np.arange(w), indexing="ij")
    A = from_triples(disk, U, sr, ai.ravel(), ak.ravel(), values(N), layout=ROW_MAJOR)
    cj, ck = np.meshgrid(np.arange(s), np.arange(w), indexing="ij")
    C = from_triples(disk, U, sr, ck.ravel(), cj.ravel(), values(N), layout=COLUMN_MAJOR)
    return A, C


def gen_cancellation_instance(disk: SimDisk, U: int, pairs: int, seed: int = 0, sr: Semiring = INT64,
                              full: bool = False):
    """``pairs`` output positions that cancel to zero plus ``pairs`` that do not.

    Returns ``(A, C, Z)`` where ``Z`` is the true output count: ``pairs``,
    or 0 with ``full=True``, which keeps only the cancelling region.

    Rows of the cancelling region share a pair of inner indices k1, k2 with
    A[r,k1] = A[r,k2] = x_r and C[k1,s] = y_s, C[k2,s] = -y_s, so each
    (r, s) collects x_r*y_s + x_r*(-y_s).  The non-zero region uses a
    single inner index per row group.  Regions use disjoint rows and inner
    indices, so no cross terms arise.
    """
    if not sr.has_cancellation:
        raise ValueError(f"semiring {sr.name} has no cancellation")
    if pairs < 0:
        raise ValueError("pairs must be non-negative")
    rng = np.random.default_rng(seed)
    if pairs == 0:
        empty = from_triples(disk, U, sr, [], [], [])
        return empty, from_triples(disk, U, sr, [], [], []), 0
    width = max(1, min(pairs, U, 2 * math.isqrt(pairs)))
    widths = [width] * (pairs // width)
    if pairs % width:
        widths.append(pairs % width)
    n_rows = 2 * len(widths)
    # full-width row groups share inner indices; the remainder row needs its own
    n_inner = 3 * (2 if pairs % width else 1)
    if n_rows > U or n_inner > U or width > U:
        raise ValueError("U too small for the requested number of pairs")
    rows = rng.permutation(U)[:n_rows]
    inner = rng.permutation(U)[:n_inner]
    cols = rng.permutation(U)[:width]
    ai, ak, av, ck, cj, cv = [], [], [], [], [], []

    def mag(n):
        return rng.integers(1, 100, size=n) * rng.choice([-1, 1], size=n)

    rem = pairs % width
    rem_cols = cols[:rem]
    cursor = 0

    def take_inner(count):
        nonlocal cursor
        out = inner[cursor:cursor + count]
        cursor += count
        return out

    for region in ((0,) if full else (0, 1)):
        per = 2 if region == 0 else 1
        k_full = take_inner(per)
        k_rem = take_inner(per) if rem else None
        for g, wdt in enumerate(widths):
            r = rows[region * len(widths) + g]
            x = int(mag(1)[0])
            for k in (k_full if wdt == width else k_rem):
                ai.append(r)
                ak.append(k)
                av.append(x)
        for ks, cset in ((k_full, cols), (k_rem, rem_cols)):
            if ks is None or len(cset) == 0:
                continue
            ys = mag(len(cset))
            for k_pos, k in enumerate(ks):
                for s, y in zip(cset, ys):
                    ck.append(k)
                    cj.append(s)
                    cv.append(int(-y) if k_pos == 1 else int(y))
    A = _sorted(disk, U, sr, ai, ak, av)
    C = _sorted(disk, U, sr, ck, cj, cv)
    return A, C, 0 if full else pairs


def _sorted(disk, U, sr, i, j, v):
    i = np.asarray(i, np.int64)
    j = np.asarray(j, np.int64)
    v = np.asarray(v, np.int64)
    order = np.lexsort((j, i))
    return from_triples(disk, U, sr, i[order], j[order], v[order], layout=ROW_MAJOR)
