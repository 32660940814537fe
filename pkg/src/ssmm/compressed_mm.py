"""Single-scan compressed multiplication for products with few nonzeros.

Per repetition ``t`` the sketch is the polynomial

    p_t(x) = sum_k (sum_i A[i,k] x^{h_t(i)}) (sum_j C[k,j] x^{g_t(j)})

of degree below ``2r - 1``.  It is built in one synchronized scan over A
(column-major) and C (row-major).  Entry ``(i, j)`` is read back as the
majority, over repetitions, of the coefficient at ``h_t(i) + g_t(j)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import kernels
from .config import ELL, GAMMA
from .hashing import draw_params, hash_mod, rng_for
from .iosim import Records
from .matrix_store import COLUMN_MAJOR, ROW_MAJOR, SparseMatrix
from .semiring import Semiring

_INF = np.iinfo(np.int64).max


def log2_ceil(U: int) -> int:
    return max(1, math.ceil(math.log2(max(U, 2))))


@dataclass(frozen=True)
class CmmParams:
    gamma: float
    ell: int
    r: int
    reps: int

    @classmethod
    def for_instance(cls, M: int, U: int, gamma: float = GAMMA, ell: int = ELL) -> "CmmParams":
        lg = log2_ceil(U)
        r = max(1, math.floor(4 * gamma * M / lg))
        params = cls(gamma, ell, r, ell * lg)
        if 4 * r * params.reps > M / 2 and r > 1:
            raise ValueError(f"polynomial workspace {4 * r * params.reps} exceeds M/2 = {M / 2}")
        return params

    @property
    def workspace(self) -> int:
        return 4 * self.r * self.reps


@dataclass
class PolySketch:
    coeffs: np.ndarray          # (reps, 2r - 1)
    r: int
    row_hash: np.ndarray        # (reps, 2) parameters of h_t
    col_hash: np.ndarray        # (reps, 2) parameters of g_t
    rows: np.ndarray            # nonzero rows of A seen during the scan
    cols: np.ndarray            # nonzero columns of C seen during the scan
    semiring: Semiring


def draw_hashes(params: CmmParams, seed: int, labels: Sequence[int] = ()):
    rng = rng_for(seed, 7, *labels)
    return draw_params(rng, params.reps), draw_params(rng, params.reps)


def _take(recs: Records, mask) -> Records:
    return recs.take(np.flatnonzero(mask))


def build_polysketch(A: SparseMatrix, C: SparseMatrix, params: CmmParams, seed: int = 0,
                     labels: Sequence[int] = (), hashes=None) -> PolySketch:
    """One synchronized scan; reads every block of A and C exactly once."""
    if A.layout != COLUMN_MAJOR:
        raise ValueError(f"A must be column-major, got {A.layout}")
    if C.layout != ROW_MAJOR:
        raise ValueError(f"C must be row-major, got {C.layout}")
    if A.U != C.U:
        raise ValueError("dimension mismatch")
    sr = A.semiring
    kind = sr.kind
    r, reps = params.r, params.reps
    hA, hC = hashes if hashes is not None else draw_hashes(params, seed, labels)
    acc = kernels.zeros((reps, 2 * r - 1), kind, sr)
    disk = A.disk
    rows: List[np.ndarray] = []
    cols: List[np.ndarray] = []

    if A.n + C.n + params.workspace <= disk.M:
        # both operands fit beside the workspace: same single read of every block
        with disk.budget.hold(params.workspace):
            a, c = A.read_all(), C.read_all()
            disk.budget.check(len(a) + len(c))
            kernels.poly_accumulate_groups(
                acc, a.j, hash_mod(hA, a.i, r), a.v, c.i, hash_mod(hC, c.j, r), c.v, r, kind, sr)
        return PolySketch(acc, r, hA, hC, np.unique(a.i), np.unique(c.j), sr)

    # inner index is j for A (column-major) and i for C (row-major)
    itA, itC = A.scan(), C.scan()
    bufA, bufC = Records.empty(A.dtype), Records.empty(C.dtype)
    doneA, doneC = A.n == 0, C.n == 0
    # polynomials of an inner index whose entries did not fit in one buffer
    openA: Optional[tuple] = None
    openC: Optional[tuple] = None

    def frontier(keys, done, open_):
        if done:
            return _INF
        if len(keys):
            return int(keys[-1])
        return open_[0] if open_ is not None else -1

    def fold(buf_k, buf, idx, hpar, open_):
        k = int(buf_k[0])
        poly = open_[1] if open_ is not None else kernels.zeros((reps, r), kind, sr)
        pos = hash_mod(hpar, idx, r)
        kernels.bucket_scatter(poly, np.repeat(np.arange(reps), len(idx)), pos.reshape(-1),
                               np.tile(np.asarray(buf.v), reps), kind, sr)
        return (k, poly)

    def side_poly(k, buf, keys, idx, hpar, open_):
        mask = keys == k
        poly = open_[1] if open_ is not None and open_[0] == k else kernels.zeros((reps, r), kind, sr)
        if mask.any():
            sel = np.flatnonzero(mask)
            pos = hash_mod(hpar, idx[sel], r)
            kernels.bucket_scatter(poly, np.repeat(np.arange(reps), len(sel)), pos.reshape(-1),
                                   np.tile(np.asarray(buf.v)[sel], reps), kind, sr)
        return poly

    with disk.budget.hold(params.workspace):
        while True:
            fA = frontier(bufA.j, doneA, openA)
            fC = frontier(bufC.i, doneC, openC)
            f = min(fA, fC)
            # inner indices below f are complete on both sides
            for side in ("A", "C"):
                op = openA if side == "A" else openC
                if op is None or op[0] >= f:
                    continue
                k = op[0]
                pa = side_poly(k, bufA, bufA.j, bufA.i, hA, openA)
                pc = side_poly(k, bufC, bufC.i, bufC.j, hC, openC)
                kernels.poly_product_add(acc, pa, pc, kind, sr)
                bufA = _take(bufA, bufA.j != k)
                bufC = _take(bufC, bufC.i != k)
                if openA is not None and openA[0] == k:
                    openA = None
                if openC is not None and openC[0] == k:
                    openC = None
            ma, mc = bufA.j < f, bufC.i < f
            if ma.any() and mc.any():
                a, c = _take(bufA, ma), _take(bufC, mc)
                kernels.poly_accumulate_groups(
                    acc, a.j, hash_mod(hA, a.i, r), a.v, c.i, hash_mod(hC, c.j, r), c.v, r, kind, sr)
            bufA, bufC = _take(bufA, ~ma), _take(bufC, ~mc)
            if doneA and doneC:
                break
            # advance the side that is behind
            read_A = (not doneA) and (fA <= fC or doneC)
            if read_A:
                if len(bufA):
                    openA = fold(bufA.j, bufA, bufA.i, hA, openA)
                    bufA = Records.empty(A.dtype)
                try:
                    blk = next(itA)
                    rows.append(np.unique(blk.i))
                    bufA = blk
                except StopIteration:
                    doneA = True
            else:
                if len(bufC):
                    openC = fold(bufC.i, bufC, bufC.j, hC, openC)
                    bufC = Records.empty(C.dtype)
                try:
                    blk = next(itC)
                    cols.append(np.unique(blk.j))
                    bufC = blk
                except StopIteration:
                    doneC = True
            disk.budget.check(len(bufA) + len(bufC))

    rows_u = np.unique(np.concatenate(rows)) if rows else np.empty(0, np.int64)
    cols_u = np.unique(np.concatenate(cols)) if cols else np.empty(0, np.int64)
    return PolySketch(acc, r, hA, hC, rows_u, cols_u, sr)


def direct_polysketch(A: SparseMatrix, C: SparseMatrix, r: int, hA, hC) -> np.ndarray:
    """The polynomial definition evaluated term by term (test reference)."""
    sr = A.semiring
    reps = len(hA)
    out = np.empty((reps, 2 * r - 1), dtype=object)
    out.fill(sr.zero)
    a, c = A.to_dict(), C.to_dict()
    for t in range(reps):
        for (i, k), av in a.items():
            hi = int(hash_mod(hA[t:t + 1], [i], r)[0, 0])
            for (k2, j), cv in c.items():
                if k2 != k:
                    continue
                e = hi + int(hash_mod(hC[t:t + 1], [j], r)[0, 0])
                out[t, e] = sr.add(out[t, e], sr.mul(av, cv))
    return out


def majority(values: Sequence, eq: Callable = lambda a, b: a == b):
    """Boyer-Moore: the strict majority element or ``None``."""
    cand, count = None, 0
    for v in values:
        if count == 0:
            cand, count = v, 1
        elif eq(v, cand):
            count += 1
        else:
            count -= 1
    if count and sum(1 for v in values if eq(v, cand)) * 2 > len(values):
        return cand
    return None


def recover_and_emit(sk: PolySketch, rows, cols, emit) -> int:
    """Decode every candidate ``(i, j)``; no transfers."""
    rows = np.asarray(rows, np.int64)
    cols = np.asarray(cols, np.int64)
    if not len(rows) or not len(cols):
        return 0
    sr = sk.semiring
    rp = hash_mod(sk.row_hash, rows, sk.r)
    cp = hash_mod(sk.col_hash, cols, sk.r)
    vals, found = kernels.majority_decode(sk.coeffs, rp, cp, sr.kind, sr)
    keep = found & ~kernels.is_zero(vals, sr.kind, sr)
    a, b = np.nonzero(keep)
    if not len(a):
        return 0
    ii, jj, vv = rows[a], cols[b], vals[a, b]
    if hasattr(emit, "batch"):
        emit.batch(ii, jj, vv)
    else:
        for i, j, v in zip(ii.tolist(), jj.tolist(), vv.tolist()):
            emit(i, j, v)
    return len(a)


def cmm_multiply(A: SparseMatrix, C: SparseMatrix, params: CmmParams, emit, seed: int = 0,
                 labels: Sequence[int] = ()) -> int:
    sk = build_polysketch(A, C, params, seed, labels)
    return recover_and_emit(sk, sk.rows, sk.cols, emit)
