"""Dense vector times sparse matrix in the I/O model.

Two tiers.  When the vector and the result both fit in memory next to one
block, the vector is pinned and the matrix is scanned once in whatever
order it is stored.  Otherwise a sort-join: order the matrix by the inner
index, stream vector and matrix together writing partial products, sort
those by output index and aggregate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .iosim import Records, RunWriter, blocks_for, external_sort, sort_cost
from .matrix_store import COLUMN_MAJOR, ROW_MAJOR, SparseMatrix, ensure_layout
from .semiring import Semiring

LEFT = "left"    # y S: inner index is the row of S
RIGHT = "right"  # S x: inner index is the column of S


@dataclass
class DenseVector:
    values: np.ndarray
    semiring: Semiring
    on_disk: bool = False

    @property
    def U(self) -> int:
        return len(self.values)

    def nonzero(self):
        mask = ~kernels.is_zero(self.values, self.semiring.kind, self.semiring)
        idx = np.flatnonzero(mask)
        return idx, self.values[idx]


def zero_vector(U: int, sr: Semiring) -> DenseVector:
    return DenseVector(kernels.zeros(U, sr.kind, sr), sr)


def unit_vector(U: int, k: int, sr: Semiring) -> DenseVector:
    v = zero_vector(U, sr)
    v.values[k] = sr.one
    return v


def fits_pinned(U: int, M: int, B: int) -> bool:
    """Vector, result and one matrix block resident at once."""
    return 2 * U + B <= M


def sort_join_cost(n: int, U: int, M: int, B: int, sorted_input: bool = False) -> int:
    """Block transfers of the sort-join tier (used where it is modelled)."""
    first = 0 if sorted_input else sort_cost(n, M, B)
    return first + blocks_for(U, B) + 2 * blocks_for(n, B) + sort_cost(n, M, B) + blocks_for(n, B) + blocks_for(U, B)


def _roles(blk: Records, side: str):
    # (inner index, output index)
    return (blk.i, blk.j) if side == LEFT else (blk.j, blk.i)


def dense_times_sparse(y: DenseVector, S: SparseMatrix, side: str = LEFT) -> DenseVector:
    """``y S`` (``side='left'``) or ``S y`` (``side='right'``)."""
    if y.U != S.U:
        raise ValueError(f"dimension mismatch: vector {y.U}, matrix {S.U}")
    disk, sr = S.disk, S.semiring
    if fits_pinned(S.U, disk.M, disk.B):
        return _pinned(y, S, side)
    return _sort_join(y, S, side)


def _pinned(y: DenseVector, S: SparseMatrix, side: str) -> DenseVector:
    disk, sr, U = S.disk, S.semiring, S.U
    out = kernels.zeros((U, 1), sr.kind, sr)
    Y = y.values.reshape(U, 1)
    with disk.budget.hold(2 * U):
        for blk in S.scan():
            src, dst = _roles(blk, side)
            kernels.scatter(out, Y, src, dst, blk.v, sr.kind, sr, left=(side == RIGHT))
    return DenseVector(out.reshape(U), sr)


def _sort_join(y: DenseVector, S: SparseMatrix, side: str) -> DenseVector:
    disk, sr, U, B = S.disk, S.semiring, S.U, S.disk.B
    S = ensure_layout(S, ROW_MAJOR if side == LEFT else COLUMN_MAJOR)
    # stream y alongside S; the block of y covering the current inner index
    # is charged once per block actually needed
    disk.charge(reads=blocks_for(U, B))
    writer = RunWriter(disk, S.dtype)
    with disk.budget.hold(B):
        for blk in S.scan():
            inner, outer = _roles(blk, side)
            yv = y.values[inner]
            prod = kernels.mul(blk.v, yv, sr.kind, sr) if side == RIGHT else kernels.mul(yv, blk.v, sr.kind, sr)
            writer.append(Records(outer, np.zeros(len(outer), np.int64), np.asarray(prod, dtype=S.dtype)))
    partial = writer.close()
    run = external_sort(disk, partial, lambda r: r.i, S.dtype)
    out = kernels.zeros((U, 1), sr.kind, sr)
    one = kernels.zeros((1, 1), sr.kind, sr)
    one[0, 0] = sr.one
    for blk in disk.scan(run):
        kernels.scatter(out, one, np.zeros(len(blk), np.int64), blk.i, blk.v, sr.kind, sr, left=True)
    disk.free(run)
    disk.charge(writes=blocks_for(U, B))
    return DenseVector(out.reshape(U), sr, on_disk=True)


def _emit_nonzeros(emit: Callable, fixed: int, vec: DenseVector, fixed_is_row: bool) -> int:
    idx, vals = vec.nonzero()
    if not len(idx):
        return 0
    fx = np.full(len(idx), fixed, np.int64)
    if hasattr(emit, "batch"):
        emit.batch(fx, idx, vals) if fixed_is_row else emit.batch(idx, fx, vals)
    else:
        for a, v in zip(idx.tolist(), vals):
            emit(fixed, a, v) if fixed_is_row else emit(a, fixed, v)
    return len(idx)


def row_times_matrix_emit(i: int, cols, vals, C: SparseMatrix, emit: Callable) -> int:
    """Emit every nonzero of ``a_i C`` where row ``i`` of A is ``(cols, vals)``."""
    if len(cols) == 0:
        return 0
    sr = C.semiring
    y = zero_vector(C.U, sr)
    y.values[np.asarray(cols, np.int64)] = vals
    return _emit_nonzeros(emit, i, dense_times_sparse(y, C, LEFT), True)


def matrix_times_col_emit(j: int, rows, vals, A: SparseMatrix, emit: Callable) -> int:
    """Emit every nonzero of ``A c_j`` where column ``j`` of C is ``(rows, vals)``."""
    if len(rows) == 0:
        return 0
    sr = A.semiring
    x = zero_vector(A.U, sr)
    x.values[np.asarray(rows, np.int64)] = vals
    return _emit_nonzeros(emit, j, dense_times_sparse(x, A, RIGHT), False)
