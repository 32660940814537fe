"""In-RAM ground truth.  Never charged I/Os; used by tests and ``verify``."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .matrix_store import SparseMatrix

MAX_U = 4096
MAX_NNZ = 10 ** 6


@dataclass
class ExactProduct:
    triples: List[Tuple[int, int, object]]
    row_nnz: np.ndarray
    col_nnz: np.ndarray
    elementary: int

    @property
    def Z(self) -> int:
        return len(self.triples)

    def as_dict(self) -> Dict[Tuple[int, int], object]:
        return {(i, j): v for i, j, v in self.triples}

    def positions(self) -> set:
        return {(i, j) for i, j, _ in self.triples}


def _check(A: SparseMatrix, C: SparseMatrix) -> None:
    if A.U != C.U:
        raise ValueError(f"dimension mismatch: {A.U} vs {C.U}")
    if A.U > MAX_U or A.n > MAX_NNZ or C.n > MAX_NNZ:
        raise ValueError("instance too large for the oracle")


def oracle_multiply(A: SparseMatrix, C: SparseMatrix) -> ExactProduct:
    """Exact AC by a hash join on the inner index."""
    _check(A, C)
    sr = A.semiring
    ra, rc = A.peek(), C.peek()
    by_k = defaultdict(list)
    for k, j, v in zip(rc.i.tolist(), rc.j.tolist(), rc.v.tolist()):
        by_k[k].append((j, v))
    acc: Dict[Tuple[int, int], object] = {}
    elementary = 0
    for i, k, a in zip(ra.i.tolist(), ra.j.tolist(), ra.v.tolist()):
        for j, c in by_k.get(k, ()):
            p = sr.mul(a, c)
            if sr.is_zero(p):
                continue
            elementary += 1
            key = (i, j)
            acc[key] = sr.add(acc[key], p) if key in acc else p
    triples = sorted((i, j, v) for (i, j), v in acc.items() if not sr.is_zero(v))
    U = A.U
    row_nnz = np.zeros(U, np.int64)
    col_nnz = np.zeros(U, np.int64)
    for i, j, _ in triples:
        row_nnz[i] += 1
        col_nnz[j] += 1
    return ExactProduct(triples, row_nnz, col_nnz, elementary)


def triple_loop_multiply(A: SparseMatrix, C: SparseMatrix) -> Dict[Tuple[int, int], object]:
    """Second, independent route: dense triple loop over all (i, k, j)."""
    _check(A, C)
    sr = A.semiring
    da, dc = A.to_dict(), C.to_dict()
    rows = sorted({i for i, _ in da})
    cols = sorted({j for _, j in dc})
    inner = sorted({k for _, k in da} | {k for k, _ in dc})
    out = {}
    for i in rows:
        for j in cols:
            s = sr.zero
            for k in inner:
                a = da.get((i, k), sr.zero)
                c = dc.get((k, j), sr.zero)
                s = sr.add(s, sr.mul(a, c))
            if not sr.is_zero(s):
                out[(i, j)] = s
    return out


def oracle_elementary_count(A: SparseMatrix, C: SparseMatrix) -> int:
    """Sum over k of |column k of A| * |row k of C|."""
    if A.U != C.U:
        raise ValueError("dimension mismatch")
    a_cols = np.bincount(A.peek().j, minlength=A.U)
    c_rows = np.bincount(C.peek().i, minlength=C.U)
    return int(np.dot(a_cols, c_rows))
