"""Balanced coloring of rows of A and, per row group, columns of C.

Rows are split recursively by a greedy scan over estimated row output
sizes: rows join the first part while the running estimate stays below
half the scope's estimate, the row that would overflow is removed and
multiplied out directly, and the rest form the second part.  Each row
group then gets fresh column estimates and the same treatment on the
columns of C.  Every (row group, column group) pair is a subproblem whose
product should be small enough for the compressed multiplication.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np

from .config import GAMMA
from .dv_spmm import matrix_times_col_emit, row_times_matrix_emit
from .matrix_store import COLS, ROWS, SparseMatrix, partition, restrict
from .sketch_f0 import estimate_columns

REMOVED = -1
ABSENT = -2


def log2U(U: int) -> float:
    return max(1.0, math.log2(max(U, 2)))


def subproblem_bound(M: int, U: int, gamma: float = GAMMA) -> float:
    return gamma * M / log2U(U)


def choose_color_count(Z_hat: float, M: int, U: int, gamma: float = GAMMA) -> int:
    if Z_hat < 0:
        raise ValueError("Z_hat must be non-negative")
    return max(1, math.ceil(math.sqrt(Z_hat * log2U(U) / (gamma * M)) - 1e-12))


def recursion_depth(c: int) -> int:
    return math.ceil(math.log2(c)) + 2 if c > 1 else 0


def split_once(scope: np.ndarray, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray, Optional[int]]:
    """Greedy balanced split of ``scope`` (indices in order) by estimates ``z``."""
    scope = np.asarray(scope, np.int64)
    empty = scope[:0]
    if len(scope) <= 2:
        return scope[:1], scope[1:], None
    total = float(z[scope].sum())
    if total == 0:
        return scope, empty, None
    run = np.cumsum(z[scope])
    pos = int(np.searchsorted(run, total / 2, side="left"))
    return scope[:pos], scope[pos + 1:], int(scope[pos])


def split_scopes(scope: np.ndarray, z: np.ndarray, depth: int, stop_at: Optional[float] = None,
                 drop_singletons: bool = False):
    """Run ``depth`` levels of :func:`split_once`; returns (groups, removed).

    With ``drop_singletons`` a one-index part still above ``stop_at`` is
    removed; the column phase needs that since nothing splits it later.
    """
    parts = [np.asarray(scope, np.int64)] if len(scope) else []
    removed: List[int] = []
    for _ in range(depth):
        nxt = []
        changed = False
        for s in parts:
            if stop_at is not None and float(z[s].sum()) <= stop_at:
                nxt.append(s)
                continue
            if len(s) == 1:
                if drop_singletons and stop_at is not None:
                    removed.append(int(s[0]))
                    changed = True
                else:
                    nxt.append(s)
                continue
            p1, p2, rem = split_once(s, z)
            if rem is not None:
                removed.append(rem)
            for p in (p1, p2):
                if len(p):
                    nxt.append(p)
            changed = changed or rem is not None or len(p2) > 0
        parts = nxt
        if not changed:
            break
    return parts, removed


@dataclass
class Subproblem:
    Ai: SparseMatrix
    Cij: SparseMatrix
    bound: float
    key: Tuple[int, int]


@dataclass
class ColorPlan:
    c: int
    bound: float
    row_color: np.ndarray
    col_color: Dict[int, np.ndarray] = field(default_factory=dict)
    removed_rows: List[int] = field(default_factory=list)
    removed_cols: Dict[int, List[int]] = field(default_factory=dict)
    n_subproblems: int = 0


def _groups_array(U: int, parts: List[np.ndarray], removed: List[int]) -> np.ndarray:
    g = np.full(U, ABSENT, np.int64)
    for n, p in enumerate(parts):
        g[p] = n
    if removed:
        g[np.asarray(removed, np.int64)] = REMOVED
    return g


def _split_matrix(m: SparseMatrix, colors: np.ndarray, ngroups: int, axis: str):
    """Partition by color, with one extra part collecting removed indices."""
    gid = colors.copy()
    gid[colors == REMOVED] = ngroups
    gid[colors == ABSENT] = -1
    return partition(m, gid, ngroups + 1, axis)


def color_eps(U: int) -> float:
    return 1.0 / log2U(U)


def iter_subproblems(A: SparseMatrix, C: SparseMatrix, Z_hat: float, row_z: np.ndarray, emit: Callable,
                     seed: int, eps: Optional[float] = None, delta: Optional[float] = None, gamma: float = GAMMA,
                     early_stop: Optional[float] = 0.5, plan_out: Optional[list] = None) -> Iterator[Subproblem]:
    """Stream the subproblems; removed rows and columns are emitted on the way.

    ``A`` must be column-major and ``C`` row-major (the layouts the
    compressed multiplication reads).  ``row_z`` are row estimates of AC;
    column estimates per row group are computed here at ``eps``.
    """
    disk, U = A.disk, A.U
    M = disk.M
    eps = color_eps(U) if eps is None else eps
    delta = 1.0 / max(U, 2) if delta is None else delta
    c = choose_color_count(Z_hat, M, U, gamma)
    bound = subproblem_bound(M, U, gamma)
    stop_at = None if early_stop is None else early_stop * bound
    plan = ColorPlan(c, bound, np.full(U, ABSENT, np.int64))
    if plan_out is not None:
        plan_out.append(plan)
    if c == 1:
        plan.row_color[:] = 0
        plan.n_subproblems = 1
        yield Subproblem(A, C, bound, (0, 0))
        return
    depth = recursion_depth(c)
    rows = np.flatnonzero(row_z > 0) if row_z is not None else np.empty(0, np.int64)
    # rows with a zero estimate still have to be multiplied; they ride along
    all_rows = np.unique(A.peek().i)
    rows = np.union1d(rows, all_rows)
    parts, removed = split_scopes(rows, row_z, depth, stop_at)
    plan.row_color = _groups_array(U, parts, removed)
    plan.removed_rows = list(removed)
    pieces = _split_matrix(A, plan.row_color, len(parts), ROWS)
    if removed:
        r = pieces[-1].read_all()
        for i in removed:
            sel = r.i == i
            row_times_matrix_emit(i, r.j[sel], r.v[sel], C, emit)
    for g, Ag in enumerate(pieces[:-1]):
        keys = np.unique(Ag.read_all().j)
        Cg = restrict(C, keys, ROWS)
        est = estimate_columns(Ag, Cg, eps, delta, seed, labels=(2, g))
        z = est.z_hat
        cols = np.union1d(np.flatnonzero(z > 0), np.unique(Cg.peek().j))
        cparts, cremoved = split_scopes(cols, z, depth, stop_at, drop_singletons=True)
        colors = _groups_array(U, cparts, cremoved)
        plan.col_color[g] = colors
        plan.removed_cols[g] = list(cremoved)
        cpieces = _split_matrix(Cg, colors, len(cparts), COLS)
        if cremoved:
            r = cpieces[-1].read_all()
            for j in cremoved:
                sel = r.j == j
                matrix_times_col_emit(j, r.i[sel], r.v[sel], Ag, emit)
        for h, Cgh in enumerate(cpieces[:-1]):
            plan.n_subproblems += 1
            yield Subproblem(Ag, Cgh, bound, (g, h))


def color(A, C, Z_hat, row_z, emit, seed, eps=None, delta=None, gamma=GAMMA, early_stop=0.5):
    """Eager form of :func:`iter_subproblems`: ``(plan, subproblems)``."""
    box: list = []
    subs = list(iter_subproblems(A, C, Z_hat, row_z, emit, seed, eps, delta, gamma, early_stop, box))
    return box[0], subs
