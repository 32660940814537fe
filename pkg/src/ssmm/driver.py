"""End-to-end multiplication: algorithm choice, phases and I/O reports."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from . import kernels
from .coloring import iter_subproblems
from .compressed_mm import CmmParams, cmm_multiply
from .config import ELL, GAMMA
from .dv_spmm import row_times_matrix_emit
from .iosim import IoTally, Records
from .matrix_store import COLUMN_MAJOR, ROW_MAJOR, SparseMatrix, ensure_layout
from .sketch_f0 import estimate_rows

NAIVE = "naive"
CMM = "cmm"
AUTO = "auto"
EITHER = "either"


class DuplicateEmission(AssertionError):
    pass


class EmitSink:
    """Collects emitted entries; in strict mode a repeated (i, j) raises."""

    def __init__(self, semiring, callback: Optional[Callable] = None, strict: bool = True, keep: bool = True):
        self.semiring = semiring
        self.callback = callback
        self.strict = strict
        self.keep = keep
        self.entries: Dict[tuple, object] = {}
        self.seen: set = set()
        self.count = 0

    def __call__(self, i, j, v) -> None:
        key = (int(i), int(j))
        if key in self.seen:
            if self.strict:
                raise DuplicateEmission(f"entry {key} emitted twice")
        self.seen.add(key)
        self.count += 1
        if self.keep:
            self.entries[key] = v
        if self.callback is not None:
            self.callback(key[0], key[1], v)

    def batch(self, ii, jj, vv) -> None:
        vals = np.asarray(vv).tolist()
        for i, j, v in zip(np.asarray(ii).tolist(), np.asarray(jj).tolist(), vals):
            self(i, j, v)


@dataclass
class RunReport:
    algorithm: str
    U: int
    N: int
    M: int
    B: int
    Z_hat: Optional[float] = None
    io: IoTally = field(default_factory=IoTally)
    phases: Dict[str, IoTally] = field(default_factory=dict)
    colors: Optional[int] = None
    subproblems: int = 0
    emitted: int = 0

    @property
    def bound_naive(self) -> float:
        return self.N ** 2 / (self.M * self.B)

    @property
    def bound_cmm(self) -> float:
        z = self.Z_hat or 0.0
        return self.N * math.sqrt(z) / (self.B * math.sqrt(self.M))


class _Phases:
    def __init__(self, disk, report: RunReport):
        self.disk, self.report = disk, report
        self.start = disk.snapshot()

    def mark(self, name: str, since: IoTally) -> IoTally:
        now = self.disk.snapshot()
        prev = self.report.phases.get(name, IoTally())
        d = now - since
        self.report.phases[name] = IoTally(prev.reads + d.reads, prev.writes + d.writes)
        return now

    def finish(self) -> None:
        self.report.io = self.disk.snapshot() - self.start


def select_algorithm(N: int, M: int, B: int, Z_hat: float) -> str:
    """Both bounds share the factor 1/B, so ``B`` does not move the cut."""
    root = math.sqrt(max(Z_hat, 0.0) * M)
    if 2 * root < N:
        return CMM
    if root > 2 * N:
        return NAIVE
    return EITHER


def pipeline_eps(N: int) -> float:
    return 1.0 / max(1.0, math.log2(max(N, 2)))


def _check_inputs(A: SparseMatrix, C: SparseMatrix) -> None:
    if A.U != C.U:
        raise ValueError(f"dimension mismatch: {A.U} vs {C.U}")
    if A.disk is not C.disk:
        raise ValueError("operands live on different disks")
    if A.semiring.name != C.semiring.name:
        raise ValueError("operands use different semirings")


# -- naive blocked multiplication ---------------------------------------------


def emit_batch(emit, ii, jj, vv) -> None:
    if hasattr(emit, "batch"):
        emit.batch(ii, jj, vv)
    else:
        for i, j, v in zip(np.asarray(ii).tolist(), np.asarray(jj).tolist(), list(vv)):
            emit(i, j, v)


def group_capacity(M: int) -> int:
    return max(1, M // 4)


def _group_times_C(grp: Records, Ccm: SparseMatrix, emit) -> None:
    """Pinned group of rows times C, one scan of C in column-major order."""
    sr = Ccm.semiring
    kind = sr.kind
    disk = Ccm.disk
    U = Ccm.U
    # inner index -> group entries, CSR by k
    order = np.argsort(grp.j, kind="stable")
    gk, gi, gv = grp.j[order], grp.i[order], grp.v[order]
    ptr = np.zeros(U + 1, np.int64)
    np.add.at(ptr, gk + 1, 1)
    ptr = np.cumsum(ptr)
    rows = np.unique(gi)
    slot = np.full(U, -1, np.int64)
    slot[rows] = np.arange(len(rows))
    acc = kernels.zeros(len(rows), kind, sr)
    cur = -1

    def flush(j):
        idx = np.flatnonzero(~kernels.is_zero(acc, kind, sr))
        if len(idx):
            emit_batch(emit, rows[idx], np.full(len(idx), j, np.int64), acc[idx])
        acc[:] = kernels.zeros(len(rows), kind, sr)

    with disk.budget.hold(len(grp) + len(rows)):
        for blk in Ccm.scan():
            disk.budget.check(len(blk))
            for j in np.unique(blk.j):
                j = int(j)
                if j != cur:
                    if cur >= 0:
                        flush(cur)
                    cur = j
                sel = blk.j == j
                ks, cs = blk.i[sel], blk.v[sel]
                lens = ptr[ks + 1] - ptr[ks]
                if not lens.sum():
                    continue
                src = np.repeat(np.arange(len(ks)), lens)
                pos = np.concatenate([np.arange(ptr[k], ptr[k + 1]) for k, n in zip(ks, lens) if n])
                prods = kernels.mul(gv[pos], cs[src], kind, sr)
                kernels.bucket_scatter(acc[None, :], np.zeros(len(pos), np.int64), slot[gi[pos]], prods, kind, sr)
        if cur >= 0:
            flush(cur)


def naive_blocked_multiply(A: SparseMatrix, C: SparseMatrix, emit, report: Optional[RunReport] = None) -> RunReport:
    _check_inputs(A, C)
    disk = A.disk
    report = report or RunReport(NAIVE, A.U, A.n + C.n, disk.M, disk.B)
    ph = _Phases(disk, report)
    t = ph.start
    Arm = ensure_layout(A, ROW_MAJOR)
    Ccm = ensure_layout(C, COLUMN_MAJOR)
    t = ph.mark("sort", t)
    G = group_capacity(disk.M)
    # one pass over A: light rows are packed greedily in index order into
    # groups of at most G entries, each multiplied by one scan of C while
    # pinned; rows longer than G go through the vector path
    group: list = []
    size = 0
    row, row_id = [], -1
    n_groups = n_heavy = 0

    def flush_group():
        nonlocal group, size, n_groups
        if group:
            _group_times_C(Records.concat(group, A.dtype), Ccm, emit)
            n_groups += 1
        group, size = [], 0

    def end_row():
        nonlocal row, size, n_heavy
        if not row:
            return
        r = Records.concat(row, A.dtype)
        row = []
        if len(r) > G:
            flush_group()
            row_times_matrix_emit(row_id, r.j, r.v, Ccm, emit)
            n_heavy += 1
            return
        if size + len(r) > G:
            flush_group()
        group.append(r)
        size += len(r)

    for blk in Arm.scan():
        disk.budget.check(size + sum(len(p) for p in row) + len(blk))
        for i in np.unique(blk.i):
            i = int(i)
            if i != row_id:
                end_row()
                row_id = i
            row.append(blk.take(np.flatnonzero(blk.i == i)))
    end_row()
    flush_group()
    ph.mark("multiply", t)
    report.colors, report.subproblems = None, n_groups + n_heavy
    ph.finish()
    report.emitted = getattr(emit, "count", 0)
    return report


# -- compressed pipeline ------------------------------------------------------


def monte_carlo_multiply(A: SparseMatrix, C: SparseMatrix, emit, seed: int = 0, gamma: float = GAMMA,
                         ell: int = ELL, eps: Optional[float] = None, delta: Optional[float] = None,
                         color_eps: Optional[float] = None,
                         early_stop: Optional[float] = 0.5, report: Optional[RunReport] = None,
                         row_estimates=None) -> RunReport:
    _check_inputs(A, C)
    disk = A.disk
    U, N = A.U, A.n + C.n
    report = report or RunReport(CMM, U, N, disk.M, disk.B)
    ph = _Phases(disk, report)
    t = ph.start
    Acm = ensure_layout(A, COLUMN_MAJOR)
    Crm = ensure_layout(C, ROW_MAJOR)
    t = ph.mark("sort", t)
    eps = eps if eps is not None else pipeline_eps(N)
    delta = delta if delta is not None else 1.0 / max(U, 2)
    if row_estimates is None:
        row_estimates = estimate_rows(Acm, Crm, eps, delta, seed, labels=(1,))
        t = ph.mark("estimate", t)
    report.Z_hat = row_estimates.Z_hat
    params = CmmParams.for_instance(disk.M, U, gamma, ell)
    plan_box: list = []
    stream = iter_subproblems(Acm, Crm, report.Z_hat, row_estimates.z_hat, emit, seed,
                              color_eps, delta, gamma, early_stop, plan_box)
    for sp in stream:
        t = ph.mark("color", t)
        cmm_multiply(sp.Ai, sp.Cij, params, emit, seed, labels=sp.key)
        t = ph.mark("cmm", t)
    ph.mark("color", t)
    plan = plan_box[0]
    report.colors, report.subproblems = plan.c, plan.n_subproblems
    ph.finish()
    report.emitted = getattr(emit, "count", 0)
    return report


def choose_algorithm(A: SparseMatrix, C: SparseMatrix, seed: int = 0):
    """Selection phase: row estimates at eps = 1/log2 N, then the selector.

    Returns ``(choice, estimates, A column-major, C row-major)`` so the
    chosen algorithm can reuse the sorted operands and the estimates.
    """
    _check_inputs(A, C)
    disk = A.disk
    U, N = A.U, A.n + C.n
    Acm = ensure_layout(A, COLUMN_MAJOR)
    Crm = ensure_layout(C, ROW_MAJOR)
    est = estimate_rows(Acm, Crm, pipeline_eps(N), 1.0 / max(U, 2), seed, labels=(1,))
    return select_algorithm(N, disk.M, disk.B, est.Z_hat), est, Acm, Crm


def multiply(A: SparseMatrix, C: SparseMatrix, emit, mode: str = AUTO, seed: int = 0, **kw) -> RunReport:
    """Run ``naive``, ``cmm`` or ``auto`` (estimate, then pick)."""
    _check_inputs(A, C)
    if mode == NAIVE:
        return naive_blocked_multiply(A, C, emit)
    if mode == CMM:
        return monte_carlo_multiply(A, C, emit, seed, **kw)
    if mode != AUTO:
        raise ValueError(f"unknown mode {mode!r}")
    disk = A.disk
    U, N = A.U, A.n + C.n
    start = disk.snapshot()
    choice, est, Acm, Crm = choose_algorithm(A, C, seed)
    select_io = disk.snapshot() - start
    if choice == NAIVE:
        report = RunReport(NAIVE, U, N, disk.M, disk.B, Z_hat=est.Z_hat)
        naive_blocked_multiply(A, C, emit, report)
    else:
        report = RunReport(CMM, U, N, disk.M, disk.B)
        monte_carlo_multiply(Acm, Crm, emit, seed, report=report, row_estimates=est, **kw)
    report.phases["select"] = select_io
    report.io = disk.snapshot() - start
    return report
