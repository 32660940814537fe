"""Linear F0 distinguisher sketches and the threshold-ladder estimator.

A sketch row ``t`` hashes every index ``x`` once with a 4-wise independent
polynomial hash, ``h_t(x) in [0, p)``, and
keeps it for threshold ``T`` when ``h_t(x) < p * min(1, 1/T)``.  A kept index
contributes ``nat_scale(c_t(x), f_x)`` with a random natural coefficient
``c_t(x) in [1, p)``, which makes accidental cancellation of a nonempty
selection unlikely even over a ring.

The thresholds of a ladder share their hashes, so each index falls into one
bucket ``m_t(x)`` (the largest ladder step that still keeps it) and the cell
for step ``m`` is the sum of buckets ``m, m+1, ...``.  That lets the product
sketch ``(F A) C`` be computed with one scatter per nonzero instead of one per
threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _pykernels, kernels
from ._calibration import D_CONST, KAPPA
from .dv_spmm import sort_join_cost
from .hashing import PRIME, draw_params, draw_poly, hash_values, poly_hash, rng_for
from .iosim import blocks_for, sort_cost
from .matrix_store import SparseMatrix
from .semiring import KIND_BOOL, KIND_INT64, KIND_TROPICAL, Semiring, nat_scale

ABOVE = "above"
BELOW = "below"

def check_params(eps: float, delta: float) -> None:
    if not (0 < eps <= 1):
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    if not (0 < delta <= 1):
        raise ValueError(f"delta must lie in (0, 1], got {delta}")


def rows_needed(eps: float, delta_row: float, d_const: float = D_CONST) -> int:
    return max(1, math.ceil(d_const * eps ** -2 * math.log(1.0 / delta_row)))


def ladder(eps: float, U: int) -> np.ndarray:
    top = math.ceil(math.log(max(U, 1)) / math.log1p(eps) - 1e-9) if U > 1 else 0
    return (1.0 + eps) ** np.arange(top + 1)


def tau(T: float, eps: float, kappa: float = KAPPA) -> float:
    q = min(1.0, 1.0 / T)
    return 1.0 - (1.0 - q) ** T * (1.0 + eps * kappa)


def coefficient_elements(coef: np.ndarray, sr: Semiring) -> np.ndarray:
    """``nat_scale(c, one)`` for every coefficient."""
    if sr.kind == KIND_INT64:
        return coef.astype(np.int64)
    if sr.kind == KIND_BOOL:
        return np.ones_like(coef, dtype=np.int64)
    if sr.kind == KIND_TROPICAL:
        return np.zeros_like(coef, dtype=np.int64)
    out = np.empty(coef.shape, dtype=object)
    flat = out.reshape(-1)
    for n, c in enumerate(coef.reshape(-1).tolist()):
        flat[n] = nat_scale(sr, c, sr.one)
    return out


@dataclass
class LadderSketch:
    """``d`` hash rows shared by every threshold of a ladder."""

    eps: float
    delta: float
    d: int
    thresholds: np.ndarray
    seeds: np.ndarray
    coeff_seeds: np.ndarray
    p: int = PRIME
    kappa: float = KAPPA

    @classmethod
    def create(cls, eps, delta, U, seed, labels=(), d_const=D_CONST, kappa=KAPPA, d=None):
        check_params(eps, delta)
        d = d if d is not None else rows_needed(eps, delta / max(U, 1), d_const)
        rng = rng_for(seed, *labels)
        return cls(eps, delta, d, ladder(eps, U), draw_poly(rng, d), draw_params(rng, d), PRIME, kappa)

    @property
    def L(self) -> int:
        return len(self.thresholds)

    def cuts(self) -> np.ndarray:
        return self.p * np.minimum(1.0, 1.0 / self.thresholds)

    def buckets(self, x, rows=slice(None)) -> np.ndarray:
        """Largest ladder step keeping each index, shape ``(d, len(x))``."""
        h = poly_hash(self.seeds[rows], x, self.p)
        neg = -self.cuts()
        return np.searchsorted(neg, -h.astype(np.float64), side="left") - 1

    def coefficients(self, x, rows=slice(None)) -> np.ndarray:
        return hash_values(self.coeff_seeds[rows], x, self.p) % (self.p - 1) + 1

    def at(self, m: int) -> "DistinguisherSketch":
        return DistinguisherSketch(float(self.thresholds[m]), m, self)


@dataclass
class DistinguisherSketch:
    """One threshold of a ladder."""

    T: float
    m: int
    ladder: LadderSketch

    @property
    def d(self) -> int:
        return self.ladder.d

    @property
    def eps(self) -> float:
        return self.ladder.eps

    @property
    def rate(self) -> float:
        return min(1.0, 1.0 / self.T)

    def selection(self, x) -> np.ndarray:
        return self.ladder.buckets(x) >= self.m

    def sketch_vector(self, f: dict, sr: Semiring) -> np.ndarray:
        """Cells for a vector given as ``{index: value}``, straight from the definition."""
        out = kernels.zeros(self.d, sr.kind, sr).astype(object)
        if not f:
            return out
        keys = np.array(sorted(f), dtype=np.int64)
        sel = self.selection(keys)
        coef = self.ladder.coefficients(keys)
        for t in range(self.d):
            acc = sr.zero
            for n, x in enumerate(keys.tolist()):
                if sel[t, n]:
                    acc = sr.add(acc, nat_scale(sr, int(coef[t, n]), f[x]))
            out[t] = acc
        return out

    def decide_count(self, nonzero: int) -> str:
        return ABOVE if nonzero >= tau(self.T, self.eps, self.ladder.kappa) * self.d - 1e-9 else BELOW

    def distinguish(self, cells, sr: Semiring) -> str:
        nz = sum(0 if sr.is_zero(c) else 1 for c in cells)
        return self.decide_count(nz)


@dataclass
class RowEstimates:
    z_hat: np.ndarray
    eps: float
    delta: float
    counts: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def Z_hat(self) -> float:
        return float(self.z_hat.sum())


# -- computing the product sketch ---------------------------------------------


def product_counts(lad: LadderSketch, sr: Semiring, U: int,
                   first, second, keep_table: bool = False):
    """Nonzero-cell counts of the sketch of every column of a product.

    ``first = (sel, inner, vals)`` are the triples of the factor touched by
    the sketch, ``sel`` being the sketched index.  ``second = (inner, out,
    vals, left)`` are the triples of the other factor.  Returns ``(U, L)``
    counts and, when asked, the full ``(U, d, L)`` cell table.
    """
    f_sel, f_inner, f_val = first
    s_src, s_dst, s_val, s_left = second
    L, d = lad.L, lad.d
    keys, f_key = np.unique(np.asarray(f_sel, np.int64), return_inverse=True)
    L_eff = effective_steps(lad, len(keys))
    counts = np.zeros((U, L), np.int64)
    table = kernels.zeros((U, d, L), sr.kind, sr) if keep_table else None
    if len(keys) == 0 or len(s_src) == 0:
        return counts, table
    # deeper buckets fold into the last step that is still evaluated
    bk = np.minimum(lad.buckets(keys), L_eff - 1)
    co = coefficient_elements(lad.coefficients(keys), sr)
    impl = _pykernels if keep_table else kernels
    counts[:, :L_eff] = impl.ladder_counts(
        bk, co, f_inner, f_key, f_val, np.asarray(s_src, np.int64), np.asarray(s_dst, np.int64),
        s_val, U, L_eff, sr.kind, sr, s_left, table)
    return counts, table


def effective_steps(lad: LadderSketch, n_keys: int) -> int:
    """Ladder steps worth evaluating: a column has at most ``n_keys`` nonzeros."""
    top = int(np.searchsorted(lad.thresholds, max(1, n_keys) * (1 + lad.eps), side="right"))
    return max(1, min(lad.L, top))


def read_ladder(lad: LadderSketch, counts: np.ndarray, steps: Optional[int] = None, refine: bool = True) -> np.ndarray:
    """Estimates from per-step nonzero counts.

    The ladder picks the largest step still saying above.  With ``refine``
    the value is then read off the nonzero-cell fraction of that step or the
    next (whichever is better conditioned) by inverting
    ``f = 1 - (1 - q)^F0``; the bare ladder value is the fallback.
    """
    L = lad.L if steps is None else steps
    need = np.array([tau(T, lad.eps, lad.kappa) * lad.d - 1e-9 for T in lad.thresholds])
    above = counts[:, :L] >= need[None, :L]
    z = np.zeros(len(counts))
    any_above = above[:, 0]
    # largest step still saying above
    last = L - 1 - np.argmax(above[:, ::-1], axis=1)
    z[any_above] = lad.thresholds[last[any_above]] * (1 + lad.eps / 2)
    if refine and any_above.any():
        z[any_above] = _refine(lad, counts[any_above], last[any_above], L, z[any_above])
    return z


_LOAD = 1.0 - math.exp(-1.0)


def _refine(lad: LadderSketch, counts: np.ndarray, last: np.ndarray, L: int, fallback: np.ndarray) -> np.ndarray:
    q = np.minimum(1.0, 1.0 / lad.thresholds[:L])
    rows = np.arange(len(counts))
    best = fallback.copy()
    score = np.full(len(counts), np.inf)
    for step in (last, np.minimum(last + 1, L - 1)):
        f = counts[rows, step] / lad.d
        qs = q[step]
        ok = (qs < 1.0) & (f > 0) & (f < 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            est = np.log1p(-f) / np.log1p(-qs)
        dist = np.abs(f - _LOAD)
        take = ok & (dist < score)
        best[take] = est[take]
        score[take] = dist[take]
    return best


# -- I/O accounting -------------------------------------------------------------


def pinned_width(U: int, M: int, B: int) -> int:
    """Sketch vectors that fit in memory at once (input image plus output image)."""
    return max(0, (M - 2 * B) // (2 * U)) if U else 0


def sketch_io_cost(nA: int, nC: int, U: int, M: int, B: int, vectors: int) -> int:
    if vectors == 0 or (nA == 0 and nC == 0):
        return 0
    W = pinned_width(U, M, B)
    if W >= 1:
        return math.ceil(vectors / W) * (blocks_for(nA, B) + blocks_for(nC, B))
    per = sort_join_cost(nA, U, M, B, True) + sort_join_cost(nC, U, M, B, True)
    return sort_cost(nA, M, B) + sort_cost(nC, M, B) + vectors * per


def _charge(A: SparseMatrix, C: SparseMatrix, vectors: int) -> None:
    """One real pass over A and C with the batch pinned, the rest charged."""
    disk = A.disk
    U, M, B = A.U, disk.M, disk.B
    total = sketch_io_cost(A.n, C.n, U, M, B, vectors)
    if total == 0:
        return
    W = pinned_width(U, M, B)
    before = disk.snapshot()
    if W >= 1:
        with disk.budget.hold(2 * min(W, vectors) * U):
            for _ in A.scan():
                pass
            for _ in C.scan():
                pass
    done = (disk.snapshot() - before).total
    disk.charge(reads=max(0, total - done))


# -- estimators -----------------------------------------------------------------


def _triples(m: SparseMatrix):
    r = m.peek()
    return r.i, r.j, r.v


def _estimate(A: SparseMatrix, C: SparseMatrix, eps, delta, seed, axis, labels, d_const, kappa, d, keep_table):
    if A.U != C.U:
        raise ValueError(f"dimension mismatch: {A.U} vs {C.U}")
    sr, U = A.semiring, A.U
    lad = LadderSketch.create(eps, delta, U, seed, labels=(axis, *labels), d_const=d_const, kappa=kappa, d=d)
    ai, ak, av = _triples(A)
    ck, cj, cv = _triples(C)
    if axis == 0:
        # columns of AC: sketch over rows of A, then multiply by C on the right
        counts, table = product_counts(lad, sr, U, (ai, ak, av), (ck, cj, cv, False), keep_table)
        n_keys = len(np.unique(ai))
    else:
        counts, table = product_counts(lad, sr, U, (cj, ck, cv), (ak, ai, av, True), keep_table)
        n_keys = len(np.unique(cj))
    L_eff = effective_steps(lad, n_keys)
    _charge(A, C, lad.d * L_eff if n_keys else 0)
    est = RowEstimates(read_ladder(lad, counts, L_eff), eps, delta, counts)
    return est, lad, table


def estimate_columns(A, C, eps, delta, seed, labels=(), d_const=D_CONST, kappa=KAPPA, d=None) -> RowEstimates:
    """Per-column nonzero estimates of AC."""
    return _estimate(A, C, eps, delta, seed, 0, labels, d_const, kappa, d, False)[0]


def estimate_rows(A, C, eps, delta, seed, labels=(), d_const=D_CONST, kappa=KAPPA, d=None) -> RowEstimates:
    """Per-row nonzero estimates of AC."""
    return _estimate(A, C, eps, delta, seed, 1, labels, d_const, kappa, d, False)[0]


def estimate_total(A, C, eps, delta, seed, labels=(), d_const=D_CONST, kappa=KAPPA, d=None) -> float:
    return estimate_columns(A, C, eps, delta, seed, labels, d_const, kappa, d).Z_hat


def sketch_product(A, C, eps, delta, seed, labels=(), d=None, d_const=D_CONST):
    """Full column sketch table ``(U, d, L)`` and its ladder, for inspection."""
    est, lad, table = _estimate(A, C, eps, delta, seed, 0, labels, d_const, KAPPA, d, True)
    return table, lad
