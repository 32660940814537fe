"""Reference kernels in Python/numpy.

Same contract as the compiled ``_ckernels`` module.  Element arrays are
int64 for the tagged semirings and object arrays for generic ones, in
which case ``sr`` supplies the operations.

``scatter``
    ``out[dst[t], :] (+)= Y[src[t], :] (x) vals[t]`` for every triple ``t``
    (``vals[t] (x) Y[...]`` when ``left``).  ``out`` and ``Y`` are
    ``(dim, W)`` batches of dense vectors stored index-major.
``poly_accumulate``
    Per repetition, build the two hashed polynomials of degree < r and add
    their schoolbook product into ``acc[rep]`` (length 2r - 1).
``bucket_scatter``
    ``out[dst[x], cell[x]] (+)= vals[x]``.
``sparse_rows_scatter``
    ``out[dst[x], cells[e]] (+)= fvals[e] (x) vals[x]`` for every triple ``x``
    and every stored entry ``e`` of row ``src[x]`` of a CSR matrix given by
    ``rowptr``/``cells``/``fvals`` (``vals[x] (x) fvals[e]`` when ``left``).
``ladder_counts``
    Nonzero-cell counts of a bucketed threshold-ladder sketch of a product
    (see ``sketch_f0``); optionally fills the full cell table.
``poly_accumulate_groups``
    ``poly_accumulate`` for every inner index present on both sides, with
    triples sorted by inner index (``a_k``, ``c_k``).
``majority_decode``
    Boyer-Moore majority, with equality tests only, over the repetitions of
    ``acc[rep, row_pos[rep, a] + col_pos[rep, b]]``.
"""

from __future__ import annotations

import numpy as np

from .semiring import KIND_BOOL, KIND_INT64, KIND_TROPICAL, TROPICAL_INF

BACKEND = "python"

_CHUNK = 1 << 20


def zeros(shape, kind, sr=None):
    if kind == KIND_TROPICAL:
        return np.full(shape, TROPICAL_INF, dtype=np.int64)
    if kind is None:
        out = np.empty(shape, dtype=object)
        out.fill(sr.zero)
        return out
    return np.zeros(shape, dtype=np.int64)


def is_zero(a, kind, sr=None):
    if kind == KIND_TROPICAL:
        return a >= TROPICAL_INF
    if kind is None:
        return np.vectorize(sr.is_zero, otypes=[bool])(a) if np.size(a) else np.zeros(np.shape(a), bool)
    return a == 0


def mul(a, b, kind, sr=None):
    if kind == KIND_INT64:
        with np.errstate(over="ignore"):
            return (np.asarray(a, np.int64).view(np.uint64) * np.asarray(b, np.int64).view(np.uint64)).view(np.int64)
    if kind == KIND_BOOL:
        return np.asarray(a, np.int64) & np.asarray(b, np.int64)
    if kind == KIND_TROPICAL:
        a = np.asarray(a, np.int64)
        b = np.asarray(b, np.int64)
        return np.where((a >= TROPICAL_INF) | (b >= TROPICAL_INF), TROPICAL_INF, a + b)
    return np.frompyfunc(sr.mul, 2, 1)(a, b)


def add(a, b, kind, sr=None):
    if kind == KIND_INT64:
        with np.errstate(over="ignore"):
            return (np.asarray(a, np.int64).view(np.uint64) + np.asarray(b, np.int64).view(np.uint64)).view(np.int64)
    if kind == KIND_BOOL:
        return np.asarray(a, np.int64) | np.asarray(b, np.int64)
    if kind == KIND_TROPICAL:
        return np.minimum(a, b)
    return np.frompyfunc(sr.add, 2, 1)(a, b)


def _scatter_into(out, idx, contrib, kind):
    if kind == KIND_INT64:
        np.add.at(out.view(np.uint64), idx, contrib.view(np.uint64))
    elif kind == KIND_BOOL:
        np.bitwise_or.at(out, idx, contrib)
    else:
        np.minimum.at(out, idx, contrib)


def scatter(out, Y, src, dst, vals, kind, sr=None, left=False):
    n = len(src)
    if n == 0:
        return out
    if kind is None:
        for t in range(n):
            s, d, v = int(src[t]), int(dst[t]), vals[t]
            row = out[d]
            ys = Y[s]
            for w in range(out.shape[1]):
                p = sr.mul(v, ys[w]) if left else sr.mul(ys[w], v)
                row[w] = sr.add(row[w], p)
        return out
    W = max(1, Y.shape[1])
    step = max(1, _CHUNK // W)
    for s0 in range(0, n, step):
        sl = slice(s0, s0 + step)
        ys = Y[src[sl]]
        vs = np.asarray(vals[sl], np.int64)[:, None]
        contrib = mul(vs, ys, kind) if left else mul(ys, vs, kind)
        _scatter_into(out, dst[sl], contrib, kind)
    return out


def bucket_scatter(out, dst, cell, vals, kind, sr=None):
    if kind is None:
        for d, c, v in zip(dst, cell, vals):
            out[d, c] = sr.add(out[d, c], v)
        return out
    flat = out.reshape(-1)
    idx = np.asarray(dst, np.int64) * out.shape[1] + np.asarray(cell, np.int64)
    _scatter_into(flat, idx, np.asarray(vals, np.int64), kind)
    return out


def sparse_rows_scatter(out, rowptr, cells, fvals, src, dst, vals, kind, sr=None, left=False):
    src = np.asarray(src, np.int64)
    if kind is None:
        for s, d, v in zip(src.tolist(), dst, vals):
            for e in range(rowptr[s], rowptr[s + 1]):
                p = sr.mul(v, fvals[e]) if left else sr.mul(fvals[e], v)
                out[d, cells[e]] = sr.add(out[d, cells[e]], p)
        return out
    flat = out.reshape(-1)
    W = out.shape[1]
    lo, hi = rowptr[src], rowptr[src + 1]
    counts = hi - lo
    ends = np.cumsum(counts)
    start = 0
    while start < len(src):
        # chunk so that the expanded index arrays stay near _CHUNK entries
        base = ends[start - 1] if start else 0
        stop = int(np.searchsorted(ends, base + _CHUNK, side="right"))
        stop = max(stop, start + 1)
        c = counts[start:stop]
        total = int(c.sum())
        if total:
            rep = np.repeat(np.arange(start, stop), c)
            offs = np.arange(total) - np.repeat(np.cumsum(c) - c, c)
            e = lo[rep] + offs
            v = np.asarray(vals, np.int64)[rep]
            contrib = mul(v, fvals[e], kind) if left else mul(fvals[e], v, kind)
            _scatter_into(flat, np.asarray(dst, np.int64)[rep] * W + cells[e], contrib, kind)
        start = stop
    return out


_BATCH_CELLS = 1 << 22


def ladder_counts(bk, co, f_inner, f_key, f_val, s_src, s_dst, s_val, U, L, kind, sr=None, left=False, table=None):
    """``bk``/``co``: bucket and coefficient element per (sketch row, key).

    First factor triples ``(f_key, f_inner, f_val)``, second factor triples
    ``(s_src, s_dst, s_val)``; ``left`` puts the second factor's value on the
    left of each product.  Returns ``(U, L)`` counts.
    """
    d = bk.shape[0]
    counts = np.zeros((U, L), np.int64)
    db = max(1, min(d, _BATCH_CELLS // max(1, U * L)))
    f_inner = np.asarray(f_inner, np.int64)
    f_key = np.asarray(f_key, np.int64)
    for t0 in range(0, d, db):
        t1 = min(d, t0 + db)
        nb = t1 - t0
        W = nb * L
        bcell = bk[t0:t1, f_key] + (np.arange(nb) * L)[:, None]
        cval = co[t0:t1, f_key]
        fv = np.broadcast_to(np.asarray(f_val, dtype=cval.dtype), cval.shape)
        prod = mul(cval, fv, kind, sr)
        FA = zeros((U, W), kind, sr)
        bucket_scatter(FA, np.broadcast_to(f_inner, bcell.shape).reshape(-1),
                       bcell.reshape(-1), np.asarray(prod).reshape(-1), kind, sr)
        nzr, nzc = np.nonzero(~is_zero(FA, kind, sr))
        rowptr = np.zeros(U + 1, np.int64)
        np.cumsum(np.bincount(nzr, minlength=U), out=rowptr[1:])
        fvals = FA[nzr, nzc]
        del FA
        V = zeros((U, W), kind, sr)
        sparse_rows_scatter(V, rowptr, nzc.astype(np.int64), fvals, s_src, s_dst, s_val, kind, sr, left=left)
        V3 = V.reshape(U, nb, L)
        for m in range(L - 2, -1, -1):
            V3[:, :, m] = add(V3[:, :, m], V3[:, :, m + 1], kind, sr)
        counts += (~is_zero(V3, kind, sr)).sum(axis=1)
        if table is not None:
            table[:, t0:t1, :L] = V3
    return counts


def poly_accumulate(acc, a_pos, a_val, c_pos, c_val, r, kind, sr=None):
    reps = acc.shape[0]
    for t in range(reps):
        colp = zeros(r, kind, sr)
        rowp = zeros(r, kind, sr)
        if kind is None:
            for x in range(len(a_val)):
                colp[a_pos[t, x]] = sr.add(colp[a_pos[t, x]], a_val[x])
            for y in range(len(c_val)):
                rowp[c_pos[t, y]] = sr.add(rowp[c_pos[t, y]], c_val[y])
            for s in range(r):
                if sr.is_zero(colp[s]):
                    continue
                for u in range(r):
                    acc[t, s + u] = sr.add(acc[t, s + u], sr.mul(colp[s], rowp[u]))
            continue
        _scatter_into(colp, a_pos[t], np.asarray(a_val, np.int64), kind)
        _scatter_into(rowp, c_pos[t], np.asarray(c_val, np.int64), kind)
        if kind == KIND_INT64:
            with np.errstate(over="ignore"):
                prod = np.convolve(colp, rowp)
            acc[t] = add(acc[t], prod, kind)
        elif kind == KIND_BOOL:
            prod = (np.convolve(colp, rowp) > 0).astype(np.int64)
            acc[t] |= prod
        else:
            grid = mul(colp[:, None], rowp[None, :], kind)
            idx = np.add.outer(np.arange(r), np.arange(r))
            np.minimum.at(acc[t], idx.ravel(), grid.ravel())
    return acc


def poly_accumulate_groups(acc, a_k, a_pos, a_val, c_k, c_pos, c_val, r, kind, sr=None):
    a_k = np.asarray(a_k, np.int64)
    c_k = np.asarray(c_k, np.int64)
    common = np.intersect1d(a_k, c_k)
    if not len(common):
        return acc
    a_lo = np.searchsorted(a_k, common, "left")
    a_hi = np.searchsorted(a_k, common, "right")
    c_lo = np.searchsorted(c_k, common, "left")
    c_hi = np.searchsorted(c_k, common, "right")
    for x in range(len(common)):
        sa = slice(a_lo[x], a_hi[x])
        sc = slice(c_lo[x], c_hi[x])
        poly_accumulate(acc, a_pos[:, sa], a_val[sa], c_pos[:, sc], c_val[sc], r, kind, sr)
    return acc


def poly_product_add(acc, colp, rowp, kind, sr=None):
    """``acc[t] (+)= colp[t] * rowp[t]`` for dense polynomials of degree < r."""
    reps, r = colp.shape
    idx = np.add.outer(np.arange(r), np.arange(r)).ravel()
    for t in range(reps):
        grid = mul(colp[t][:, None], rowp[t][None, :], kind, sr).ravel()
        if kind is None:
            for e, g in zip(idx.tolist(), grid):
                acc[t, e] = sr.add(acc[t, e], g)
        else:
            _scatter_into(acc[t], idx, np.asarray(grid, np.int64), kind)
    return acc


def majority_decode(acc, row_pos, col_pos, kind, sr=None):
    reps = acc.shape[0]
    nr, nc = row_pos.shape[1], col_pos.shape[1]
    if kind is None:
        vals = np.empty((nr, nc), dtype=object)
        found = np.zeros((nr, nc), dtype=bool)
        for a in range(nr):
            for b in range(nc):
                seq = [acc[t, row_pos[t, a] + col_pos[t, b]] for t in range(reps)]
                cand, count = None, 0
                for x in seq:
                    if count == 0:
                        cand, count = x, 1
                    elif sr.eq(x, cand):
                        count += 1
                    else:
                        count -= 1
                if cand is not None and sum(1 for x in seq if sr.eq(x, cand)) * 2 > reps:
                    vals[a, b] = cand
                    found[a, b] = True
                else:
                    vals[a, b] = sr.zero
        return vals, found
    V = np.stack([acc[t][row_pos[t][:, None] + col_pos[t][None, :]] for t in range(reps)])
    cand = V[0].copy()
    count = np.ones((nr, nc), np.int64)
    for t in range(1, reps):
        x = V[t]
        fresh = count == 0
        same = x == cand
        cand = np.where(fresh, x, cand)
        count = np.where(fresh, 1, np.where(same, count + 1, count - 1))
    votes = (V == cand[None]).sum(axis=0)
    found = votes * 2 > reps
    return cand, found
