# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels`` for the tagged semirings.

Ring arithmetic runs on uint64 so that overflow wraps with defined
behaviour; generic (untagged) semirings are delegated to the Python code.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t

from . import _pykernels

BACKEND = "cython"

zeros = _pykernels.zeros
is_zero = _pykernels.is_zero
mul = _pykernels.mul
add = _pykernels.add

cdef int64_t INF = 1LL << 62
DEF K_INT = 0
DEF K_BOOL = 1
DEF K_TROP = 2


cdef inline int64_t smul(int64_t a, int64_t b, int kind) nogil:
    if kind == K_INT:
        return <int64_t>(<uint64_t>a * <uint64_t>b)
    if kind == K_BOOL:
        return a & b
    if a >= INF or b >= INF:
        return INF
    return a + b


cdef inline int64_t sadd(int64_t a, int64_t b, int kind) nogil:
    if kind == K_INT:
        return <int64_t>(<uint64_t>a + <uint64_t>b)
    if kind == K_BOOL:
        return a | b
    return a if a <= b else b


def scatter(out, Y, src, dst, vals, kind, sr=None, left=False):
    if kind is None:
        return _pykernels.scatter(out, Y, src, dst, vals, kind, sr, left)
    cdef int64_t[:, ::1] o = out
    cdef const int64_t[:, ::1] y = np.ascontiguousarray(Y, dtype=np.int64)
    cdef const int64_t[::1] s = np.ascontiguousarray(src, dtype=np.int64)
    cdef const int64_t[::1] d = np.ascontiguousarray(dst, dtype=np.int64)
    cdef const int64_t[::1] v = np.ascontiguousarray(vals, dtype=np.int64)
    cdef Py_ssize_t n = s.shape[0], W = o.shape[1], t, w
    cdef int k = kind
    cdef int64_t val, si, di
    with nogil:
        for t in range(n):
            si = s[t]
            di = d[t]
            val = v[t]
            # all kinds here are commutative, so ``left`` needs no branch
            for w in range(W):
                o[di, w] = sadd(o[di, w], smul(y[si, w], val, k), k)
    return out


def bucket_scatter(out, dst, cell, vals, kind, sr=None):
    if kind is None:
        return _pykernels.bucket_scatter(out, dst, cell, vals, kind, sr)
    cdef int64_t[:, ::1] o = out
    cdef const int64_t[::1] d = np.ascontiguousarray(dst, dtype=np.int64)
    cdef const int64_t[::1] c = np.ascontiguousarray(cell, dtype=np.int64)
    cdef const int64_t[::1] v = np.ascontiguousarray(vals, dtype=np.int64)
    cdef Py_ssize_t n = d.shape[0], x
    cdef int k = kind
    with nogil:
        for x in range(n):
            o[d[x], c[x]] = sadd(o[d[x], c[x]], v[x], k)
    return out


def sparse_rows_scatter(out, rowptr, cells, fvals, src, dst, vals, kind, sr=None, left=False):
    if kind is None:
        return _pykernels.sparse_rows_scatter(out, rowptr, cells, fvals, src, dst, vals, kind, sr, left)
    cdef int64_t[:, ::1] o = out
    cdef const int64_t[::1] rp = np.ascontiguousarray(rowptr, dtype=np.int64)
    cdef const int64_t[::1] ce = np.ascontiguousarray(cells, dtype=np.int64)
    cdef const int64_t[::1] fv = np.ascontiguousarray(fvals, dtype=np.int64)
    cdef const int64_t[::1] s = np.ascontiguousarray(src, dtype=np.int64)
    cdef const int64_t[::1] d = np.ascontiguousarray(dst, dtype=np.int64)
    cdef const int64_t[::1] v = np.ascontiguousarray(vals, dtype=np.int64)
    cdef Py_ssize_t n = s.shape[0], x, e, di
    cdef int k = kind
    cdef int64_t val
    with nogil:
        for x in range(n):
            di = d[x]
            val = v[x]
            for e in range(rp[s[x]], rp[s[x] + 1]):
                o[di, ce[e]] = sadd(o[di, ce[e]], smul(fv[e], val, k), k)
    return out


def ladder_counts(bk, co, f_inner, f_key, f_val, s_src, s_dst, s_val, Py_ssize_t U, Py_ssize_t L,
                  kind, sr=None, left=False, table=None):
    """One sketch row at a time, so the working set stays in cache."""
    if kind is None or table is not None:
        return _pykernels.ladder_counts(bk, co, f_inner, f_key, f_val, s_src, s_dst, s_val, U, L, kind, sr, left, table)
    f_inner = np.asarray(f_inner, dtype=np.int64)
    order = np.argsort(f_inner, kind="stable")
    fptr_arr = np.zeros(U + 1, dtype=np.int64)
    np.cumsum(np.bincount(f_inner, minlength=U), out=fptr_arr[1:])
    cdef const int64_t[:, ::1] b = np.ascontiguousarray(bk, dtype=np.int64)
    cdef const int64_t[:, ::1] c = np.ascontiguousarray(co, dtype=np.int64)
    cdef const int64_t[::1] fp = fptr_arr
    cdef const int64_t[::1] fk = np.ascontiguousarray(np.asarray(f_key, dtype=np.int64)[order])
    cdef const int64_t[::1] fv = np.ascontiguousarray(np.asarray(f_val, dtype=np.int64)[order])
    cdef const int64_t[::1] ss = np.ascontiguousarray(s_src, dtype=np.int64)
    cdef const int64_t[::1] sd = np.ascontiguousarray(s_dst, dtype=np.int64)
    cdef const int64_t[::1] sv = np.ascontiguousarray(s_val, dtype=np.int64)
    ks_arr = np.flatnonzero(np.diff(fptr_arr)).astype(np.int64)
    cdef const int64_t[::1] ks = ks_arr
    counts_arr = np.zeros((U, L), dtype=np.int64)
    cdef int64_t[:, ::1] counts = counts_arr
    cdef int k_ = kind
    cdef int64_t z = INF if k_ == K_TROP else 0
    cdef int64_t[:, ::1] FA = np.full((U, L), z, dtype=np.int64)
    cdef unsigned char[:, ::1] seen = np.zeros((U, L), dtype=np.uint8)
    cdef int64_t[::1] tl_m = np.zeros(max(1, fk.shape[0]), dtype=np.int64)
    cdef int64_t[::1] tl_len = np.zeros(U, dtype=np.int64)
    cdef int64_t[:, ::1] V = np.full((U, L), z, dtype=np.int64)
    cdef unsigned char[::1] vrow = np.zeros(U, dtype=np.uint8)
    cdef int64_t[::1] vlist = np.zeros(U, dtype=np.int64)
    cdef Py_ssize_t d = b.shape[0], nks = ks.shape[0], ns = ss.shape[0]
    cdef Py_ssize_t t, q, e, kk, x, j, m, nv, key, n
    cdef int64_t val, acc, cv
    with nogil:
        for t in range(d):
            for q in range(nks):
                kk = ks[q]
                for e in range(fp[kk], fp[kk + 1]):
                    key = fk[e]
                    m = b[t, key]
                    val = smul(c[t, key], fv[e], k_)
                    if not seen[kk, m]:
                        seen[kk, m] = 1
                        tl_m[fp[kk] + tl_len[kk]] = m
                        tl_len[kk] += 1
                    FA[kk, m] = sadd(FA[kk, m], val, k_)
            nv = 0
            for x in range(ns):
                kk = ss[x]
                n = tl_len[kk]
                if n == 0:
                    continue
                j = sd[x]
                if not vrow[j]:
                    vrow[j] = 1
                    vlist[nv] = j
                    nv += 1
                cv = sv[x]
                if k_ == K_INT:
                    for q in range(n):
                        m = tl_m[fp[kk] + q]
                        V[j, m] = <int64_t>(<uint64_t>V[j, m] + <uint64_t>FA[kk, m] * <uint64_t>cv)
                else:
                    for q in range(n):
                        m = tl_m[fp[kk] + q]
                        V[j, m] = sadd(V[j, m], smul(FA[kk, m], cv, k_), k_)
            for q in range(nv):
                j = vlist[q]
                vrow[j] = 0
                acc = z
                for m in range(L - 1, -1, -1):
                    acc = sadd(acc, V[j, m], k_)
                    V[j, m] = z
                    if (acc < INF) if k_ == K_TROP else (acc != 0):
                        counts[j, m] += 1
            for q in range(nks):
                kk = ks[q]
                for e in range(tl_len[kk]):
                    m = tl_m[fp[kk] + e]
                    FA[kk, m] = z
                    seen[kk, m] = 0
                tl_len[kk] = 0
    return counts_arr


def poly_accumulate(acc, a_pos, a_val, c_pos, c_val, Py_ssize_t r, kind, sr=None):
    if kind is None:
        return _pykernels.poly_accumulate(acc, a_pos, a_val, c_pos, c_val, r, kind, sr)
    cdef int64_t[:, ::1] A = acc
    cdef const int64_t[:, ::1] ap = np.ascontiguousarray(a_pos, dtype=np.int64)
    cdef const int64_t[:, ::1] cp = np.ascontiguousarray(c_pos, dtype=np.int64)
    cdef const int64_t[::1] av = np.ascontiguousarray(a_val, dtype=np.int64)
    cdef const int64_t[::1] cv = np.ascontiguousarray(c_val, dtype=np.int64)
    cdef Py_ssize_t reps = A.shape[0], na = av.shape[0], nc = cv.shape[0]
    cdef Py_ssize_t t, x, s, u
    cdef int k = kind
    cdef int64_t z = INF if k == K_TROP else 0
    cdef int64_t cs
    cdef int64_t[::1] colp = np.empty(r, dtype=np.int64)
    cdef int64_t[::1] rowp = np.empty(r, dtype=np.int64)
    with nogil:
        for t in range(reps):
            for s in range(r):
                colp[s] = z
                rowp[s] = z
            for x in range(na):
                colp[ap[t, x]] = sadd(colp[ap[t, x]], av[x], k)
            for x in range(nc):
                rowp[cp[t, x]] = sadd(rowp[cp[t, x]], cv[x], k)
            for s in range(r):
                cs = colp[s]
                for u in range(r):
                    A[t, s + u] = sadd(A[t, s + u], smul(cs, rowp[u], k), k)
    return acc


def poly_accumulate_groups(acc, a_k, a_pos, a_val, c_k, c_pos, c_val, Py_ssize_t r, kind, sr=None):
    if kind is None:
        return _pykernels.poly_accumulate_groups(acc, a_k, a_pos, a_val, c_k, c_pos, c_val, r, kind, sr)
    cdef int64_t[:, ::1] A = acc
    cdef const int64_t[::1] ak = np.ascontiguousarray(a_k, dtype=np.int64)
    cdef const int64_t[::1] ck = np.ascontiguousarray(c_k, dtype=np.int64)
    cdef const int64_t[:, ::1] ap = np.ascontiguousarray(a_pos, dtype=np.int64)
    cdef const int64_t[:, ::1] cp = np.ascontiguousarray(c_pos, dtype=np.int64)
    cdef const int64_t[::1] av = np.ascontiguousarray(a_val, dtype=np.int64)
    cdef const int64_t[::1] cv = np.ascontiguousarray(c_val, dtype=np.int64)
    cdef Py_ssize_t reps = A.shape[0], na = ak.shape[0], nc = ck.shape[0]
    cdef Py_ssize_t xa = 0, xc = 0, ea, ec, t, x, s, u
    cdef int k = kind
    cdef int64_t z = INF if k == K_TROP else 0
    cdef int64_t cs, key
    cdef int64_t[::1] colp = np.empty(max(r, 1), dtype=np.int64)
    cdef int64_t[::1] rowp = np.empty(max(r, 1), dtype=np.int64)
    with nogil:
        while xa < na and xc < nc:
            if ak[xa] < ck[xc]:
                xa += 1
                continue
            if ck[xc] < ak[xa]:
                xc += 1
                continue
            key = ak[xa]
            ea = xa
            while ea < na and ak[ea] == key:
                ea += 1
            ec = xc
            while ec < nc and ck[ec] == key:
                ec += 1
            for t in range(reps):
                for s in range(r):
                    colp[s] = z
                    rowp[s] = z
                for x in range(xa, ea):
                    colp[ap[t, x]] = sadd(colp[ap[t, x]], av[x], k)
                for x in range(xc, ec):
                    rowp[cp[t, x]] = sadd(rowp[cp[t, x]], cv[x], k)
                for s in range(r):
                    cs = colp[s]
                    if cs == z:
                        continue
                    for u in range(r):
                        A[t, s + u] = sadd(A[t, s + u], smul(cs, rowp[u], k), k)
            xa = ea
            xc = ec
    return acc


def majority_decode(acc, row_pos, col_pos, kind, sr=None):
    if kind is None:
        return _pykernels.majority_decode(acc, row_pos, col_pos, kind, sr)
    cdef const int64_t[:, ::1] A = np.ascontiguousarray(acc, dtype=np.int64)
    cdef const int64_t[:, ::1] rp = np.ascontiguousarray(row_pos, dtype=np.int64)
    cdef const int64_t[:, ::1] cp = np.ascontiguousarray(col_pos, dtype=np.int64)
    cdef Py_ssize_t reps = A.shape[0], nr = rp.shape[1], nc = cp.shape[1]
    vals_arr = np.empty((nr, nc), dtype=np.int64)
    found_arr = np.zeros((nr, nc), dtype=np.uint8)
    cdef int64_t[:, ::1] vals = vals_arr
    cdef unsigned char[:, ::1] found = found_arr
    cdef Py_ssize_t a, b, t, count, votes
    cdef int64_t cand, x
    with nogil:
        for a in range(nr):
            for b in range(nc):
                count = 0
                cand = 0
                for t in range(reps):
                    x = A[t, rp[t, a] + cp[t, b]]
                    if count == 0:
                        cand = x
                        count = 1
                    elif x == cand:
                        count += 1
                    else:
                        count -= 1
                votes = 0
                for t in range(reps):
                    if A[t, rp[t, a] + cp[t, b]] == cand:
                        votes += 1
                vals[a, b] = cand
                found[a, b] = 2 * votes > reps
    return vals_arr, found_arr.astype(bool)


def poly_product_add(acc, colp, rowp, kind, sr=None):
    """``acc[t] (+)= colp[t] * rowp[t]`` for dense polynomials of degree < r."""
    if kind is None:
        return _pykernels.poly_product_add(acc, colp, rowp, kind, sr)
    cdef int64_t[:, ::1] A = acc
    cdef const int64_t[:, ::1] P = np.ascontiguousarray(colp, dtype=np.int64)
    cdef const int64_t[:, ::1] Q = np.ascontiguousarray(rowp, dtype=np.int64)
    cdef Py_ssize_t reps = P.shape[0], r = P.shape[1], t, s, u
    cdef int k = kind
    cdef int64_t z = INF if k == K_TROP else 0
    with nogil:
        for t in range(reps):
            for s in range(r):
                if P[t, s] == z:
                    continue
                for u in range(r):
                    if Q[t, u] != z:
                        A[t, s + u] = sadd(A[t, s + u], smul(P[t, s], Q[t, u], k), k)
    return acc
