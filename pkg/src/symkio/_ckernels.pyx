# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled schedule kernels.

Element-by-element mirror of ``_pykernels``: identical signatures, identical
ledger transitions.  Every load / evict goes through the residency bitmaps
and counters owned by the ``IoLedger`` passed in.
"""

from libc.math cimport sqrt
from libc.stdint cimport int64_t, uint8_t
from libc.stdlib cimport free, malloc

import numpy as np

from .io_model import CapacityError, ResidencyError
from .matrix import NotPositiveDefiniteError

BACKEND = "cython"

cdef double[::1] _EMPTY = np.zeros(1)


cdef struct Ctx:
    int64_t* cnt       # loads, stores, resident, peak
    int64_t* per
    int64_t cap
    bint compute


cdef struct V:
    Py_ssize_t mid
    bint packed
    Py_ssize_t ld
    Py_ssize_t row_off
    Py_ssize_t col_off
    uint8_t* res
    double* data


cdef int _bind_ctx(Ctx* cx, object ledger) except -1:
    cdef int64_t[::1] cnt = ledger.counters
    cdef int64_t[::1] per = ledger.matrix_loads
    cx.cnt = &cnt[0]
    cx.per = &per[0]
    cx.cap = ledger.capacity
    cx.compute = ledger.compute
    return 0


cdef int _bind(V* v, object view, object ledger, object data) except -1:
    cdef uint8_t[::1] res = ledger.resident_maps[view.mid]
    cdef double[::1] d
    if data is None:
        d = _EMPTY
    else:
        d = data
    v.mid = view.mid
    v.packed = view.packed
    v.ld = view.ld
    v.row_off = view.row_off
    v.col_off = view.col_off
    v.res = &res[0]
    v.data = &d[0]
    return 0


cdef inline Py_ssize_t adr(V* v, Py_ssize_t r, Py_ssize_t c) noexcept nogil:
    cdef Py_ssize_t R = v.row_off + r
    cdef Py_ssize_t C = v.col_off + c
    if v.packed:
        return R * (R + 1) // 2 + C
    return R * v.ld + C


cdef int _over(Ctx* cx, V* v, Py_ssize_t off) except -1:
    raise CapacityError(
        f"loading ({v.mid}, {off}) would exceed fast-memory capacity {cx.cap}"
    )


cdef int _missing(V* v, Py_ssize_t off, str what) except -1:
    raise ResidencyError(f"{what} ({v.mid}, {off}) is not in fast memory")


cdef inline int ld1(Ctx* cx, V* v, Py_ssize_t off) except -1:
    if v.res[off]:
        return 0
    if cx.cnt[2] >= cx.cap:
        _over(cx, v, off)
    v.res[off] = 1
    cx.cnt[0] += 1
    cx.cnt[2] += 1
    cx.per[v.mid] += 1
    if cx.cnt[2] > cx.cnt[3]:
        cx.cnt[3] = cx.cnt[2]
    return 0


cdef inline int ev1(Ctx* cx, V* v, Py_ssize_t off, bint dirty) except -1:
    if not v.res[off]:
        _missing(v, off, "evicted element")
    v.res[off] = 0
    cx.cnt[2] -= 1
    if dirty:
        cx.cnt[1] += 1
    return 0


cdef inline int nd1(V* v, Py_ssize_t off) except -1:
    if not v.res[off]:
        _missing(v, off, "operand")
    return 0


cdef Py_ssize_t* _buf(Py_ssize_t n) except NULL:
    cdef Py_ssize_t* p = <Py_ssize_t*> malloc((n if n > 0 else 1) * sizeof(Py_ssize_t))
    if p == NULL:
        raise MemoryError()
    return p


def tb_sweep(ledger, a, c, Py_ssize_t zone, Py_ssize_t k, Py_ssize_t m, Py_ssize_t b,
             double sign, a_data, c_data):
    """All ``zone**2`` triangle blocks of one TBS level (tile side ``b``)."""
    cdef Ctx cx
    cdef V va, vc
    _bind_ctx(&cx, ledger)
    _bind(&va, a, ledger, a_data)
    _bind(&vc, c, ledger, c_data)
    cdef Py_ssize_t kb = k * b
    cdef Py_ssize_t npairs = b * b * (k * (k - 1) // 2)
    cdef Py_ssize_t* rows = _buf(kb)
    cdef Py_ssize_t* aoff = _buf(kb)
    cdef Py_ssize_t* coff = _buf(npairs)
    cdef Py_ssize_t i, j, u, v, x, y, f, base, p, col
    cdef double ax
    try:
        for i in range(zone):
            for j in range(zone):
                for u in range(k):
                    f = j if u == 0 else (i + j * (u - 1)) % zone
                    base = (u * zone + f) * b
                    for x in range(b):
                        rows[u * b + x] = base + x
                p = 0
                for u in range(1, k):
                    for v in range(u):
                        for x in range(b):
                            for y in range(b):
                                coff[p] = adr(&vc, rows[u * b + x], rows[v * b + y])
                                ld1(&cx, &vc, coff[p])
                                p += 1
                for col in range(m):
                    for x in range(kb):
                        aoff[x] = adr(&va, rows[x], col)
                        ld1(&cx, &va, aoff[x])
                    if cx.compute:
                        p = 0
                        for u in range(1, k):
                            for v in range(u):
                                for x in range(b):
                                    nd1(&va, aoff[u * b + x])
                                    ax = va.data[aoff[u * b + x]]
                                    for y in range(b):
                                        nd1(&vc, coff[p])
                                        nd1(&va, aoff[v * b + y])
                                        vc.data[coff[p]] += sign * (ax * va.data[aoff[v * b + y]])
                                        p += 1
                    for x in range(kb):
                        ev1(&cx, &va, aoff[x], 0)
                for p in range(npairs):
                    ev1(&cx, &vc, coff[p], 1)
    finally:
        free(rows)
        free(aoff)
        free(coff)


def square_syrk(ledger, a, c, Py_ssize_t row_lo, Py_ssize_t row_hi, Py_ssize_t m,
                Py_ssize_t t, double sign, a_data, c_data):
    """Lower-triangle SYRK of rows ``[row_lo, row_hi)`` with ``t x t`` result tiles."""
    cdef Ctx cx
    cdef V va, vc
    _bind_ctx(&cx, ledger)
    _bind(&va, a, ledger, a_data)
    _bind(&vc, c, ledger, c_data)
    cdef Py_ssize_t* rows = _buf(2 * t)
    cdef Py_ssize_t* aoff = _buf(2 * t)
    cdef Py_ssize_t* coff = _buf(t * t)
    cdef Py_ssize_t* pi = _buf(t * t)
    cdef Py_ssize_t* pj = _buf(t * t)
    cdef Py_ssize_t rt0, rt1, ct0, ct1, nr, hi, r, i, j, jhi, nc, p, col
    try:
        rt0 = row_lo
        while rt0 < row_hi:
            rt1 = min(rt0 + t, row_hi)
            ct0 = 0
            while ct0 < rt1:
                ct1 = min(ct0 + t, rt1)
                nr = 0
                for r in range(rt0, rt1):
                    rows[nr] = r
                    nr += 1
                hi = min(ct1, rt0)
                for r in range(ct0, hi):
                    rows[nr] = r
                    nr += 1
                nc = 0
                for i in range(rt0, rt1):
                    jhi = min(ct1, i + 1)
                    for j in range(ct0, jhi):
                        coff[nc] = adr(&vc, i, j)
                        pi[nc] = i - rt0
                        pj[nc] = (j - rt0) if j >= rt0 else (rt1 - rt0) + (j - ct0)
                        ld1(&cx, &vc, coff[nc])
                        nc += 1
                for col in range(m):
                    for r in range(nr):
                        aoff[r] = adr(&va, rows[r], col)
                        ld1(&cx, &va, aoff[r])
                    if cx.compute:
                        for p in range(nc):
                            nd1(&vc, coff[p])
                            nd1(&va, aoff[pi[p]])
                            nd1(&va, aoff[pj[p]])
                            vc.data[coff[p]] += sign * (va.data[aoff[pi[p]]] * va.data[aoff[pj[p]]])
                    for r in range(nr):
                        ev1(&cx, &va, aoff[r], 0)
                for p in range(nc):
                    ev1(&cx, &vc, coff[p], 1)
                ct0 += t
            rt0 += t
    finally:
        free(rows)
        free(aoff)
        free(coff)
        free(pi)
        free(pj)


cdef int _solve_tile(Ctx* cx, V* vl, V* vx, Py_ssize_t* tile, Py_ssize_t nr,
                     Py_ssize_t nc, Py_ssize_t ct0, Py_ssize_t ct1,
                     Py_ssize_t* ls) except -1:
    # tile columns p in [ct0, ct1), streaming L[p:ct1, p]
    cdef Py_ssize_t p, q, r, nl, off
    cdef double d, xv
    for p in range(ct0, ct1):
        nl = ct1 - p
        for q in range(nl):
            ls[q] = adr(vl, p + q, p)
            ld1(cx, vl, ls[q])
        if cx.compute:
            d = vl.data[ls[0]]
            if d == 0.0:
                raise ZeroDivisionError(f"zero diagonal element in triangular factor at {p}")
            for r in range(nr):
                off = tile[r * nc + (p - ct0)]
                nd1(vx, off)
                vx.data[off] /= d
                xv = vx.data[off]
                for q in range(1, nl):
                    nd1(vx, tile[r * nc + (p - ct0) + q])
                    vx.data[tile[r * nc + (p - ct0) + q]] -= xv * vl.data[ls[q]]
        for q in range(nl):
            ev1(cx, vl, ls[q], 0)
    return 0


def trsm_tiled(ledger, l, x, Py_ssize_t nrows, Py_ssize_t nb, Py_ssize_t t, l_data, x_data):
    """``X <- X @ inv(L).T`` for an ``nrows x nb`` view X, left-looking over t x t tiles."""
    cdef Ctx cx
    cdef V vl, vx
    _bind_ctx(&cx, ledger)
    _bind(&vl, l, ledger, l_data)
    _bind(&vx, x, ledger, x_data)
    cdef Py_ssize_t* tile = _buf(t * t)
    cdef Py_ssize_t* xs = _buf(t)
    cdef Py_ssize_t* ls = _buf(t)
    cdef Py_ssize_t rt0, rt1, ct0, ct1, nr, nc, r, q, p
    cdef double xv
    try:
        rt0 = 0
        while rt0 < nrows:
            rt1 = min(rt0 + t, nrows)
            nr = rt1 - rt0
            ct0 = 0
            while ct0 < nb:
                ct1 = min(ct0 + t, nb)
                nc = ct1 - ct0
                for r in range(nr):
                    for q in range(nc):
                        tile[r * nc + q] = adr(&vx, rt0 + r, ct0 + q)
                        ld1(&cx, &vx, tile[r * nc + q])
                for p in range(ct0):
                    for r in range(nr):
                        xs[r] = adr(&vx, rt0 + r, p)
                        ld1(&cx, &vx, xs[r])
                    for q in range(nc):
                        ls[q] = adr(&vl, ct0 + q, p)
                        ld1(&cx, &vl, ls[q])
                    if cx.compute:
                        for r in range(nr):
                            xv = vx.data[xs[r]]
                            for q in range(nc):
                                nd1(&vx, tile[r * nc + q])
                                vx.data[tile[r * nc + q]] -= xv * vl.data[ls[q]]
                    for r in range(nr):
                        ev1(&cx, &vx, xs[r], 0)
                    for q in range(nc):
                        ev1(&cx, &vl, ls[q], 0)
                _solve_tile(&cx, &vl, &vx, tile, nr, nc, ct0, ct1, ls)
                for r in range(nr * nc):
                    ev1(&cx, &vx, tile[r], 1)
                ct0 += t
            rt0 += t
    finally:
        free(tile)
        free(xs)
        free(ls)


def trsm_resident(ledger, l, x, Py_ssize_t nrows, Py_ssize_t nb, l_data, x_data):
    """Same result as ``trsm_tiled`` with all of L held in fast memory."""
    cdef Ctx cx
    cdef V vl, vx
    _bind_ctx(&cx, ledger)
    _bind(&vl, l, ledger, l_data)
    _bind(&vx, x, ledger, x_data)
    cdef Py_ssize_t nl = nb * (nb + 1) // 2
    cdef Py_ssize_t* loff = _buf(nl)
    cdef Py_ssize_t* xs = _buf(nb)
    cdef Py_ssize_t r, q, p
    cdef double s
    try:
        for r in range(nb):
            for q in range(r + 1):
                loff[r * (r + 1) // 2 + q] = adr(&vl, r, q)
                ld1(&cx, &vl, loff[r * (r + 1) // 2 + q])
        if cx.compute:
            for p in range(nb):
                if vl.data[loff[p * (p + 1) // 2 + p]] == 0.0:
                    raise ZeroDivisionError(f"zero diagonal element in triangular factor at {p}")
        for r in range(nrows):
            for q in range(nb):
                xs[q] = adr(&vx, r, q)
                ld1(&cx, &vx, xs[q])
            if cx.compute:
                for p in range(nb):
                    nd1(&vl, loff[p * (p + 1) // 2 + p])
                    s = vx.data[xs[p]]
                    for q in range(p):
                        s -= vx.data[xs[q]] * vl.data[loff[p * (p + 1) // 2 + q]]
                    vx.data[xs[p]] = s / vl.data[loff[p * (p + 1) // 2 + p]]
            for q in range(nb):
                ev1(&cx, &vx, xs[q], 1)
        for p in range(nl):
            ev1(&cx, &vl, loff[p], 0)
    finally:
        free(loff)
        free(xs)


def chol_tiled(ledger, a, Py_ssize_t n, Py_ssize_t t, a_data):
    """One-tile left-looking Cholesky of an ``n x n`` packed view, in place."""
    cdef Ctx cx
    cdef V va
    _bind_ctx(&cx, ledger)
    _bind(&va, a, ledger, a_data)
    cdef Py_ssize_t* tile = _buf(t * t)
    cdef Py_ssize_t* rs = _buf(t)
    cdef Py_ssize_t* cs = _buf(t)
    cdef Py_ssize_t ct0, ct1, rt0, rt1, nr, nc, r, q, qhi, p
    cdef bint diag
    cdef double piv, lrp
    cdef double* d = va.data
    try:
        ct0 = 0
        while ct0 < n:
            ct1 = min(ct0 + t, n)
            nc = ct1 - ct0
            rt0 = ct0
            while rt0 < n:
                rt1 = min(rt0 + t, n)
                nr = rt1 - rt0
                diag = rt0 == ct0
                for r in range(nr):
                    qhi = min(nc, r + 1) if diag else nc
                    for q in range(qhi):
                        tile[r * nc + q] = adr(&va, rt0 + r, ct0 + q)
                        ld1(&cx, &va, tile[r * nc + q])
                for p in range(ct0):
                    for r in range(nr):
                        rs[r] = adr(&va, rt0 + r, p)
                        ld1(&cx, &va, rs[r])
                    if not diag:
                        for q in range(nc):
                            cs[q] = adr(&va, ct0 + q, p)
                            ld1(&cx, &va, cs[q])
                    if cx.compute:
                        for r in range(nr):
                            qhi = min(nc, r + 1) if diag else nc
                            for q in range(qhi):
                                nd1(&va, tile[r * nc + q])
                                d[tile[r * nc + q]] -= d[rs[r]] * d[rs[q] if diag else cs[q]]
                    for r in range(nr):
                        ev1(&cx, &va, rs[r], 0)
                    if not diag:
                        for q in range(nc):
                            ev1(&cx, &va, cs[q], 0)
                if diag:
                    if cx.compute:
                        for p in range(nc):
                            nd1(&va, tile[p * nc + p])
                            piv = d[tile[p * nc + p]]
                            if not piv > 0.0:
                                raise NotPositiveDefiniteError(va.col_off + ct0 + p, float(piv))
                            d[tile[p * nc + p]] = sqrt(piv)
                            for r in range(p + 1, nc):
                                d[tile[r * nc + p]] /= d[tile[p * nc + p]]
                            for r in range(p + 1, nc):
                                lrp = d[tile[r * nc + p]]
                                for q in range(p + 1, r + 1):
                                    d[tile[r * nc + q]] -= lrp * d[tile[q * nc + p]]
                else:
                    _solve_tile(&cx, &va, &va, tile, nr, nc, ct0, ct1, cs)
                for r in range(nr):
                    qhi = min(nc, r + 1) if diag else nc
                    for q in range(qhi):
                        ev1(&cx, &va, tile[r * nc + q], 1)
                rt0 += t
            ct0 += t
    finally:
        free(tile)
        free(rs)
        free(cs)
