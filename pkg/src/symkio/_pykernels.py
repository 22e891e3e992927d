"""Pure-Python (numpy) schedule kernels.

Same signatures and the same ledger transitions as the compiled core in
``_ckernels.pyx``; transitions are batched per sliver with numpy instead of
issued one element at a time.  Every batch holds distinct addresses, so the
counters end up identical to the element-by-element version.
"""

from __future__ import annotations

import math

import numpy as np

from .io_model import LOADS, PEAK, RESIDENT, STORES, CapacityError, ResidencyError
from .matrix import NotPositiveDefiniteError

BACKEND = "python"


class _Fast:
    """Batched view of an IoLedger's state."""

    def __init__(self, ledger):
        self.res = ledger.resident_maps
        self.cnt = ledger.counters
        self.per = ledger.matrix_loads
        self.cap = ledger.capacity

    def load(self, mid, offs):
        res = self.res[mid]
        new = offs[res[offs] == 0]
        n = new.size
        if n == 0:
            return
        cnt = self.cnt
        if cnt[RESIDENT] + n > self.cap:
            raise CapacityError(
                f"loading {n} elements of matrix {mid} would exceed capacity {self.cap}"
            )
        res[new] = 1
        cnt[LOADS] += n
        cnt[RESIDENT] += n
        self.per[mid] += n
        if cnt[RESIDENT] > cnt[PEAK]:
            cnt[PEAK] = cnt[RESIDENT]

    def evict(self, mid, offs, dirty):
        res = self.res[mid]
        if not res[offs].all():
            bad = int(offs[res[offs] == 0][0])
            raise ResidencyError(f"evicting non-resident element ({mid}, {bad})")
        res[offs] = 0
        self.cnt[RESIDENT] -= offs.size
        if dirty:
            self.cnt[STORES] += offs.size

    def need(self, mid, offs):
        res = self.res[mid]
        if not res[offs].all():
            bad = int(offs[res[offs] == 0][0])
            raise ResidencyError(f"operand ({mid}, {bad}) is not in fast memory")


def _addr(view, rows, cols):
    R = view.row_off + np.asarray(rows, dtype=np.int64)
    C = view.col_off + np.asarray(cols, dtype=np.int64)
    if view.packed:
        return R * (R + 1) // 2 + C
    return R * view.ld + C


def tb_sweep(ledger, a, c, zone, k, m, b, sign, a_data, c_data):
    """All ``zone**2`` triangle blocks of one TBS level (tile side ``b``)."""
    fast = _Fast(ledger)
    compute = ledger.compute
    us, vs = np.tril_indices(k, -1)
    e = np.arange(b)
    px = (us[:, None, None] * b + e[None, :, None] + 0 * e[None, None, :]).ravel()
    py = (vs[:, None, None] * b + 0 * e[None, :, None] + e[None, None, :]).ravel()
    steps = np.arange(1, k) - 1
    zbase = np.arange(k) * zone
    for i in range(zone):
        for j in range(zone):
            f = np.empty(k, dtype=np.int64)
            f[0] = j
            f[1:] = (i + j * steps) % zone
            rows = ((zbase + f)[:, None] * b + e).ravel()
            c_offs = _addr(c, rows[px], rows[py])
            fast.load(c.mid, c_offs)
            for col in range(m):
                a_offs = _addr(a, rows, np.full(rows.size, col))
                fast.load(a.mid, a_offs)
                if compute:
                    fast.need(c.mid, c_offs)
                    vals = a_data[a_offs]
                    c_data[c_offs] += sign * (vals[px] * vals[py])
                fast.evict(a.mid, a_offs, False)
            fast.evict(c.mid, c_offs, True)


def square_syrk(ledger, a, c, row_lo, row_hi, m, t, sign, a_data, c_data):
    """Lower-triangle SYRK of rows ``[row_lo, row_hi)`` with ``t x t`` result tiles."""
    fast = _Fast(ledger)
    compute = ledger.compute
    for rt0 in range(row_lo, row_hi, t):
        rt1 = min(rt0 + t, row_hi)
        for ct0 in range(0, rt1, t):
            ct1 = min(ct0 + t, rt1)
            ii, jj = np.meshgrid(np.arange(rt0, rt1), np.arange(ct0, ct1), indexing="ij")
            keep = jj <= ii
            ii, jj = ii[keep], jj[keep]
            rows = np.concatenate([np.arange(rt0, rt1), np.arange(ct0, min(ct1, rt0))])
            pos = np.empty(rt1, dtype=np.int64)
            pos[rows] = np.arange(rows.size)
            pi, pj = pos[ii], pos[jj]
            c_offs = _addr(c, ii, jj)
            fast.load(c.mid, c_offs)
            for col in range(m):
                a_offs = _addr(a, rows, np.full(rows.size, col))
                fast.load(a.mid, a_offs)
                if compute:
                    fast.need(c.mid, c_offs)
                    vals = a_data[a_offs]
                    c_data[c_offs] += sign * (vals[pi] * vals[pj])
                fast.evict(a.mid, a_offs, False)
            fast.evict(c.mid, c_offs, True)


def trsm_tiled(ledger, l, x, nrows, nb, t, l_data, x_data):
    """``X <- X @ inv(L).T`` for an ``nrows x nb`` view X, left-looking over t x t tiles."""
    fast = _Fast(ledger)
    compute = ledger.compute
    for rt0 in range(0, nrows, t):
        rt1 = min(rt0 + t, nrows)
        rows = np.arange(rt0, rt1)
        for ct0 in range(0, nb, t):
            ct1 = min(ct0 + t, nb)
            cols = np.arange(ct0, ct1)
            tile = _addr(x, np.repeat(rows, cols.size), np.tile(cols, rows.size)).reshape(
                rows.size, cols.size
            )
            fast.load(x.mid, tile.ravel())
            for p in range(ct0):
                xs = _addr(x, rows, np.full(rows.size, p))
                ls = _addr(l, cols, np.full(cols.size, p))
                fast.load(x.mid, xs)
                fast.load(l.mid, ls)
                if compute:
                    fast.need(x.mid, tile.ravel())
                    x_data[tile] -= np.outer(x_data[xs], l_data[ls])
                fast.evict(x.mid, xs, False)
                fast.evict(l.mid, ls, False)
            _solve_tile(fast, compute, l, x, tile, ct0, ct1, l_data, x_data)
            fast.evict(x.mid, tile.ravel(), True)


def _solve_tile(fast, compute, l, x, tile, ct0, ct1, l_data, x_data):
    # tile columns p in [ct0, ct1), streaming L[p:ct1, p]
    for p in range(ct0, ct1):
        ls = _addr(l, np.arange(p, ct1), np.full(ct1 - p, p))
        fast.load(l.mid, ls)
        if compute:
            fast.need(x.mid, tile.ravel())
            diag = l_data[ls[0]]
            if diag == 0.0:
                raise ZeroDivisionError(f"zero diagonal element in triangular factor at {p}")
            col = tile[:, p - ct0]
            x_data[col] /= diag
            if p + 1 < ct1:
                x_data[tile[:, p + 1 - ct0 :]] -= np.outer(x_data[col], l_data[ls[1:]])
        fast.evict(l.mid, ls, False)


def trsm_resident(ledger, l, x, nrows, nb, l_data, x_data):
    """Same result as ``trsm_tiled`` with all of L held in fast memory."""
    fast = _Fast(ledger)
    compute = ledger.compute
    li, lj = np.tril_indices(nb)
    l_offs = _addr(l, li, lj)
    fast.load(l.mid, l_offs)
    if compute:
        low = np.zeros((nb, nb))
        low[li, lj] = l_data[l_offs]
        if np.any(np.diag(low) == 0.0):
            p = int(np.flatnonzero(np.diag(low) == 0.0)[0])
            raise ZeroDivisionError(f"zero diagonal element in triangular factor at {p}")
    cols = np.arange(nb)
    for r in range(nrows):
        xs = _addr(x, np.full(nb, r), cols)
        fast.load(x.mid, xs)
        if compute:
            fast.need(l.mid, l_offs)
            row = x_data[xs]
            for p in range(nb):
                row[p] = (row[p] - row[:p] @ low[p, :p]) / low[p, p]
            x_data[xs] = row
        fast.evict(x.mid, xs, True)
    fast.evict(l.mid, l_offs, False)


def chol_tiled(ledger, a, n, t, a_data):
    """One-tile left-looking Cholesky of an ``n x n`` packed view, in place."""
    fast = _Fast(ledger)
    compute = ledger.compute
    for ct0 in range(0, n, t):
        ct1 = min(ct0 + t, n)
        for rt0 in range(ct0, n, t):
            rt1 = min(rt0 + t, n)
            diag = rt0 == ct0
            ii, jj = np.meshgrid(np.arange(rt0, rt1), np.arange(ct0, ct1), indexing="ij")
            if diag:
                keep = jj <= ii
                ii, jj = ii[keep], jj[keep]
            tile = _addr(a, ii.ravel(), jj.ravel())
            fast.load(a.mid, tile)
            row_ids = np.arange(rt0, rt1)
            col_ids = np.arange(ct0, ct1)
            for p in range(ct0):
                rs = _addr(a, row_ids, np.full(row_ids.size, p))
                fast.load(a.mid, rs)
                if diag:
                    cs = rs
                else:
                    cs = _addr(a, col_ids, np.full(col_ids.size, p))
                    fast.load(a.mid, cs)
                if compute:
                    fast.need(a.mid, tile)
                    vr = a_data[rs][ii.ravel() - rt0]
                    vc = a_data[cs][jj.ravel() - ct0]
                    a_data[tile] -= vr * vc
                fast.evict(a.mid, rs, False)
                if not diag:
                    fast.evict(a.mid, cs, False)
            if diag:
                if compute:
                    fast.need(a.mid, tile)
                    _factor_diag(a, a_data, ct0, ct1)
            else:
                full = tile.reshape(rt1 - rt0, ct1 - ct0)
                _solve_tile(fast, compute, a, a, full, ct0, ct1, a_data, a_data)
            fast.evict(a.mid, tile, True)


def _factor_diag(a, a_data, lo, hi):
    idx = np.arange(lo, hi)
    ii, jj = np.meshgrid(idx, idx, indexing="ij")
    offs = np.where(jj <= ii, _addr(a, np.maximum(ii, jj), np.minimum(ii, jj)), 0)
    low = np.where(jj <= ii, a_data[offs], 0.0)
    size = hi - lo
    for p in range(size):
        pivot = low[p, p]
        if not pivot > 0.0:
            raise NotPositiveDefiniteError(a.col_off + lo + p, float(pivot))
        low[p, p] = math.sqrt(pivot)
        low[p + 1 :, p] /= low[p, p]
        for r in range(p + 1, size):
            low[r, p + 1 : r + 1] -= low[r, p] * low[p + 1 : r + 1, p]
    keep = jj <= ii
    a_data[offs[keep]] = low[keep]
