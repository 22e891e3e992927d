"""Lower bounds on data movement for SYRK and Cholesky, and an exhaustive
oracle for the underlying combinatorial problem on tiny instances.

An operation ``(i, j, k)`` with ``i > j`` updates ``C[i, j]`` using ``A[i, k]``
and ``A[j, k]``.  For a set ``H`` of operations, ``H|k`` is the set of pairs
``(i, j)`` it touches in iteration ``k`` and its *footprint* is the set of
rows appearing in those pairs.  The number of distinct elements ``H`` reads is

    D(H) = |union_k H|k| + sum_k |footprint(H|k)|

and ``pmax(X)`` is the largest ``|H|`` with ``D(H) <= X``.  The oracle computes
``pmax`` exactly; :func:`hmax_bound` is the analytic upper bound on it.

Cholesky operations ``(i, j, k)`` with ``i > j > k`` use the same accounting,
so the Cholesky domain is a subset of the SYRK domain with ``M = N``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple

import numpy as np

from .tbs import sigma

__all__ = [
    "OpTriple",
    "OracleResult",
    "SubcomputationCost",
    "balanced_solution",
    "brute_force_pmax",
    "chol_domain",
    "chol_lower_bound",
    "data_accessed",
    "eliminate_j",
    "hmax_bound",
    "pmax_table",
    "pprime_cost",
    "pprime_objective",
    "pprime_optimum",
    "syrk_domain",
    "syrk_lower_bound",
    "triangle_prefix",
]

_C = math.sqrt(2.0) / (3.0 * math.sqrt(3.0))


class OpTriple(NamedTuple):
    i: int
    j: int
    k: int


def syrk_domain(N: int, M: int) -> list[OpTriple]:
    """All ``(i, j, k)`` with ``1 <= j < i <= N`` and ``1 <= k <= M``."""
    return [OpTriple(i, j, k) for k in range(1, M + 1) for i in range(2, N + 1) for j in range(1, i)]


def chol_domain(N: int) -> list[OpTriple]:
    """All ``(i, j, k)`` with ``N >= i > j > k >= 1``."""
    return [
        OpTriple(i, j, k) for k in range(1, N + 1) for i in range(k + 2, N + 1) for j in range(k + 1, i)
    ]


@dataclass(frozen=True)
class SubcomputationCost:
    restrictions: dict
    union_size: int
    footprint_sizes: dict

    @property
    def total(self) -> int:
        return self.union_size + sum(self.footprint_sizes.values())


def cost_breakdown(H: Iterable) -> SubcomputationCost:
    restr: dict[int, set] = {}
    for i, j, k in H:
        if i <= j:
            raise ValueError(f"operation ({i}, {j}, {k}) is not subdiagonal")
        restr.setdefault(k, set()).add((i, j))
    union = set().union(*restr.values()) if restr else set()
    fps = {k: len({r for pair in pairs for r in pair}) for k, pairs in restr.items()}
    return SubcomputationCost(restr, len(union), fps)


def data_accessed(H: Iterable) -> int:
    """``D(H)``: distinct ``C`` elements plus per-iteration ``A`` footprints."""
    return cost_breakdown(H).total


def hmax_bound(X: float) -> float:
    """Upper bound ``sqrt(2)/(3 sqrt(3)) * X**1.5`` on ``pmax(X)``."""
    if X < 0:
        raise ValueError("X must be non-negative")
    return _C * X**1.5


def syrk_lower_bound(N: int, M: int, S: int) -> float:
    """Minimum loads of any SYRK schedule: ``N^2 M / (sqrt(2) sqrt(S))``."""
    if min(N, M, S) <= 0:
        raise ValueError("arguments must be positive")
    return N * N * M / (math.sqrt(2.0) * math.sqrt(S))


def chol_lower_bound(N: int, S: int) -> float:
    """Minimum loads of any Cholesky schedule: ``N^3 / (3 sqrt(2) sqrt(S))``."""
    if min(N, S) <= 0:
        raise ValueError("arguments must be positive")
    return N**3 / (3.0 * math.sqrt(2.0) * math.sqrt(S))


# -- exhaustive oracle ---------------------------------------------------


class OracleResult(NamedTuple):
    value: int
    witness: frozenset


def _popcount(x: np.ndarray) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.uint64)
    table = np.array([bin(v).count("1") for v in range(256)], dtype=np.int64)
    return table[x.view(np.uint8).reshape(*x.shape, 8)].sum(axis=-1)


class _Problem:
    """Domain bookkeeping shared by both search methods."""

    def __init__(self, triples: list[OpTriple]):
        self.triples = triples
        self.pairs = sorted({(t.i, t.j) for t in triples})
        self.rows = sorted({r for p in self.pairs for r in p})
        self.iters = sorted({t.k for t in triples})
        self.pair_id = {p: n for n, p in enumerate(self.pairs)}
        self.row_id = {r: n for n, r in enumerate(self.rows)}
        self.full_cost = data_accessed(triples)
        self.members = set(triples)

    # raw subsets: one bit per triple
    def raw_table(self):
        n = len(self.triples)
        masks = np.arange(1 << n, dtype=np.uint64)
        cost = np.zeros(masks.size, dtype=np.int64)
        for p in self.pairs:
            bits = sum(1 << t for t, tr in enumerate(self.triples) if (tr.i, tr.j) == p)
            cost += (masks & np.uint64(bits)) != 0
        for k in self.iters:
            for r in self.rows:
                bits = sum(
                    1 << t for t, tr in enumerate(self.triples) if tr.k == k and r in (tr.i, tr.j)
                )
                if bits:
                    cost += (masks & np.uint64(bits)) != 0
        size = _popcount(masks)
        return masks, cost, size

    def raw_solve(self, X: int) -> OracleResult:
        masks, cost, size = self.raw_table()
        ok = cost <= X
        best = int(np.argmax(np.where(ok, size, -1)))
        H = frozenset(t for b, t in enumerate(self.triples) if (int(masks[best]) >> b) & 1)
        return OracleResult(len(H), H)

    # per-iteration search: fix the union U of touched pairs, then each
    # iteration independently picks a row set F and takes the pairs of
    # U inside F; a knapsack distributes the footprint budget.
    def _iteration_gain(self, U: int):
        """For each iteration: best pair count and row set for footprint exactly f."""
        nr = len(self.rows)
        subsets = np.arange(1 << nr, dtype=np.int64)
        pm = np.zeros(subsets.size, dtype=np.uint64)
        for (i, j), pid in self.pair_id.items():
            both = (1 << self.row_id[i]) | (1 << self.row_id[j])
            pm |= np.where((subsets & both) == both, np.uint64(1 << pid), np.uint64(0))
        fsize = _popcount(subsets.astype(np.uint64))
        out = []
        for k in self.iters:
            allowed = sum(1 << self.pair_id[(t.i, t.j)] for t in self.triples if t.k == k)
            got = _popcount(pm & np.uint64(U & allowed))
            gain = np.full(nr + 1, -1, dtype=np.int64)
            arg = np.zeros(nr + 1, dtype=np.int64)
            for f in range(nr + 1):
                sel = np.flatnonzero(fsize == f)
                w = int(np.argmax(got[sel]))
                gain[f], arg[f] = got[sel][w], sel[w]
            gain[0] = 0
            out.append((k, gain, arg, pm))
        return out

    def _knapsack(self, gains, budget: int):
        # dp[x] = best total with footprint sum <= x; choice[n][x] = footprint of iteration n
        dp = np.zeros(budget + 1, dtype=np.int64)
        choice = []
        for _, gain, _, _ in gains:
            nxt = dp.copy()
            pick = np.zeros(budget + 1, dtype=np.int64)
            for f in range(1, len(gain)):
                if f > budget or gain[f] <= 0:
                    continue
                cand = np.full(budget + 1, -1, dtype=np.int64)
                cand[f:] = dp[: budget + 1 - f] + gain[f]
                better = cand > nxt
                nxt[better] = cand[better]
                pick[better] = f
            choice.append(pick)
            dp = nxt
        return dp, choice

    def iter_table(self, Xmax: int) -> np.ndarray:
        best = np.zeros(Xmax + 1, dtype=np.int64)
        npairs = len(self.pairs)
        for U in range(1, 1 << npairs):
            u = bin(U).count("1")
            if u > Xmax:
                continue
            dp, _ = self._knapsack(self._iteration_gain(U), Xmax - u)
            best[u:] = np.maximum(best[u:], dp)
        return np.maximum.accumulate(best)

    def iter_solve(self, X: int) -> OracleResult:
        best, best_U = 0, 0
        for U in range(1, 1 << len(self.pairs)):
            u = bin(U).count("1")
            if u > X:
                continue
            dp, _ = self._knapsack(self._iteration_gain(U), X - u)
            if dp[-1] > best:
                best, best_U = int(dp[-1]), U
        if best == 0:
            return OracleResult(0, frozenset())
        gains = self._iteration_gain(best_U)
        _, choice = self._knapsack(gains, X - bin(best_U).count("1"))
        H = set()
        budget = X - bin(best_U).count("1")
        for n in range(len(gains) - 1, -1, -1):
            f = int(choice[n][budget])
            if f:
                k, _, arg, pm = gains[n]
                mask = int(pm[arg[f]]) & best_U
                for (i, j), pid in self.pair_id.items():
                    if (mask >> pid) & 1 and OpTriple(i, j, k) in self.members:
                        H.add(OpTriple(i, j, k))
                budget -= f
        return OracleResult(len(H), frozenset(H))


def _problem(N: int, M: int, domain: str, max_triples: int) -> _Problem:
    domain = domain.lower()
    if domain == "syrk":
        triples = syrk_domain(N, M)
    elif domain == "chol":
        triples = chol_domain(N)
    else:
        raise ValueError(f"unknown domain {domain!r}")
    if len(triples) > max_triples:
        raise ValueError(
            f"domain has {len(triples)} operations, above the oracle limit of {max_triples}"
        )
    return _Problem(triples)


RAW_LIMIT = 20


def brute_force_pmax(N: int, M: int, X: int, domain: str = "syrk", *, max_triples: int = 64,
                     method: str = "auto") -> OracleResult:
    """Exact ``max |H|`` subject to ``D(H) <= X`` with a witness ``H``.

    ``domain`` is ``"syrk"`` or ``"chol"`` (``M`` is ignored for the latter).
    ``method`` is ``"raw"`` (all subsets, at most 20 operations),
    ``"iter"`` (per-iteration row sets) or ``"auto"``.
    """
    prob = _problem(N, M, domain, max_triples)
    if method == "auto":
        method = "raw" if len(prob.triples) <= 18 else "iter"
    if method == "raw":
        if len(prob.triples) > RAW_LIMIT:
            raise ValueError(f"raw enumeration is limited to {RAW_LIMIT} operations")
        return prob.raw_solve(X)
    if method == "iter":
        return prob.iter_solve(X)
    raise ValueError(f"unknown method {method!r}")


def pmax_table(N: int, M: int, domain: str = "syrk", *, max_triples: int = 64,
               method: str = "auto") -> np.ndarray:
    """``pmax(X)`` for every ``X`` in ``[0, D(full domain)]``."""
    prob = _problem(N, M, domain, max_triples)
    Xmax = prob.full_cost
    if method == "auto":
        method = "raw" if len(prob.triples) <= 18 else "iter"
    if method == "raw":
        if len(prob.triples) > RAW_LIMIT:
            raise ValueError(f"raw enumeration is limited to {RAW_LIMIT} operations")
        _, cost, size = prob.raw_table()
        best = np.zeros(Xmax + 1, dtype=np.int64)
        np.maximum.at(best, cost, size)
        return np.maximum.accumulate(best)
    if method == "iter":
        return prob.iter_table(Xmax)
    raise ValueError(f"unknown method {method!r}")


# -- balanced solutions and the relaxed problem --------------------------


def triangle_prefix(m: int) -> list[tuple[int, int]]:
    """The first ``m`` pairs of the triangle on rows ``1..sigma(m)``, row by row."""
    out = []
    for i in itertools.count(2):
        if len(out) >= m:
            return out
        for j in range(1, i):
            if len(out) == m:
                break
            out.append((i, j))
    return out


def balanced_solution(x: int, m: int) -> tuple[frozenset, int]:
    """``K = x // m`` iterations holding ``T(m)`` and one holding ``T(x - K m)``.

    Returns the operation set and its ``D``.
    """
    if x < 0 or m < 1:
        raise ValueError("need x >= 0 and m >= 1")
    K, rest = divmod(x, m)
    full = triangle_prefix(m)
    H = {OpTriple(i, j, k) for k in range(1, K + 1) for i, j in full}
    H |= {OpTriple(i, j, K + 1) for i, j in triangle_prefix(rest)}
    return frozenset(H), data_accessed(H)


def balanced_cost(x: int, m: int) -> int:
    """``D`` of the balanced solution in closed form."""
    K, rest = divmod(x, m)
    return min(x, m) + K * sigma(m) + sigma(rest)


def pprime_objective(I, J, K):
    return K * Fraction(I * (I - 1), 2) + Fraction(J * (J - 1), 2)


def pprime_cost(I, J, K):
    return Fraction(I * (I - 1), 2) + K * I + J


def eliminate_j(I: int, J: int, K) -> tuple:
    """Move the partial iteration into fractional full ones: ``(I, 0, K + J(J-1)/(I(I-1)))``."""
    if I < 2:
        raise ValueError("I must be >= 2")
    return I, 0, Fraction(K) + Fraction(J * (J - 1), I * (I - 1))


def pprime_optimum(X: float) -> tuple[float, float, float]:
    """Stationary point ``(I, K, value)`` of ``max K I(I-1)/2`` s.t. ``I(I-1)/2 + K I <= X``."""
    if X <= 0:
        raise ValueError("X must be positive")
    r = math.sqrt(1.0 + 6.0 * X)
    I = 2.0 / 3.0 + r / 3.0
    K = (I - 0.5) * (1.0 - 1.0 / I)
    value = (r - 1.0) ** 2 * (2.0 * r + 1.0) / 108.0
    return I, K, value
