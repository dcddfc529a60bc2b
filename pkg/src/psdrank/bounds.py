"""Certified bounds on psd rank and the exact square-root rank search.

Lower bounds come from the usual-rank inequality rank <= k(k+1)/2 and from
zero-pattern block splits; upper bounds from min(p, q), the distinct-entry
count, Hadamard square roots, and explicit family factorizations. The
square-root rank is found by exhausting sign patterns after fixing a
spanning forest of the nonzero bipartite graph to plus.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, isqrt

import numpy as np

from . import linalg
from .errors import InputError, NumericalFailure, ResourceError
from .linalg import DEFAULT_TOL


@dataclass(frozen=True)
class BoundOptions:
    tol: float = DEFAULT_TOL
    value_eps: float = 1e-9
    sqrt_budget: int = 20
    use_sqrt: bool = True
    use_ellipse: bool = True


@dataclass(frozen=True)
class RankInterval:
    lower: int
    upper: int
    certificates: tuple

    def __post_init__(self):
        if self.lower > self.upper:
            raise InputError(f"empty interval [{self.lower}, {self.upper}]")

    @property
    def exact(self) -> int | None:
        return self.lower if self.lower == self.upper else None


@dataclass(frozen=True)
class SqrtRankResult:
    value: int
    witness: np.ndarray
    patterns_searched: int


def rank_to_min_size(r: int) -> int:
    """Smallest k with r <= k(k+1)/2; matrices of rank r need psd factors this big."""
    k = 0
    while k * (k + 1) // 2 < r:
        k += 1
    return k


def _validated(m, tol):
    mm = linalg.as_matrix(m)
    if np.iscomplexobj(mm):
        raise InputError("matrix must be real")
    if np.min(mm, initial=0.0) < -tol * linalg.scale_of(mm):
        raise InputError("matrix must be nonnegative")
    return np.clip(mm, 0.0, None)


def _support(mm, tol):
    return mm > tol * linalg.scale_of(mm)


# ---------------------------------------------------------------------------
# lower bounds


def psd_rank_lower(m, opts: BoundOptions | None = None):
    """(value, certificate): a proven lower bound on the psd rank.

    The certificate records which argument wins: the square-root-of-rank
    bound, or a recursive block split over the zero pattern.
    """
    opts = opts or BoundOptions()
    mm = _validated(m, opts.tol)
    value, cert = _lower_rec(mm, _support(mm, opts.tol), opts, depth=0)
    return value, cert


def _lower_rec(mm, support, opts, depth):
    rows = np.where(support.any(axis=1))[0]
    cols = np.where(support.any(axis=0))[0]
    if rows.size == 0 or cols.size == 0:
        return 0, {"kind": "rank-bound", "rank": 0, "value": 0}
    sub = mm[np.ix_(rows, cols)]
    sup = support[np.ix_(rows, cols)]
    r = linalg.numerical_rank(sub, opts.tol)
    best = rank_to_min_size(r)
    cert = {"kind": "rank-bound", "rank": int(r), "value": int(best)}

    comps = _bipartite_components(sup)
    if len(comps) > 1 and depth < 12:
        total = 0
        parts = []
        for rset, cset in comps:
            v, c = _lower_rec(sub[np.ix_(rset, cset)], sup[np.ix_(rset, cset)], opts, depth + 1)
            total += v
            parts.append(c)
        if total > best:
            best, cert = total, {"kind": "block", "split": "components",
                                 "parts": parts, "value": int(total)}

    if depth < 4:
        v, c = _best_bipartition(sub, sup, opts, depth)
        if v > best:
            best, cert = v, c
        vt, ct = _best_bipartition(sub.T, sup.T, opts, depth)
        if vt > best:
            best, cert = vt, {**ct, "transposed": True}
    return int(best), cert


def _bipartite_components(sup):
    """Connected components of the nonzero bipartite graph, as index lists."""
    p, q = sup.shape
    parent = list(range(p + q))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in zip(*np.nonzero(sup)):
        ra, rb = find(int(i)), find(int(p + j))
        if ra != rb:
            parent[ra] = rb
    groups: dict = {}
    for i in range(p):
        if sup[i].any():
            groups.setdefault(find(i), [[], []])[0].append(i)
    for j in range(q):
        if sup[:, j].any():
            groups.setdefault(find(p + j), [[], []])[1].append(j)
    return [(np.array(g[0], dtype=int), np.array(g[1], dtype=int))
            for g in groups.values() if g[0] and g[1]]


def _best_bipartition(sub, sup, opts, depth):
    """Scan splits M = [[M1, Q], [0, M2]] induced by a zero-pattern column sort."""
    p, q = sup.shape
    order = sorted(range(q), key=lambda j: tuple(sup[:, j]))
    best, cert = 0, None
    for cut in range(1, q):
        cset = np.array(order[:cut])
        touched = sup[:, cset].any(axis=1)
        rset = np.where(touched)[0]
        rrest = np.where(~touched)[0]
        crest = np.array(order[cut:])
        if rset.size == 0 or rrest.size == 0:
            continue
        v1, c1 = _lower_rec(sub[np.ix_(rset, cset)], sup[np.ix_(rset, cset)], opts, depth + 1)
        v2, c2 = _lower_rec(sub[np.ix_(rrest, crest)], sup[np.ix_(rrest, crest)], opts, depth + 1)
        if v1 + v2 > best:
            best = v1 + v2
            cert = {"kind": "block", "split": "triangular", "cut": int(cut),
                    "parts": [c1, c2], "value": int(best)}
    return best, cert


# ---------------------------------------------------------------------------
# upper bounds


def psd_rank_upper(m, opts: BoundOptions | None = None):
    """(value, certificate): a constructive upper bound on the psd rank."""
    opts = opts or BoundOptions()
    mm = _validated(m, opts.tol)
    p, q = mm.shape
    r = linalg.numerical_rank(mm, opts.tol)
    candidates = []

    # listed first so ties resolve to the constructive certificate
    fam = _derangement_like(mm, opts.tol)
    if fam is not None:
        n = mm.shape[0]
        k = rank_to_min_size(n) if n > 1 else (0 if fam == 0.0 else 1)
        candidates.append((k, {"kind": "factorization-file", "family": "derangement",
                               "scale": fam, "value": int(k)}))

    candidates.append((min(p, q), {"kind": "rank-bound", "argument": "min(p,q)",
                                   "value": int(min(p, q))}))
    if r <= 2:
        candidates.append((r, {"kind": "rank-bound", "argument": "rank <= 2 is exact",
                               "value": int(r)}))

    snapped = np.round(mm / opts.value_eps) * opts.value_eps
    distinct = np.unique(snapped[snapped > 0]).size + (1 if np.any(snapped <= 0) else 0)
    if distinct >= 1:
        barv = comb(distinct - 1 + r, distinct - 1)
        candidates.append((barv, {"kind": "barvinok", "distinct": int(distinct),
                                  "rank": int(r), "value": int(barv)}))

    if opts.use_sqrt:
        try:
            res = sqrt_rank_exact(mm, budget=opts.sqrt_budget, tol=opts.tol)
            candidates.append((res.value, {"kind": "sqrt-rank", "value": int(res.value),
                                           "patterns": res.patterns_searched}))
        except ResourceError:
            pass

    value, cert = min(candidates, key=lambda t: t[0])
    return int(value), cert


def _derangement_like(mm, tol):
    """Positive scale c if m = c * (ones - identity), else None."""
    p, q = mm.shape
    if p != q or p < 2:
        return None
    off = mm[~np.eye(p, dtype=bool)]
    c = float(off[0])
    scale = linalg.scale_of(mm)
    if c <= tol * scale:
        return None
    if np.max(np.abs(off - c)) > tol * scale or np.max(np.abs(np.diag(mm))) > tol * scale:
        return None
    return c


# ---------------------------------------------------------------------------
# exact square-root rank


def sqrt_rank_exact(m, budget: int = 20, tol: float = DEFAULT_TOL) -> SqrtRankResult:
    """Minimum rank over all Hadamard square roots, by exhaustive signs.

    Scaling rows and columns by -1 preserves rank, so the signs along a
    spanning forest of the nonzero bipartite graph are fixed to plus and only
    the remaining nonzero entries enumerate over {+, -}. The witness rank is
    recomputed in exact integer arithmetic when every entry is a perfect
    square.
    """
    mm = _validated(m, tol)
    p, q = mm.shape
    support = _support(mm, tol)
    base = np.where(support, np.sqrt(np.clip(mm, 0.0, None)), 0.0)
    nz = np.argwhere(support)
    if nz.size == 0:
        return SqrtRankResult(0, np.zeros_like(mm), 1)

    free_edges = _non_forest_edges(support, nz)
    nfree = len(free_edges)
    if nfree > budget:
        raise ResourceError(
            f"sign search needs {nfree} free bits ({2 ** nfree} patterns); budget is {budget}"
        )

    target_rank = linalg.numerical_rank(mm, tol)
    floor_val = rank_to_min_size(target_rank)

    rows_idx = np.array([e[0] for e in free_edges], dtype=int)
    cols_idx = np.array([e[1] for e in free_edges], dtype=int)
    best_rank = None
    best_pattern = 0
    searched = 0
    chunk = 4096
    total = 1 << nfree
    for lo in range(0, total, chunk):
        hi = min(lo + chunk, total)
        codes = np.arange(lo, hi, dtype=np.int64)
        if nfree:
            bits = (codes[:, None] >> np.arange(nfree)[None, :]) & 1
            signs = 1.0 - 2.0 * bits
        else:
            signs = np.ones((hi - lo, 0))
        stack = np.broadcast_to(base, (hi - lo, p, q)).copy()
        if nfree:
            stack[:, rows_idx, cols_idx] = base[rows_idx, cols_idx][None, :] * signs
        sv = np.linalg.svd(stack, compute_uv=False)
        cutoff = tol * max(p, q) * sv[:, 0]
        ranks = (sv > cutoff[:, None]).sum(axis=1)
        searched += hi - lo
        i = int(np.argmin(ranks))
        if best_rank is None or ranks[i] < best_rank:
            best_rank = int(ranks[i])
            best_pattern = int(codes[i])
        if best_rank <= floor_val:
            break

    witness = base.copy()
    if nfree:
        bits = (best_pattern >> np.arange(nfree)) & 1
        witness[rows_idx, cols_idx] = base[rows_idx, cols_idx] * (1.0 - 2.0 * bits)

    exact = _exact_rank_if_integral(witness, tol)
    if exact is not None and exact != best_rank:
        raise NumericalFailure(
            f"witness rank disagrees between floating point ({best_rank}) and exact ({exact})"
        )
    return SqrtRankResult(best_rank, witness, searched)


def _non_forest_edges(support, nz):
    """Nonzero positions not on a spanning forest of the row/column graph."""
    p, q = support.shape
    parent = list(range(p + q))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    free = []
    for i, j in nz:
        ra, rb = find(int(i)), find(int(p + j))
        if ra == rb:
            free.append((int(i), int(j)))
        else:
            parent[ra] = rb
    return free


def _exact_rank_if_integral(witness, tol):
    """Bareiss rank when all witness entries are integers, else None."""
    rounded = np.round(witness)
    if np.max(np.abs(witness - rounded)) > 1e-12 * (1 + np.max(np.abs(witness), initial=0.0)):
        return None
    rows = [[int(x) for x in row] for row in rounded]
    return linalg.exact_int_rank(rows)


# ---------------------------------------------------------------------------
# the combined interval


def psd_rank_interval(m, opts: BoundOptions | None = None) -> RankInterval:
    """Best certified bracket on the psd rank, exact through rank 3 regions.

    Rank <= 2 matrices have psd rank equal to their rank; rank-3 matrices are
    settled by the ellipse containment program; everything else keeps the
    tightest lower/upper pair with its certificates.
    """
    opts = opts or BoundOptions()
    mm = _validated(m, opts.tol)
    if not np.any(mm > opts.tol * linalg.scale_of(mm)):
        return RankInterval(0, 0, ({"kind": "rank-bound", "rank": 0, "value": 0},))

    lo, lo_cert = psd_rank_lower(mm, opts)
    up, up_cert = psd_rank_upper(mm, opts)
    certs = [lo_cert, up_cert]

    r = linalg.numerical_rank(mm, opts.tol)
    if r <= 2:
        certs.append({"kind": "rank-bound", "argument": "rank <= 2 is exact", "value": int(r)})
        return RankInterval(int(r), int(r), tuple(certs))

    if r == 3 and opts.use_ellipse and mm.shape[0] >= 1:
        from . import geometry

        if np.min(mm.sum(axis=1)) > 0:
            answer, ellipse = geometry.decide_psd_rank_le_2(mm)
            if answer:
                certs.append({"kind": "ellipse", "answer": True, "ellipse": ellipse})
                return RankInterval(2, 2, tuple(certs))
            certs.append({"kind": "ellipse", "answer": False})
            lo = max(lo, 3)

    up = max(up, lo)
    return RankInterval(int(lo), int(up), tuple(certs))
