"""Constructive lower bounds on disc+(G, H) via high-overlap L-bijections.

Only edges meeting L in exactly one vertex are steered: for an L-bijection pi
those edges contribute sum_u codeg(u, pi(u)) to the overlap, where codeg is
taken between the bipartite projections of G and H onto L x R, R being the
(k-1)-subsets of V \\ L. Whatever bijection is produced, the overlap of the
full hypergraphs is recomputed from scratch before it is reported.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import sparse

from . import bounds
from ._mix import uniform_stream
from .errors import CertifierError, DegenerateStage, InvalidInputError
from .hypergraph import Bijection, Hypergraph, overlap, rank_array
from .oracle import DiscrepancyReport, hypergeom_logtail, pair_baseline


@dataclass(frozen=True)
class CertifierConfig:
    c_gamma: float = 1e-2
    survival_slack: float = 1.0
    block_size_exponent: float = 0.4
    stop_exponent: float = 1.0 / 3.0
    matching_fraction: float = 1.0 / 50.0
    neighborhood_tolerance: float = 0.25
    prune_floor: float = 1e-6
    fallback_enabled: bool = True
    seed: int = 0

    def __post_init__(self):
        for name in ("c_gamma", "survival_slack", "neighborhood_tolerance", "matching_fraction"):
            if getattr(self, name) <= 0:
                raise InvalidInputError(f"{name} must be positive")
        for name in ("block_size_exponent", "stop_exponent"):
            if not 0 < getattr(self, name) < 1:
                raise InvalidInputError(f"{name} must lie in (0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    def with_overrides(self, **kw) -> "CertifierConfig":
        return replace(self, **kw)


# --- projections ------------------------------------------------------------


@dataclass
class BipartiteProjection:
    """L x R incidence of one hypergraph; rows follow the order of ``left``."""

    n: int
    k: int
    left: tuple[int, ...]
    right_count: int
    adjacency: sparse.csr_matrix
    source: str = ""

    def __post_init__(self):
        self._pos = {u: i for i, u in enumerate(self.left)}

    def row(self, u: int) -> int:
        return self._pos[u]

    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr)

    def degree(self, u: int) -> int:
        i = self._pos[u]
        return int(self.adjacency.indptr[i + 1] - self.adjacency.indptr[i])

    def neighbors(self, u: int) -> np.ndarray:
        i = self._pos[u]
        return self.adjacency.indices[self.adjacency.indptr[i]:self.adjacency.indptr[i + 1]]

    def codeg(self, u: int, other: "BipartiteProjection", v: int) -> int:
        return len(np.intersect1d(self.neighbors(u), other.neighbors(v), assume_unique=True))

    def codegree_matrix(self, other: "BipartiteProjection", rows: Sequence[int] | None = None,
                        cols: Sequence[int] | None = None) -> np.ndarray:
        """codeg(u, v) for u in ``rows`` (vertices of self) and v in ``cols`` (vertices of other)."""
        a = self.adjacency if rows is None else self.adjacency[[self._pos[u] for u in rows]]
        b = other.adjacency if cols is None else other.adjacency[[other._pos[v] for v in cols]]
        return np.asarray((a @ b.T).toarray(), dtype=np.int64)


def default_left(n: int, k: int) -> tuple[int, ...]:
    return tuple(range(n // k))


def build_projection(X: Hypergraph, L: Sequence[int], source: str = "") -> BipartiteProjection:
    """Left vertex u ~ right (k-1)-set r iff {u} ∪ r is an edge of X with r ⊆ V \\ L."""
    n, k = X.n, X.k
    L = tuple(int(u) for u in L)
    if len(L) != n // k:
        raise InvalidInputError(f"|L|={len(L)} but floor(n/k)={n // k}")
    if len(set(L)) != len(L) or any(not 0 <= u < n for u in L):
        raise InvalidInputError("L must be distinct vertices in [0, n)")
    in_l = np.zeros(n, dtype=bool)
    in_l[list(L)] = True
    outside = np.flatnonzero(~in_l)
    relabel = np.full(n, -1, dtype=np.int64)
    relabel[outside] = np.arange(len(outside))
    pos = np.full(n, -1, dtype=np.int64)
    pos[list(L)] = np.arange(len(L))
    n_out = len(outside)
    right_count = math.comb(n_out, k - 1)

    rows = cols = np.zeros(0, dtype=np.int64)
    if len(X):
        tup = X.tuples()
        hits = in_l[tup]
        keep = hits.sum(axis=1) == 1
        tup, hits = tup[keep], hits[keep]
        if len(tup):
            u = tup[hits]
            rest = np.where(hits, n, tup)
            rest.sort(axis=1)
            rest = relabel[rest[:, : k - 1]]
            rows = pos[u]
            cols = rank_array(rest, n_out, k - 1)
    adj = sparse.csr_matrix(
        (np.ones(len(rows), dtype=np.int32), (rows, cols)), shape=(len(L), right_count)
    )
    adj.sort_indices()
    return BipartiteProjection(n, k, L, right_count, adj, source)


def survival_window(rate: float, N: int, slack: float = 1.0) -> tuple[float, float]:
    half = slack * 2.0 * math.sqrt(2.0 * rate * N)
    return rate * N - half, rate * N + half


def surviving(P: BipartiteProjection, rate: float, slack: float = 1.0) -> np.ndarray:
    """Left vertices whose degree lies within slack * 2 sqrt(2 rate N) of rate N."""
    lo, hi = survival_window(rate, P.right_count, slack)
    deg = P.degrees()
    ok = (deg >= lo) & (deg <= hi)
    return np.asarray(P.left, dtype=np.int64)[ok]


# --- the codegree graph -----------------------------------------------------


@dataclass
class GammaGraph:
    s_left: np.ndarray
    s_right: np.ndarray
    edges: np.ndarray  # (E, 2) pairs (u, v), u from L_G, v from L_H
    codeg: np.ndarray
    d1: dict[int, int]
    d2: dict[int, int]
    right_count: int
    addend: float

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def max_degree(self) -> int:
        if not len(self.edges):
            return 0
        _, cu = np.unique(self.edges[:, 0], return_counts=True)
        _, cv = np.unique(self.edges[:, 1], return_counts=True)
        return int(max(cu.max(), cv.max()))

    def subgraph(self, keep: np.ndarray) -> "GammaGraph":
        return replace(self, edges=self.edges[keep], codeg=self.codeg[keep])


def threshold_addend(n: int, N: int, p: float, q: float, c_gamma: float) -> float:
    return c_gamma * math.sqrt(p * q * N * math.log(n))


def codeg_threshold(d1, d2, N: int, addend: float):
    """Smallest integer codegree counted as an edge of Gamma: ceil(d1 d2/N + addend)."""
    return np.ceil(np.multiply(d1, d2) / N + addend)


def gamma_graph(PG: BipartiteProjection, PH: BipartiteProjection, p: float, q: float,
                cfg: CertifierConfig = CertifierConfig()) -> GammaGraph:
    if PG.right_count != PH.right_count or PG.left != PH.left:
        raise InvalidInputError("projections do not share L and R")
    N = PG.right_count
    SG = surviving(PG, p, cfg.survival_slack)
    SH = surviving(PH, q, cfg.survival_slack)
    a = threshold_addend(PG.n, N, p, q, cfg.c_gamma)
    d1 = {int(u): PG.degree(int(u)) for u in SG}
    d2 = {int(v): PH.degree(int(v)) for v in SH}
    if len(SG) and len(SH):
        C = PG.codegree_matrix(PH, SG, SH)
        D1 = np.array([d1[int(u)] for u in SG], dtype=np.int64)
        D2 = np.array([d2[int(v)] for v in SH], dtype=np.int64)
        thr = codeg_threshold(D1[:, None], D2[None, :], N, a)
        iu, iv = np.nonzero(C >= thr)
        edges = np.stack([SG[iu], SH[iv]], axis=1)
        cod = C[iu, iv]
    else:
        edges = np.zeros((0, 2), dtype=np.int64)
        cod = np.zeros(0, dtype=np.int64)
    return GammaGraph(SG, SH, edges, cod, d1, d2, N, a)


@lru_cache(maxsize=1 << 18)
def edge_probability_f(d1: int, d2: int, N: int, addend: float) -> float:
    """P[codeg >= d1 d2/N + addend] when the two neighbourhoods are uniform of sizes d1, d2."""
    if not (0 <= d1 <= N and 0 <= d2 <= N):
        raise InvalidInputError(f"degrees ({d1}, {d2}) outside [0, {N}]")
    t0 = int(codeg_threshold(d1, d2, N, addend))
    return math.exp(hypergeom_logtail(N, d1, d2, max(t0, 0)))


def window_degrees(rate: float, N: int, slack: float) -> range:
    lo, hi = survival_window(rate, N, slack)
    return range(max(0, math.ceil(lo)), min(N, math.floor(hi)) + 1)


def f_minimum(p: float, q: float, N: int, addend: float, slack: float = 1.0) -> float:
    """f0: the minimum of f(d1, d2) over both survival windows."""
    best = 1.0
    for d1 in window_degrees(p, N, slack):
        for d2 in window_degrees(q, N, slack):
            best = min(best, edge_probability_f(d1, d2, N, addend))
    return best


def prune(gamma: GammaGraph, f0: float, seed: int, f=edge_probability_f) -> GammaGraph:
    """Keep each edge uv independently with probability f0 / f(d1(u), d2(v)).

    The draw for an edge depends only on (seed, edge id), not on edge order.
    """
    if not gamma.num_edges:
        return gamma
    probs = np.empty(gamma.num_edges)
    for i, (u, v) in enumerate(gamma.edges):
        fu = f(gamma.d1[int(u)], gamma.d2[int(v)], gamma.right_count, gamma.addend)
        if fu <= 0:
            raise CertifierError(f"f(d1,d2)=0 for existing Gamma edge ({u},{v})")
        probs[i] = f0 / fu
    n_ids = int(max(gamma.edges.max(), 0)) + 1
    ids = gamma.edges[:, 0] * n_ids + gamma.edges[:, 1]
    keep = uniform_stream(seed, ids) < probs
    return gamma.subgraph(keep)


# --- matching ---------------------------------------------------------------


def maximum_matching(edges: np.ndarray) -> list[tuple[int, int]]:
    """Hopcroft-Karp on a bipartite edge list (u, v); u and v live in separate namespaces.

    Adjacency is scanned in ascending order so the result is deterministic.
    """
    adj: dict[int, list[int]] = {}
    for u, v in edges:
        adj.setdefault(int(u), []).append(int(v))
    for u in adj:
        adj[u].sort()
    lefts = sorted(adj)
    mate_u: dict[int, int] = {}
    mate_v: dict[int, int] = {}
    INF = math.inf

    while True:
        # BFS layers from free left vertices
        dist: dict[int, float] = {}
        queue = []
        for u in lefts:
            if u not in mate_u:
                dist[u] = 0
                queue.append(u)
        found = False
        head = 0
        while head < len(queue):
            u = queue[head]
            head += 1
            for v in adj[u]:
                w = mate_v.get(v)
                if w is None:
                    found = True
                elif w not in dist:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        if not found:
            break
        # iterative DFS along layered augmenting paths
        ptr = {u: 0 for u in lefts}
        for root in lefts:
            if root in mate_u:
                continue
            stack = [root]
            path_v: list[int] = []
            while stack:
                u = stack[-1]
                if ptr[u] >= len(adj[u]):
                    dist[u] = INF
                    stack.pop()
                    if path_v:
                        path_v.pop()
                    continue
                v = adj[u][ptr[u]]
                ptr[u] += 1
                w = mate_v.get(v)
                if w is None:
                    path_v.append(v)
                    for uu, vv in zip(stack, path_v):
                        mate_u[uu] = vv
                        mate_v[vv] = uu
                    break
                if dist.get(w, INF) == dist[u] + 1:
                    path_v.append(v)
                    stack.append(w)
    return sorted(mate_u.items())


def matching(gamma: GammaGraph) -> list[tuple[int, int]]:
    """A maximum matching of Gamma; at least e/(Delta+1) pairs, as colouring guarantees."""
    pairs = maximum_matching(gamma.edges)
    floor_size = math.ceil(bounds.matching_guarantee(gamma.num_edges, gamma.max_degree()))
    if gamma.num_edges and len(pairs) < floor_size:
        raise CertifierError(f"matching of size {len(pairs)} below e/(Delta+1) = {floor_size}")
    return pairs


# --- completing the bijection -----------------------------------------------


@dataclass
class Completion:
    bijection: Bijection
    shift: int
    total: int
    average: Fraction


def cyclic_totals(C: np.ndarray) -> np.ndarray:
    """totals[s] = sum_i C[i, (i + s) mod a] for every cyclic shift s."""
    a = C.shape[0]
    if a == 0:
        return np.zeros(0, dtype=np.int64)
    i = np.arange(a)
    return C[i[:, None], (i[:, None] + i[None, :]) % a].sum(axis=0)


def complete_bijection(PG: BipartiteProjection, PH: BipartiteProjection,
                       matched: Sequence[tuple[int, int]], *, shifts: bool = True) -> Completion:
    """Extend matched pairs to an L-bijection.

    Leftovers A (of L_G) and B (of L_H), both ascending, are joined by the
    cyclic shift with the largest total codegree; the shifts partition A x B,
    so that total is at least the average over all pairs times |A| / |A|^2.
    With ``shifts=False`` the leftovers are paired in ascending order.
    """
    L = PG.left
    mu = {int(u) for u, _ in matched}
    mv = {int(v) for _, v in matched}
    if len(mu) != len(matched) or len(mv) != len(matched):
        raise CertifierError("matched pairs are not disjoint")
    A = [u for u in sorted(L) if u not in mu]
    B = [v for v in sorted(L) if v not in mv]
    if len(A) != len(B):
        raise CertifierError(f"leftover sizes differ: {len(A)} vs {len(B)}")
    img = list(range(PG.n))
    for u, v in matched:
        img[int(u)] = int(v)
    a = len(A)
    shift, total, avg = 0, 0, Fraction(0)
    if a and shifts:
        C = PG.codegree_matrix(PH, A, B)
        totals = cyclic_totals(C)
        shift = int(np.argmax(totals))
        total = int(totals[shift])
        avg = Fraction(int(C.sum()), a)
    elif a:
        total = sum(PG.codeg(u, PH, v) for u, v in zip(A, B))
    for i, u in enumerate(A):
        img[u] = B[(i + shift) % a]
    return Completion(Bijection(tuple(img), frozenset(L)), shift, total, avg)


# --- end-to-end certifiers --------------------------------------------------


def _report(G: Hypergraph, H: Hypergraph, pi: Bijection, provenance: str, details: dict) -> DiscrepancyReport:
    ov = overlap(G, pi, H)
    base = pair_baseline(G, H)
    plus = ov - base
    details = dict(details)
    details["overlap"] = ov
    return DiscrepancyReport(value=plus, plus_value=plus, minus_value=None, witness=pi,
                             baseline=base, provenance=provenance, overlap=ov, details=details)


def greedy_assignment(C: np.ndarray) -> list[tuple[int, int]]:
    """Repeatedly take the largest remaining entry (ties: lowest row, then column)."""
    a = C.shape[0]
    r, c = np.nonzero(C > 0)
    order = np.lexsort((c, r, -C[r, c]))
    used_r = np.zeros(a, dtype=bool)
    used_c = np.zeros(a, dtype=bool)
    pairs = []
    for i in order:
        ri, ci = r[i], c[i]
        if not used_r[ri] and not used_c[ci]:
            used_r[ri] = used_c[ci] = True
            pairs.append((int(ri), int(ci)))
    # what is left is an all-zero block; lowest-index ties pair it in order
    pairs.extend(zip(np.flatnonzero(~used_r).tolist(), np.flatnonzero(~used_c).tolist()))
    return sorted(pairs)


def certify_fallback(G: Hypergraph, H: Hypergraph, cfg: CertifierConfig = CertifierConfig(),
                     reason: str = "") -> DiscrepancyReport:
    L = default_left(G.n, G.k)
    PG = build_projection(G, L, "G")
    PH = build_projection(H, L, "H")
    C = PG.codegree_matrix(PH)
    img = list(range(G.n))
    for i, j in greedy_assignment(C):
        img[L[i]] = L[j]
    pi = Bijection(tuple(img), frozenset(L))
    return _report(G, H, pi, "certifier-fallback",
                   {"reason": reason, "projection_overlap": int(sum(C[i, j] for i, j in greedy_assignment(C)))})


def certify_dense(G: Hypergraph, H: Hypergraph, p: float, q: float,
                  cfg: CertifierConfig = CertifierConfig()) -> DiscrepancyReport:
    n, k = G.n, G.k
    regime = bounds.classify_regime(n, k, p, q)
    if regime.regime != bounds.DENSE:
        raise InvalidInputError(f"certify_dense called in regime {regime.regime}")
    L = default_left(n, k)
    PG = build_projection(G, L, "G")
    PH = build_projection(H, L, "H")
    N = PG.right_count
    gam = gamma_graph(PG, PH, p, q, cfg)
    stages = {"L": len(L), "N": N, "s_G": len(gam.s_left), "s_H": len(gam.s_right),
              "gamma_edges": gam.num_edges, "threshold_addend": gam.addend}
    if not gam.num_edges:
        if cfg.fallback_enabled:
            return certify_fallback(G, H, cfg, reason=f"empty Gamma ({stages})")
        stages["f0"] = None
        stages["pruned"] = False
        pairs = []
    else:
        f0 = f_minimum(p, q, N, gam.addend, cfg.survival_slack)
        stages["f0"] = f0
        skip = f0 < cfg.prune_floor or gam.num_edges < n / (50 * k)
        stages["pruned"] = not skip
        work = gam if skip else prune(gam, f0, cfg.seed)
        stages["pruned_edges"] = work.num_edges
        pairs = matching(work)
        stages["matching_size"] = len(pairs)
    limit = math.floor(n * cfg.matching_fraction / k)
    pairs = pairs[:limit]
    stages["matching_used"] = len(pairs)
    comp = complete_bijection(PG, PH, pairs)
    stages["matched_codegree"] = int(sum(PG.codeg(u, PH, v) for u, v in pairs))
    stages["completion_total"] = comp.total
    stages["completion_average"] = float(comp.average)
    stages["regime"] = regime.regime
    return _report(G, H, comp.bijection, "certifier-dense", stages)


def _sparse_params(n: int, k: int, p: float, q: float):
    if p <= 0 or q <= 0:
        return bounds.SPARSE_22, math.inf
    r = bounds.classify_regime(n, k, p, q)
    if r.regime == bounds.DENSE:
        raise InvalidInputError("certify_sparse called in the dense regime")
    return r.regime, r.gamma


def certify_sparse(G: Hypergraph, H: Hypergraph, p: float, q: float,
                   cfg: CertifierConfig = CertifierConfig()) -> DiscrepancyReport:
    n, k = G.n, G.k
    regime, gamma = _sparse_params(n, k, p, q)
    L = default_left(n, k)
    PG = build_projection(G, L, "G")
    PH = build_projection(H, L, "H")
    N = PG.right_count
    Np = p * N
    tol = cfg.neighborhood_tolerance
    need = max(1.0, (1.0 - tol) * Np)
    cap = max(1, math.ceil((1.0 + tol) * Np))
    hit = bounds.sparse_hit_threshold(n, gamma) if math.isfinite(gamma) else math.inf
    s = max(1, round(n ** cfg.block_size_exponent))
    stop = n ** cfg.stop_exponent
    AH = PH.adjacency
    free_v = np.ones(len(L), dtype=bool)  # L_H vertices not yet matched (row positions)
    pairs: list[tuple[int, int]] = []
    admitted_total = 0
    blocks_used = 0
    for b0 in range(0, len(L), s):
        block = L[b0:b0 + s]
        claimed: set[int] = set()
        S1: list[int] = []
        sets: list[np.ndarray] = []
        for u in block:
            avail = [r for r in PG.neighbors(u).tolist() if r not in claimed]
            if len(avail) >= need:
                take = avail[:cap]
                claimed.update(take)
                S1.append(u)
                sets.append(np.asarray(take, dtype=np.int64))
        admitted_total += len(S1)
        if len(S1) < stop:
            continue
        blocks_used += 1
        sizes = np.array([len(x) for x in sets])
        rows = np.repeat(np.arange(len(S1)), sizes)
        M = sparse.csr_matrix((np.ones(len(rows), dtype=np.int32), (rows, np.concatenate(sets))),
                              shape=(len(S1), N))
        inter = np.asarray((M @ AH.T).toarray())
        if regime == bounds.SPARSE_21:
            ok = inter >= hit
        else:
            ok = inter == sizes[:, None]
        alive = np.ones(len(S1), dtype=bool)
        remaining = len(S1)
        for j in np.flatnonzero(ok.any(axis=0) & free_v):
            if remaining < stop:
                break
            cand = np.flatnonzero(ok[:, j] & alive)
            if not len(cand):
                continue
            i = int(cand[0])
            alive[i] = False
            remaining -= 1
            free_v[j] = False
            pairs.append((S1[i], L[j]))
    details = {"regime": regime, "gamma": gamma if math.isfinite(gamma) else None, "N": N,
               "block_size": s, "stop_size": stop, "hit_threshold": hit if math.isfinite(hit) else None,
               "admitted": admitted_total, "blocks_used": blocks_used, "matched": len(pairs),
               "matched_fraction": len(pairs) / len(L) if L else 0.0}
    if pairs:
        cods = [PG.codeg(u, PH, v) for u, v in pairs]
        details["min_pair_codegree"] = int(min(cods))
        details["matched_codegree"] = int(sum(cods))
    elif cfg.fallback_enabled:
        return certify_fallback(G, H, cfg, reason="sparse construction matched nothing")
    comp = complete_bijection(PG, PH, sorted(pairs), shifts=False)
    details["pairs"] = [[int(u), int(v)] for u, v in sorted(pairs)]
    return _report(G, H, comp.bijection, "certifier-sparse", details)


def certify(G: Hypergraph, H: Hypergraph, p: float, q: float,
            cfg: CertifierConfig = CertifierConfig()) -> DiscrepancyReport:
    """Dispatch on the regime and self-check the witness before returning."""
    if G.n != H.n or G.k != H.k:
        raise InvalidInputError("G and H must share n and k")
    if q > 0.5 or p > 0.5:
        raise InvalidInputError("p, q must be <= 1/2; complement first (see normalize_pq)")
    if p > q:
        rep = certify(H, G, q, p, cfg)
        pi = rep.witness.inverse()
        details = dict(rep.details, swapped=True)
        rep = _report(G, H, pi, rep.provenance, details)
    elif p <= 0 or bounds.classify_regime(G.n, G.k, p, q).regime != bounds.DENSE:
        rep = certify_sparse(G, H, p, q, cfg)
    else:
        rep = certify_dense(G, H, p, q, cfg)
    if overlap(G, rep.witness, H) != rep.overlap:
        raise CertifierError("witness overlap does not recompute")
    if not rep.witness.is_l_bijection(default_left(G.n, G.k)):
        raise CertifierError("witness is not an L-bijection")
    return rep
