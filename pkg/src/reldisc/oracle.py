"""Brute-force ground truth: relative and subset discrepancy, exact tails.

Everything here enumerates. Guards keep the runtime predictable; pass
``allow_large=True`` to override them.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import islice, permutations
from typing import Any

import numpy as np

from .errors import GuardError, InvalidInputError
from .hypergraph import (
    Bijection,
    Hypergraph,
    VertexSubset,
    binom_table,
    edge_density,
    overlap,
    induced_edge_count,
)

PAIR_GUARD = 10
SUBSET_GUARD = 20
REDUCTION_GUARD = 7

PROVENANCES = ("oracle", "certifier-dense", "certifier-sparse", "certifier-fallback")


def as_fraction(x) -> Fraction:
    """Exact rational for ints, Fractions and strings; floats go through their shortest repr."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(repr(float(x)))


@dataclass
class DiscrepancyReport:
    value: Fraction
    plus_value: Fraction
    minus_value: Fraction | None
    witness: Bijection | VertexSubset
    baseline: Fraction
    provenance: str
    overlap: int | None = None
    details: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise InvalidInputError(f"unknown provenance {self.provenance!r}")

    def to_dict(self) -> dict[str, Any]:
        def num(x):
            return None if x is None else x.numerator

        def den(x):
            return None if x is None else x.denominator

        if isinstance(self.witness, Bijection):
            witness = {"kind": "bijection", "map": list(self.witness.map)}
            if self.witness.l_set is not None:
                witness["l_set"] = sorted(self.witness.l_set)
        else:
            witness = {"kind": "subset", "n": self.witness.n, "members": list(self.witness.members)}
        return {
            "value_num": num(self.value),
            "value_den": den(self.value),
            "plus_num": num(self.plus_value),
            "plus_den": den(self.plus_value),
            "minus_num": num(self.minus_value),
            "minus_den": den(self.minus_value),
            "witness": witness,
            "baseline_num": num(self.baseline),
            "baseline_den": den(self.baseline),
            "provenance": self.provenance,
            "overlap": self.overlap,
            "details": self.details,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DiscrepancyReport":
        def frac(a, b):
            return None if a is None else Fraction(a, b)

        w = d["witness"]
        if w["kind"] == "bijection":
            witness = Bijection(tuple(w["map"]), frozenset(w["l_set"]) if "l_set" in w else None)
        else:
            witness = VertexSubset.of(w["n"], w["members"])
        return cls(
            value=frac(d["value_num"], d["value_den"]),
            plus_value=frac(d["plus_num"], d["plus_den"]),
            minus_value=frac(d["minus_num"], d["minus_den"]),
            witness=witness,
            baseline=frac(d["baseline_num"], d["baseline_den"]),
            provenance=d["provenance"],
            overlap=d.get("overlap"),
            details=d.get("details", {}),
        )


def pair_baseline(G: Hypergraph, H: Hypergraph) -> Fraction:
    """rho_G * rho_H * C(n,k), the mean overlap over uniformly random bijections."""
    return Fraction(len(G) * len(H), G.num_possible)


def check_witness(G: Hypergraph | None, H: Hypergraph, report: DiscrepancyReport) -> bool:
    """Recompute the witness from scratch and check it reproduces the reported value.

    Bijection witnesses are checked against G and H (the value is either side of
    the deviation); subset witnesses against H alone, G being ignored.
    """
    if isinstance(report.witness, VertexSubset):
        count = induced_edge_count(H, report.witness)
        dev = induced_deviation(H, report.witness)
        return count == report.overlap and abs(dev) == report.value
    ov = overlap(G, report.witness, H)
    dev = ov - pair_baseline(G, H)
    return ov == report.overlap and report.value in (dev, -dev)


# --- relative discrepancy ---------------------------------------------------

_CHUNK = 40320


def _block_extremes(G: Hypergraph, H: Hypergraph, first: int):
    """Max/min overlap over bijections with pi(0) = first, in lexicographic order.

    Returns (max, argmax map, index of argmax, min, argmin map, index of argmin),
    indices counted within the block.
    """
    n, k = G.n, G.k
    rest = [v for v in range(n) if v != first]
    tuples = G.tuples()
    hind = H.indicator()
    table = binom_table(n, k)
    best_max = best_min = None
    arg_max = arg_min = None
    idx_max = idx_min = 0
    offset = 0
    it = permutations(rest)
    while True:
        chunk = list(islice(it, _CHUNK))
        if not chunk:
            break
        P = np.empty((len(chunk), n), dtype=np.int64)
        P[:, 0] = first
        P[:, 1:] = np.asarray(chunk, dtype=np.int64).reshape(len(chunk), n - 1)
        if len(tuples):
            imgs = P[:, tuples]  # (c, e, k)
            imgs.sort(axis=2)
            ranks = np.zeros(imgs.shape[:2], dtype=np.int64)
            for i in range(1, k + 1):
                ranks += table[imgs[:, :, i - 1], i]
            ov = hind[ranks].sum(axis=1)
        else:
            ov = np.zeros(len(chunk), dtype=np.int64)
        i_max = int(np.argmax(ov))
        i_min = int(np.argmin(ov))
        if best_max is None or ov[i_max] > best_max:
            best_max, arg_max, idx_max = int(ov[i_max]), tuple(int(v) for v in P[i_max]), offset + i_max
        if best_min is None or ov[i_min] < best_min:
            best_min, arg_min, idx_min = int(ov[i_min]), tuple(int(v) for v in P[i_min]), offset + i_min
        offset += len(chunk)
    return best_max, arg_max, idx_max, best_min, arg_min, idx_min


def _bnb_extremes(G: Hypergraph, H: Hypergraph):
    """Depth-first search over images of 0, 1, ..., n-1 with overlap bounds.

    An edge is decided once its largest vertex has an image, so the number of
    undecided edges bounds how much the overlap can still grow.
    """
    n, k = G.n, G.k
    hind = H.indicator()
    closing: list[list[tuple[int, ...]]] = [[] for _ in range(n)]
    for row in G.tuples():
        closing[int(row[-1])].append(tuple(int(v) for v in row))
    remaining_after = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        remaining_after[i] = remaining_after[i + 1] + len(closing[i])

    table = binom_table(n, k)

    def gain(img, i):
        g = 0
        for e in closing[i]:
            r = 0
            for j, c in enumerate(sorted(img[v] for v in e), start=1):
                r += int(table[c, j])
            g += int(hind[r])
        return g

    best = {"max": -1, "max_map": None, "min": len(G) + 1, "min_map": None}
    img = [0] * n
    used = [False] * n

    def dfs(i, cur, sense):
        if i == n:
            if sense == "max" and cur > best["max"]:
                best["max"], best["max_map"] = cur, tuple(img)
            elif sense == "min" and cur < best["min"]:
                best["min"], best["min_map"] = cur, tuple(img)
            return
        for v in range(n):
            if used[v]:
                continue
            img[i] = v
            used[v] = True
            nxt = cur + gain(img, i)
            if sense == "max":
                if nxt + remaining_after[i + 1] > best["max"]:
                    dfs(i + 1, nxt, sense)
            elif nxt < best["min"]:
                dfs(i + 1, nxt, sense)
            used[v] = False

    dfs(0, 0, "max")
    img, used = [0] * n, [False] * n
    dfs(0, 0, "min")
    return best["max"], best["max_map"], best["min"], best["min_map"]


def _pair_cost(n: int, e: int) -> float:
    return math.factorial(n) * max(e, 1)


def exact_disc_pair(
    G: Hypergraph,
    H: Hypergraph,
    *,
    method: str = "enumerate",
    workers: int = 1,
    allow_large: bool = False,
) -> DiscrepancyReport:
    """disc(G,H), disc+(G,H), disc-(G,H) by trying every bijection.

    Witnesses are the first optimum in lexicographic order of the map.
    ``method="bnb"`` prunes with partial-overlap bounds and returns the same
    report. ``workers > 1`` splits the enumeration by the image of vertex 0.
    """
    if G.n != H.n or G.k != H.k:
        raise InvalidInputError("G and H must share n and k")
    n = G.n
    if n > PAIR_GUARD and not allow_large:
        cost = _pair_cost(n, len(G))
        raise GuardError(
            f"exact_disc_pair refuses n={n} > {PAIR_GUARD}: ~{cost:.3g} edge-image evaluations",
            cost,
        )
    if method == "enumerate":
        if workers > 1:
            with ProcessPoolExecutor(workers) as ex:
                blocks = list(ex.map(_block_extremes, [G] * n, [H] * n, range(n)))
        else:
            blocks = [_block_extremes(G, H, j) for j in range(n)]
        block_len = math.factorial(n - 1)
        mx = mn = None
        for j, (bmax, amax, imax, bmin, amin, imin) in enumerate(blocks):
            if mx is None or bmax > mx[0]:
                mx = (bmax, amax, j * block_len + imax)
            if mn is None or bmin < mn[0]:
                mn = (bmin, amin, j * block_len + imin)
        first_max = mx[2] <= mn[2]
    elif method == "bnb":
        bmax, amax, bmin, amin = _bnb_extremes(G, H)
        mx, mn = (bmax, amax), (bmin, amin)
        first_max = amax <= amin
    else:
        raise InvalidInputError(f"unknown method {method!r}")

    base = pair_baseline(G, H)
    plus = mx[0] - base
    minus = base - mn[0]
    if plus > minus or (plus == minus and first_max):
        value, witness, ov = plus, mx[1], mx[0]
    else:
        value, witness, ov = minus, mn[1], mn[0]
    return DiscrepancyReport(
        value=value,
        plus_value=plus,
        minus_value=minus,
        witness=Bijection(witness),
        baseline=base,
        provenance="oracle",
        overlap=ov,
        details={"max_overlap": mx[0], "min_overlap": mn[0], "max_witness": list(mx[1]),
                 "min_witness": list(mn[1]), "method": method},
    )


def exact_prob_disc(G: Hypergraph, H: Hypergraph, p, q, **kw) -> Fraction:
    """disc_P(G,H): the same maximum against the parameter baseline p*q*C(n,k)."""
    rep = exact_disc_pair(G, H, **kw)
    target = as_fraction(p) * as_fraction(q) * G.num_possible
    return max(abs(rep.details["max_overlap"] - target), abs(rep.details["min_overlap"] - target))


# --- subset discrepancy -----------------------------------------------------


def subset_counts(H: Hypergraph) -> np.ndarray:
    """e(S) for every subset mask S of {0..n-1}, by a subset-sum transform."""
    n = H.n
    f = np.zeros(1 << n, dtype=np.int64)
    if len(H):
        masks = (np.int64(1) << H.tuples()).sum(axis=1)
        f[masks] = 1
    for i in range(n):
        v = f.reshape(-1, 2, 1 << i)
        v[:, 1, :] += v[:, 0, :]
    return f


def exact_disc_subset(H: Hypergraph, *, allow_large: bool = False) -> DiscrepancyReport:
    """disc(H) = max over S of |e(S) - rho_H C(|S|,k)|, witness = first optimal mask."""
    n, k = H.n, H.k
    if n > SUBSET_GUARD and not allow_large:
        raise GuardError(f"exact_disc_subset refuses n={n} > {SUBSET_GUARD}: 2^{n} subsets", 2.0**n)
    counts = subset_counts(H)
    sizes = np.array([bin(m).count("1") for m in range(1 << n)], dtype=np.int64)
    cs = np.array([math.comb(s, k) for s in range(n + 1)], dtype=np.int64)
    total = H.num_possible
    # scaled deviation: C(n,k) * (e(S) - rho C(|S|,k))
    dev = counts * total - len(H) * cs[sizes]
    i_abs = int(np.argmax(np.abs(dev)))
    plus = Fraction(int(dev.max()), total)
    minus = Fraction(int(-dev.min()), total)
    size = int(sizes[i_abs])
    return DiscrepancyReport(
        value=Fraction(abs(int(dev[i_abs])), total),
        plus_value=max(plus, Fraction(0)),
        minus_value=max(minus, Fraction(0)),
        witness=VertexSubset(n, i_abs),
        baseline=edge_density(H) * math.comb(size, k),
        provenance="oracle",
        overlap=int(counts[i_abs]),
    )


def complete_prefix(n: int, k: int, i: int) -> Hypergraph:
    """Complete k-graph on {0..i-1} plus n-i isolated vertices."""
    return Hypergraph(n, k, np.arange(math.comb(i, k), dtype=np.int64))


def reduction_sides(H: Hypergraph, *, allow_large: bool = False) -> tuple[Fraction, Fraction]:
    """(disc(H), max_i disc(G_i, H)) with the pair baseline rho_{G_i} rho_H C(n,k)."""
    if H.n > REDUCTION_GUARD and not allow_large:
        raise GuardError(f"verify_reduction refuses n={H.n} > {REDUCTION_GUARD}", H.n * math.factorial(H.n))
    lhs = exact_disc_subset(H, allow_large=allow_large).value
    rhs = max(
        exact_disc_pair(complete_prefix(H.n, H.k, i), H, allow_large=allow_large).value
        for i in range(1, H.n + 1)
    )
    return lhs, rhs


def verify_reduction(H: Hypergraph, *, allow_large: bool = False) -> bool:
    lhs, rhs = reduction_sides(H, allow_large=allow_large)
    return lhs == rhs


def induced_deviation(H: Hypergraph, S: VertexSubset) -> Fraction:
    return induced_edge_count(H, S) - edge_density(H) * math.comb(len(S), H.k)


# --- exact distributions ----------------------------------------------------

# exact big-integer logs of binomials up to this n; lgamma above
_LOGCOMB_EXACT = 5000


def log_comb(n: int, r: int) -> float:
    if r < 0 or r > n:
        return -math.inf
    if n <= _LOGCOMB_EXACT:
        return math.log(math.comb(n, r))
    return math.lgamma(n + 1) - math.lgamma(r + 1) - math.lgamma(n - r + 1)


def _check_hypergeom(N, d1, d2, t):
    if not (0 <= d1 <= N and 0 <= d2 <= N and t >= 0):
        raise InvalidInputError(f"hypergeometric parameters out of range: N={N}, d1={d1}, d2={d2}, t={t}")


def hypergeom_pmf(N: int, d1: int, d2: int, t: int) -> Fraction:
    """C(d1,t) C(N-d1,d2-t) / C(N,d2), exactly."""
    _check_hypergeom(N, d1, d2, t)
    if t > min(d1, d2):
        return Fraction(0)
    return Fraction(math.comb(d1, t) * math.comb(N - d1, d2 - t), math.comb(N, d2))


def hypergeom_logpmf(N: int, d1: int, d2: int, t: int) -> float:
    _check_hypergeom(N, d1, d2, t)
    if t > min(d1, d2) or d2 - t > N - d1:
        return -math.inf
    return log_comb(d1, t) + log_comb(N - d1, d2 - t) - log_comb(N, d2)


def hypergeom_tail_exact(N: int, d1: int, d2: int, t0: int) -> Fraction:
    """P[T >= t0] for T ~ Hypergeometric(N, d1, d2), as an exact rational."""
    _check_hypergeom(N, d1, d2, 0)
    lo = max(t0, 0, d1 + d2 - N)
    hi = min(d1, d2)
    if lo > hi:
        return Fraction(0)
    num = sum(math.comb(d1, t) * math.comb(N - d1, d2 - t) for t in range(lo, hi + 1))
    return Fraction(num, math.comb(N, d2))


def _logsumexp_desc(logs: np.ndarray) -> float:
    if not len(logs):
        return -math.inf
    top = float(logs.max())
    if top == -math.inf:
        return top
    terms = np.sort(np.exp(logs - top))[::-1]
    return top + math.log(math.fsum(terms))


def hypergeom_logtail(N: int, d1: int, d2: int, t0: int) -> float:
    """log P[T >= t0], summed in log space from the support's start."""
    _check_hypergeom(N, d1, d2, 0)
    lo = max(t0, 0, d1 + d2 - N)
    hi = min(d1, d2)
    if lo > hi:
        return -math.inf
    t = np.arange(lo, hi, dtype=np.float64)
    # pmf(t+1)/pmf(t) = (d1-t)(d2-t) / ((t+1)(N-d1-d2+t+1))
    ratios = np.log((d1 - t) * (d2 - t)) - np.log((t + 1) * (N - d1 - d2 + t + 1))
    logs = hypergeom_logpmf(N, d1, d2, lo) + np.concatenate(([0.0], np.cumsum(ratios)))
    return _logsumexp_desc(logs)


def hypergeom_tail(N: int, d1: int, d2: int, t0: int, *, exact: bool = False):
    if exact:
        return hypergeom_tail_exact(N, d1, d2, t0)
    return math.exp(hypergeom_logtail(N, d1, d2, t0))


EXACT_BINOM_LIMIT = 64


def binom_tail_exact(m: int, rho, t: int) -> Fraction:
    rho = as_fraction(rho)
    if t <= 0:
        return Fraction(1)
    if t > m:
        return Fraction(0)
    return sum((math.comb(m, j) * rho**j * (1 - rho) ** (m - j) for j in range(t, m + 1)), Fraction(0))


def binom_logtail(m: int, rho, t: int) -> float:
    """log P[X >= t], X ~ Bin(m, rho); terms summed largest first with fsum."""
    if t <= 0:
        return 0.0
    if t > m:
        return -math.inf
    rho = float(rho)
    if rho <= 0.0:
        return -math.inf
    if rho >= 1.0:
        return 0.0
    start = log_comb(m, t) + t * math.log(rho) + (m - t) * math.log1p(-rho)
    # The pmf is log-concave, so past the mode the terms fall off quickly; sum a window
    # that ends once terms are e^-60 below the peak, widening it as needed.
    width = max(t, math.floor((m + 1) * rho)) - t + math.ceil(12.0 * math.sqrt(m * rho * (1.0 - rho))) + 16
    while True:
        end = min(m, t + width)
        j = np.arange(t, end, dtype=np.float64)
        # pmf(j+1)/pmf(j) = (m-j) rho / ((j+1)(1-rho))
        ratios = np.log((m - j) * rho) - np.log((j + 1) * (1.0 - rho))
        logs = start + np.concatenate(([0.0], np.cumsum(ratios)))
        if end == m or (ratios[-1] < 0 and logs[-1] < logs.max() - 60.0):
            return _logsumexp_desc(logs)
        width *= 2


def binom_tail(m: int, rho, t: int, *, exact: bool | None = None):
    """P[X >= t] for X ~ Bin(m, rho).

    Exact rational for m <= 64 (or ``exact=True``); float from log space otherwise.
    """
    if not 0 <= rho <= 1:
        raise InvalidInputError(f"rho={rho} not in [0,1]")
    if t < 0 or t > m + 1:
        raise InvalidInputError(f"t={t} outside [0, m+1]")
    if exact is None:
        exact = m <= EXACT_BINOM_LIMIT
    if exact:
        return binom_tail_exact(m, rho, t)
    return math.exp(binom_logtail(m, rho, t))
