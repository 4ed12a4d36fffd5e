"""k-uniform hypergraphs stored as sorted colex ranks of their edges.

An edge {c_1 < c_2 < ... < c_k} has colex rank sum_i C(c_i, i). Ranks of the
subsets of {0..i-1} are exactly [0, C(i, k)), so the numbering of an edge
never changes when vertices are appended.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError

# Dense indicator arrays and one-draw-per-edge sampling are used up to this size.
BITSET_LIMIT = 1 << 24
_RANK_LIMIT = 1 << 62


@lru_cache(maxsize=64)
def binom_table(n: int, k: int) -> np.ndarray:
    """table[c, i] = C(c, i) for 0 <= c <= n, 0 <= i <= k (int64, read-only)."""
    if math.comb(n, k) >= _RANK_LIMIT:
        raise InvalidInputError(f"C({n},{k}) does not fit the int64 edge-rank space")
    t = np.zeros((n + 1, k + 1), dtype=np.int64)
    for c in range(n + 1):
        for i in range(min(c, k) + 1):
            t[c, i] = math.comb(c, i)
    t.setflags(write=False)
    return t


def rank_subset(subset: Sequence[int], n: int | None = None) -> int:
    """Colex rank of a strictly increasing tuple of vertices."""
    prev = -1
    r = 0
    for i, c in enumerate(subset, start=1):
        c = int(c)
        if c < 0:
            raise InvalidInputError(f"negative vertex in {tuple(subset)}")
        if c <= prev:
            raise InvalidInputError(f"subset {tuple(subset)} is not strictly increasing")
        if n is not None and c >= n:
            raise InvalidInputError(f"vertex {c} out of range for n={n}")
        r += math.comb(c, i)
        prev = c
    return r


def unrank_subset(rank: int, n: int, k: int) -> tuple[int, ...]:
    """Inverse of :func:`rank_subset` on the k-subsets of {0..n-1}."""
    if not 0 <= rank < math.comb(n, k):
        raise InvalidInputError(f"rank {rank} outside [0, C({n},{k}))")
    out = [0] * k
    r = rank
    c = n - 1
    for i in range(k, 0, -1):
        while math.comb(c, i) > r:
            c -= 1
        out[i - 1] = c
        r -= math.comb(c, i)
        c -= 1
    return tuple(out)


def rank_array(tuples: np.ndarray, n: int, k: int) -> np.ndarray:
    """Vectorised colex rank of rows that are already sorted ascending."""
    tuples = np.asarray(tuples, dtype=np.int64).reshape(-1, k)
    table = binom_table(n, k)
    r = np.zeros(len(tuples), dtype=np.int64)
    for i in range(1, k + 1):
        r += table[tuples[:, i - 1], i]
    return r


def unrank_array(ranks: np.ndarray, n: int, k: int) -> np.ndarray:
    """Vectorised inverse of :func:`rank_array`; returns an (m, k) array."""
    r = np.array(ranks, dtype=np.int64, copy=True)
    table = binom_table(n, k)
    out = np.empty((len(r), k), dtype=np.int64)
    for i in range(k, 0, -1):
        c = np.searchsorted(table[:, i], r, side="right") - 1
        out[:, i - 1] = c
        r -= table[c, i]
    return out


class Hypergraph:
    """Immutable k-uniform hypergraph on vertices {0..n-1}."""

    __slots__ = ("n", "k", "_edges")

    def __init__(self, n: int, k: int, edges: Iterable[int] | np.ndarray = ()):
        n, k = int(n), int(k)
        if not 2 <= k <= n:
            raise InvalidInputError(f"need 2 <= k <= n, got n={n}, k={k}")
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        arr = arr.reshape(-1)
        if len(arr):
            arr = np.sort(arr)
            if arr[0] < 0 or arr[-1] >= math.comb(n, k):
                raise InvalidInputError("edge rank out of range")
            if np.any(arr[1:] == arr[:-1]):
                raise InvalidInputError("duplicate edge")
        arr.setflags(write=False)
        self.n = n
        self.k = k
        self._edges = arr

    @classmethod
    def from_tuples(cls, n: int, k: int, tuples: Iterable[Sequence[int]]) -> "Hypergraph":
        ranks = []
        for t in tuples:
            t = tuple(sorted(int(v) for v in t))
            if len(t) != k:
                raise InvalidInputError(f"edge {t} does not have {k} vertices")
            if t[0] < 0:
                raise InvalidInputError(f"negative vertex in {t}")
            ranks.append(rank_subset(t, n))
        return cls(n, k, ranks)

    @classmethod
    def complete(cls, n: int, k: int) -> "Hypergraph":
        return cls(n, k, np.arange(math.comb(n, k), dtype=np.int64))

    @classmethod
    def empty(cls, n: int, k: int) -> "Hypergraph":
        return cls(n, k)

    @property
    def edges(self) -> np.ndarray:
        return self._edges

    @property
    def num_possible(self) -> int:
        return math.comb(self.n, self.k)

    def __len__(self) -> int:
        return len(self._edges)

    def tuples(self) -> np.ndarray:
        return unrank_array(self._edges, self.n, self.k)

    def edge_set(self) -> set[tuple[int, ...]]:
        return {tuple(int(v) for v in row) for row in self.tuples()}

    def indicator(self) -> np.ndarray:
        """Dense bitset view over all C(n,k) ranks."""
        m = self.num_possible
        if m > BITSET_LIMIT:
            raise InvalidInputError(f"C(n,k)={m} too large for a dense bitset")
        ind = np.zeros(m, dtype=bool)
        ind[self._edges] = True
        return ind

    def contains_ranks(self, ranks: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self._edges, ranks)
        idx = np.minimum(idx, max(len(self._edges) - 1, 0))
        if not len(self._edges):
            return np.zeros(len(ranks), dtype=bool)
        return self._edges[idx] == ranks

    def __contains__(self, edge: Sequence[int]) -> bool:
        r = rank_subset(tuple(sorted(edge)), self.n)
        return bool(self.contains_ranks(np.array([r]))[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Hypergraph):
            return NotImplemented
        return self.n == other.n and self.k == other.k and np.array_equal(self._edges, other._edges)

    def __hash__(self) -> int:
        return hash((self.n, self.k, self._edges.tobytes()))

    def __repr__(self) -> str:
        return f"Hypergraph(n={self.n}, k={self.k}, e={len(self)})"


@dataclass(frozen=True)
class Bijection:
    """A permutation of {0..n-1}; ``map[i]`` is the image of vertex i.

    When ``l_set`` is given the map is an L-bijection for that L: every
    vertex outside L is a fixed point.
    """

    map: tuple[int, ...]
    l_set: frozenset[int] | None = None

    def __post_init__(self):
        m = tuple(int(v) for v in self.map)
        object.__setattr__(self, "map", m)
        if sorted(m) != list(range(len(m))):
            raise InvalidInputError("map is not a permutation")
        if self.l_set is not None:
            L = frozenset(int(v) for v in self.l_set)
            object.__setattr__(self, "l_set", L)
            if any(m[x] != x for x in range(len(m)) if x not in L):
                raise InvalidInputError("L-bijection moves a vertex outside L")

    @classmethod
    def identity(cls, n: int) -> "Bijection":
        return cls(tuple(range(n)))

    @property
    def n(self) -> int:
        return len(self.map)

    def array(self) -> np.ndarray:
        return np.asarray(self.map, dtype=np.int64)

    def inverse(self) -> "Bijection":
        inv = [0] * self.n
        for i, v in enumerate(self.map):
            inv[v] = i
        return Bijection(tuple(inv), self.l_set)

    def compose(self, first: "Bijection") -> "Bijection":
        """``self ∘ first``: apply ``first``, then ``self``."""
        if first.n != self.n:
            raise InvalidInputError("size mismatch")
        return Bijection(tuple(self.map[first.map[i]] for i in range(self.n)))

    def is_l_bijection(self, L: Iterable[int]) -> bool:
        L = set(L)
        return all(self.map[x] == x for x in range(self.n) if x not in L)


@dataclass(frozen=True)
class VertexSubset:
    n: int
    mask: int

    def __post_init__(self):
        if self.mask < 0 or self.mask >> self.n:
            raise InvalidInputError("subset mask has bits outside [0, n)")

    @classmethod
    def of(cls, n: int, members: Iterable[int]) -> "VertexSubset":
        mask = 0
        for v in members:
            if not 0 <= v < n:
                raise InvalidInputError(f"vertex {v} out of range")
            mask |= 1 << v
        return cls(n, mask)

    @property
    def members(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n) if self.mask >> i & 1)

    def __len__(self) -> int:
        return bin(self.mask).count("1")


def sample_hypergraph(n: int, k: int, p: float, seed: int) -> Hypergraph:
    """Binomial random hypergraph: each of the C(n,k) edges present independently w.p. p."""
    if not (isinstance(p, (int, float, Fraction)) and 0 <= p <= 1):
        raise InvalidInputError(f"edge probability {p!r} not in [0, 1]")
    p = float(p)
    m = math.comb(n, k)
    if p == 0.0:
        return Hypergraph.empty(n, k)
    if p == 1.0:
        return Hypergraph.complete(n, k)
    rng = np.random.default_rng(seed)
    if m <= BITSET_LIMIT:
        return Hypergraph(n, k, np.flatnonzero(rng.random(m) < p))
    # geometric skipping: draw gaps between successive present edges
    chunk = max(1024, int(1.1 * p * m) + 64)
    found = []
    pos = -1
    while True:
        gaps = rng.geometric(p, size=chunk)
        cand = pos + np.cumsum(gaps)
        found.append(cand[cand < m])
        if cand[-1] >= m:
            break
        pos = int(cand[-1])
    return Hypergraph(n, k, np.concatenate(found))


def _check_pair(G: Hypergraph, H: Hypergraph) -> None:
    if G.n != H.n or G.k != H.k:
        raise InvalidInputError(f"shape mismatch: (n={G.n},k={G.k}) vs (n={H.n},k={H.k})")


def image_ranks(G: Hypergraph, pi: Bijection) -> np.ndarray:
    """Ranks of pi(e) for every edge e of G, in G's edge order."""
    if pi.n != G.n:
        raise InvalidInputError(f"bijection on {pi.n} vertices applied to n={G.n}")
    imgs = pi.array()[G.tuples()]
    imgs.sort(axis=1)
    return rank_array(imgs, G.n, G.k)


def apply_bijection(G: Hypergraph, pi: Bijection) -> Hypergraph:
    return Hypergraph(G.n, G.k, image_ranks(G, pi))


def overlap(G: Hypergraph, pi: Bijection, H: Hypergraph) -> int:
    """|pi(E(G)) ∩ E(H)|."""
    _check_pair(G, H)
    return int(H.contains_ranks(image_ranks(G, pi)).sum())


def edge_density(H: Hypergraph) -> Fraction:
    return Fraction(len(H), H.num_possible)


def complement(H: Hypergraph) -> Hypergraph:
    mask = np.ones(H.num_possible, dtype=bool)
    mask[H.edges] = False
    return Hypergraph(H.n, H.k, np.flatnonzero(mask))


def induced_edge_count(H: Hypergraph, S: VertexSubset | Iterable[int]) -> int:
    if not isinstance(S, VertexSubset):
        S = VertexSubset.of(H.n, S)
    if len(S) < H.k or not len(H):
        return 0
    inside = np.zeros(H.n, dtype=bool)
    inside[list(S.members)] = True
    return int(inside[H.tuples()].all(axis=1).sum())


# --- text format -----------------------------------------------------------


def format_hypergraph(H: Hypergraph) -> str:
    buf = io.StringIO()
    buf.write(f"{H.k} {H.n} {len(H)}\n")
    for row in H.tuples():
        buf.write(" ".join(str(int(v)) for v in row))
        buf.write("\n")
    return buf.getvalue()


def parse_hypergraph(text: str) -> Hypergraph:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise InvalidInputError("missing 'k n m' header")
    try:
        k, n, m = (int(x) for x in lines[0].split())
    except ValueError as exc:
        raise InvalidInputError(f"bad header {lines[0]!r}") from exc
    body = lines[1:]
    if len(body) != m:
        raise InvalidInputError(f"header announces {m} edges, found {len(body)}")
    tuples = []
    for ln in body:
        t = [int(x) for x in ln.split()]
        if len(t) != k or len(set(t)) != k:
            raise InvalidInputError(f"edge line {ln!r} is not a set of {k} vertices")
        tuples.append(t)
    return Hypergraph.from_tuples(n, k, tuples)


def write_hypergraph(H: Hypergraph, path: str | Path) -> None:
    Path(path).write_text(format_hypergraph(H))


def read_hypergraph(path: str | Path) -> Hypergraph:
    return parse_hypergraph(Path(path).read_text())
