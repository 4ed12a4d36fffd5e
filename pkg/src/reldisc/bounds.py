"""Concentration inequalities, the binomial rate quantity and regime predictions.

All logarithms are natural. Predicted discrepancy values carry constant 1;
the true constants depend on k and are only ever measured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .errors import InvalidInputError
from .oracle import as_fraction, binom_logtail, hypergeom_tail_exact, EXACT_BINOM_LIMIT

DENSE = "dense"
SPARSE_21 = "sparse-2.1"
SPARSE_22 = "sparse-2.2"

# pN below this is outside the range where survival arguments apply
LOW_P_FLAG = 8


def chernoff_bound(mu: float, lam: float) -> float:
    """2 exp(-lam^2 / (4 mu)) for P[|X - mu| > lam], valid when 0 <= lam <= mu.

    The raw value is returned; it exceeds 1 for small lam.
    """
    if lam < 0 or lam > mu:
        raise InvalidInputError(f"need 0 <= lambda <= mu, got lambda={lam}, mu={mu}")
    if lam == 0:
        return 2.0
    return 2.0 * math.exp(-lam * lam / (4.0 * mu))


def janson_bound(mu: float, delta: float, lam: float) -> float:
    """exp(-lam^2 / (2 mu + Delta)) for the lower tail P[X <= mu - lam]."""
    if lam <= 0 or mu < 0 or delta < 0:
        raise InvalidInputError(f"need lambda > 0, mu >= 0, Delta >= 0 (got {lam}, {mu}, {delta})")
    denom = 2.0 * mu + delta
    if denom == 0:
        return 0.0
    return math.exp(-lam * lam / denom)


def entropy(p: float) -> float:
    """p log p + (1-p) log(1-p); negative on (0, 1)."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise InvalidInputError(f"entropy needs 0 < p < 1, got {p}")
    return p * math.log(p) + (1.0 - p) * math.log1p(-p)


SANDWICH_LOWER = math.sqrt(2.0 * math.pi) / math.e**2
SANDWICH_UPPER = math.e / (2.0 * math.pi)


class Sandwich(NamedTuple):
    value: float
    lower: float
    upper: float
    ok: bool


def check_binomial_sandwich(m: int, p) -> Sandwich:
    """Evaluate C(m, pm) sqrt(m p (1-p)) e^{m H(p)} against sqrt(2 pi)/e^2 and e/(2 pi)."""
    pf = as_fraction(p)
    j = pf * m
    if j.denominator != 1:
        raise InvalidInputError(f"p*m = {float(j)} is not an integer")
    if not 0 < pf < 1:
        raise InvalidInputError(f"p={p} not in (0, 1)")
    j = int(j)
    x = float(pf)
    logv = math.log(math.comb(m, j)) + 0.5 * math.log(m * x * (1 - x)) + m * entropy(x)
    v = math.exp(logv)
    return Sandwich(v, SANDWICH_LOWER, SANDWICH_UPPER, SANDWICH_LOWER <= v <= SANDWICH_UPPER)


class HypergeomCheck(NamedTuple):
    tail: float
    bound: float
    ok: bool
    t0: int
    log_tail: float


def hypergeom_tail_lower_check(N: int, d1: int, d2: int, K) -> HypergeomCheck:
    """Exact hypergeometric tail beyond d1 d2/N + sqrt(d1 d2 K/N) against e^{-40K}."""
    if not 1 <= d1 <= Fraction(2 * N, 3):
        raise InvalidInputError(f"violates 1 <= d1 <= 2N/3 (d1={d1}, N={N})")
    if not 1 <= d2 <= Fraction(2 * N, 3):
        raise InvalidInputError(f"violates 1 <= d2 <= 2N/3 (d2={d2}, N={N})")
    Kf = as_fraction(K)
    if Kf < 1:
        raise InvalidInputError(f"violates K >= 1 (K={K})")
    if Kf > Fraction(d1 * d2, 100 * N):
        raise InvalidInputError(f"violates K <= d1 d2/(100N) = {d1 * d2 / (100 * N):.6g} (K={K})")
    prod = d1 * d2
    # smallest integer t with t - d1 d2/N >= sqrt(d1 d2 K / N), decided exactly
    t = max(0, math.floor(prod / N + math.sqrt(prod * float(Kf) / N)) - 2)
    while not (t * N - prod >= 0 and (t * N - prod) ** 2 >= prod * Kf * N):
        t += 1
    tail = hypergeom_tail_exact(N, d1, d2, t)
    log_tail = math.log(tail.numerator) - math.log(tail.denominator) if tail else -math.inf
    bound_log = -40.0 * float(Kf)
    return HypergeomCheck(math.exp(log_tail), math.exp(bound_log), log_tail >= bound_log, t, log_tail)


def _tails_exact(m: int, rho: Fraction) -> list[Fraction]:
    """tails[t] = P[X >= t] for t = 0..m+1."""
    tails = [Fraction(0)] * (m + 2)
    acc = Fraction(0)
    for j in range(m, -1, -1):
        acc += math.comb(m, j) * rho**j * (1 - rho) ** (m - j)
        tails[j] = acc
    return tails


def lambda_t(m: int, rho, K: float) -> int:
    """Largest integer t in [0, m] with P[X >= t] >= e^{-K}, X ~ Bin(m, rho)."""
    if m < 1:
        raise InvalidInputError(f"m={m} must be >= 1")
    if not 0 < rho < 1:
        raise InvalidInputError(f"rho={rho} not in (0, 1)")
    if K < 0:
        raise InvalidInputError(f"K={K} must be >= 0")
    if m <= EXACT_BINOM_LIMIT:
        threshold = math.exp(-K)
        tails = _tails_exact(m, as_fraction(rho))
        for t in range(m, -1, -1):
            if tails[t] >= threshold:
                return t
        raise AssertionError("P[X >= 0] = 1 always qualifies")
    lo, hi = 0, m  # invariant: lo qualifies
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if binom_logtail(m, rho, mid) >= -K:
            lo = mid
        else:
            hi = mid - 1
    return lo


def rate_lambda(m: int, rho, K: float) -> float:
    """Largest upper deviation t - m rho still reached with probability >= e^{-K}."""
    t = lambda_t(m, rho, K)
    return float(t - m * as_fraction(rho))


@dataclass(frozen=True)
class RegimeParams:
    n: int
    k: int
    p: float
    q: float
    N: int
    pqN: float
    gamma: float | None
    regime: str
    predicted: float
    low_p: bool

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}


def projection_size(n: int, k: int) -> int:
    """N = C(n - floor(n/k), k-1)."""
    return math.comb(n - n // k, k - 1)


def _check_params(n: int, k: int, p: float, q: float) -> None:
    if not 2 <= k < n:
        raise InvalidInputError(f"need 2 <= k < n, got n={n}, k={k}")
    if q > 0.5:
        raise InvalidInputError(f"q={q} > 1/2: complement H first (disc(G, H-bar) = disc(G, H))")
    if p > q:
        raise InvalidInputError(f"p={p} > q={q}: swap G and H, or complement, before classifying")
    if p <= 0:
        raise InvalidInputError(f"p={p} must be positive")


def classify_regime(n: int, k: int, p: float, q: float) -> RegimeParams:
    _check_params(n, k, p, q)
    N = projection_size(n, k)
    logn = math.log(n)
    pqN = p * q * N
    total = math.comb(n, k)
    if pqN > logn / 30.0:
        return RegimeParams(n, k, p, q, N, pqN, None, DENSE,
                            math.sqrt(p * q * total * n * logn), p * N < LOW_P_FLAG)
    gamma = logn / pqN
    if p * N >= logn / (5.0 * math.log(gamma)):
        regime, predicted = SPARSE_21, n * logn / math.log(gamma)
    else:
        regime, predicted = SPARSE_22, p * total
    return RegimeParams(n, k, p, q, N, pqN, gamma, regime, predicted, p * N < LOW_P_FLAG)


def lambda_trials(n: int, k: int, p: float) -> int:
    """p C(n-1, k-1) rounded half-up, never below 1."""
    return max(1, math.floor(p * math.comb(n - 1, k - 1) + 0.5))


def predicted_disc_via_lambda(n: int, k: int, p: float, q: float) -> float:
    """n * Lambda(p C(n-1,k-1), q, log n)."""
    _check_params(n, k, p, q)
    return n * rate_lambda(lambda_trials(n, k, p), q, math.log(n))


def predicted_disc_minus(n: int, k: int, p: float, q: float) -> float:
    """Order of the lower one-sided discrepancy: dense branch as disc, else p q C(n,k)."""
    r = classify_regime(n, k, p, q)
    if r.regime == DENSE:
        return r.predicted
    return p * q * math.comb(n, k)


class Envelope(NamedTuple):
    eps: float
    lam: float
    branch: str
    gamma_prime: float | None


def upper_envelope(n: int, k: int, p: float, q: float) -> Envelope:
    """The density-gap error eps and the union-bound deviation lambda for the upper bound."""
    _check_params(n, k, p, q)
    mean = p * q * math.comb(n, k)
    logn = math.log(n)
    eps = 4.0 * n**0.25 * math.sqrt(mean)
    if mean > 4.0 * n * logn:
        return Envelope(eps, 2.0 * math.sqrt(mean * n * logn), "dense", None)
    gp = 4.0 * math.e * n * logn / mean
    return Envelope(eps, 4.0 * math.e**2 * n * logn / math.log(gp), "sparse", gp)


def sparse_hit_threshold(n: int, gamma: float) -> float:
    """log n / (6 log gamma): codegree each sparse-2.1 matched pair must reach."""
    return math.log(n) / (6.0 * math.log(gamma))


def hit_probability(size: int, q: float, regime: str, n: int, gamma: float) -> float:
    """Chance that a q-random subset of R meets one fixed set of the given size well enough.

    sparse-2.1: at least log n/(6 log gamma) elements; sparse-2.2: the whole set.
    """
    if regime == SPARSE_22:
        return q**size
    t = math.ceil(sparse_hit_threshold(n, gamma))
    if t > size:
        return 0.0
    return math.exp(binom_logtail(size, q, t))


def matching_guarantee(num_edges: int, max_degree: int) -> float:
    """e/(Delta+1): a matching at least this large exists (one colour class of a Vizing colouring)."""
    return num_edges / (max_degree + 1)
