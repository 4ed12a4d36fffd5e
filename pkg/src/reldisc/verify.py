"""Grid checks of the bounds toolkit, emitted as a pass/fail table."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

import numpy as np

from . import bounds
from ._mix import mix
from .errors import InvalidInputError

LAMBDA_K = (0.5, 1.0, 2.0, math.log(30))
HYPERGEOM_N = (200, 500, 1000, 2000)
MC_SAMPLES = 100_000


@dataclass(frozen=True)
class BoundCheck:
    function: str
    params: dict
    value: float
    bound: float | str
    ok: bool

    def cells(self) -> list[str]:
        params = ";".join(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}" for k, v in self.params.items())
        bound = self.bound if isinstance(self.bound, str) else repr(float(self.bound))
        return [self.function, params, repr(float(self.value)), bound, "1" if self.ok else "0"]


def lambda_reference(m: int, rho: Fraction, K: float) -> int:
    """Largest t with exact P[Bin(m, rho) >= t] >= e^{-K}, by scanning every t."""
    threshold = math.exp(-K)
    best = 0
    for t in range(m + 1):
        tail = sum(math.comb(m, j) * rho**j * (1 - rho) ** (m - j) for j in range(t, m + 1))
        if tail >= threshold:
            best = t
    return best


def lambda_checks(max_m: int = 30) -> Iterator[BoundCheck]:
    for m in range(1, max_m + 1):
        for i in range(1, 10):
            rho = Fraction(i, 10)
            for K in LAMBDA_K:
                got = bounds.lambda_t(m, rho, K)
                ref = lambda_reference(m, rho, K)
                yield BoundCheck("lambda", {"m": m, "rho": float(rho), "K": K}, got, ref, got == ref)


def hypergeom_grid(Ns: Iterable[int] = HYPERGEOM_N) -> Iterator[tuple[int, int, int, float]]:
    """Grid points meeting every precondition of the hypergeometric lower-tail check."""
    for N in Ns:
        step = N // 10
        ds = list(range(math.ceil(0.1 * N), 2 * N // 3 + 1, step))
        for d1 in ds:
            for d2 in ds:
                cap = d1 * d2 / (100 * N)
                for K in sorted({1.0, 2.0, min(3.0, cap)}):
                    if 1 <= K <= cap:
                        yield N, d1, d2, K


def hypergeom_checks(Ns: Iterable[int] = HYPERGEOM_N) -> Iterator[BoundCheck]:
    for N, d1, d2, K in hypergeom_grid(Ns):
        c = bounds.hypergeom_tail_lower_check(N, d1, d2, K)
        yield BoundCheck("hypergeom_tail_lower", {"N": N, "d1": d1, "d2": d2, "K": K},
                         c.tail, c.bound, c.ok)


def sandwich_checks() -> Iterator[BoundCheck]:
    for m in range(10, 101, 10):
        for j in range(1, m):
            s = bounds.check_binomial_sandwich(m, Fraction(j, m))
            yield BoundCheck("binomial_sandwich", {"m": m, "pm": j}, s.value,
                             f"{s.lower!r}..{s.upper!r}", s.ok)


# (m, rho, lambda) for two-sided binomial deviations
CHERNOFF_POINTS = (
    (200, 0.5, 20.0), (200, 0.5, 10.0), (100, 0.3, 12.0),
    (500, 0.1, 15.0), (1000, 0.05, 20.0), (60, 0.5, 10.0),
)
# (m, rho, lambda) for the independent lower tail, Delta = 0
JANSON_INDEPENDENT = ((100, 0.3, 15.0), (400, 0.2, 20.0), (50, 0.5, 8.0))
# (l, r, lambda): X counts adjacent pairs i, i+1 both present among l Bernoulli(r) sites
JANSON_DEPENDENT = ((200, 0.5, 15.0), (400, 0.3, 12.0), (100, 0.6, 10.0))


def _slack(bound: float, samples: int) -> float:
    b = min(1.0, bound)
    return 3.0 * math.sqrt(b * (1.0 - b) / samples)


def concentration_checks(samples: int = MC_SAMPLES, seed: int = 0) -> Iterator[BoundCheck]:
    """Empirical tail frequencies against the Chernoff and Janson bounds with 3 sigma slack."""
    for i, (m, rho, lam) in enumerate(CHERNOFF_POINTS):
        rng = np.random.default_rng(mix(seed, 0, i))
        x = rng.binomial(m, rho, size=samples)
        mu = m * rho
        freq = float(np.mean(np.abs(x - mu) > lam))
        b = min(1.0, bounds.chernoff_bound(mu, lam))
        yield BoundCheck("chernoff", {"m": m, "rho": rho, "lambda": lam}, freq, b,
                         freq <= b + _slack(b, samples))
    for i, (m, rho, lam) in enumerate(JANSON_INDEPENDENT):
        rng = np.random.default_rng(mix(seed, 1, i))
        x = rng.binomial(m, rho, size=samples)
        mu = m * rho
        freq = float(np.mean(x <= mu - lam))
        b = bounds.janson_bound(mu, 0.0, lam)
        yield BoundCheck("janson", {"m": m, "rho": rho, "lambda": lam, "Delta": 0.0}, freq, b,
                         freq <= b + _slack(b, samples))
    for i, (l, r, lam) in enumerate(JANSON_DEPENDENT):
        rng = np.random.default_rng(mix(seed, 2, i))
        hits = 0
        chunk = 10_000
        for start in range(0, samples, chunk):
            size = min(chunk, samples - start)
            sites = rng.random((size, l)) < r
            x = np.sum(sites[:, :-1] & sites[:, 1:], axis=1)
            hits += int(np.sum(x <= (l - 1) * r * r - lam))
        freq = hits / samples
        mu = (l - 1) * r * r
        # each indicator overlaps its two neighbours; ordered-pair sum over-counted at the ends
        delta = 2.0 * (l - 1) * r**3
        b = bounds.janson_bound(mu, delta, lam)
        yield BoundCheck("janson", {"l": l, "r": r, "lambda": lam, "Delta": delta}, freq, b,
                         freq <= b + _slack(b, samples))


SUITES = {
    "lambda": lambda **kw: lambda_checks(),
    "hypergeom": lambda **kw: hypergeom_checks(),
    "sandwich": lambda **kw: sandwich_checks(),
    "concentration": lambda samples=MC_SAMPLES, seed=0, **kw: concentration_checks(samples, seed),
}


def run_checks(names: Iterable[str] | None = None, **kw) -> list[BoundCheck]:
    names = list(SUITES) if names is None else list(names)
    out = []
    for name in names:
        if name not in SUITES:
            raise InvalidInputError(f"unknown check suite {name!r}; choose from {sorted(SUITES)}")
        out.extend(SUITES[name](**kw))
    return out


def checks_to_csv(checks: Iterable[BoundCheck]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["function", "params", "value", "bound", "ok"])
    for c in checks:
        w.writerow(c.cells())
    return buf.getvalue()
