"""Seeded parameter sweeps, scaling summaries and CSV emission."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from . import bounds
from ._mix import mix
from .certifier import CertifierConfig, certify
from .errors import InvalidInputError
from .hypergraph import Hypergraph, complement, sample_hypergraph
from .oracle import DiscrepancyReport, check_witness, exact_disc_pair

SCHEMA_LINE = "# reldisc-sweep schema v1"
MODES = ("certify", "oracle", "bounds", "envelope")
COMPLEMENT_G = "complement-G"
COMPLEMENT_H = "complement-H"
SWAP = "swap"
SLOPE_TOLERANCE = 0.15


# --- (p, q) normalization -----------------------------------------------------


def normalize_pq(p: float, q: float) -> tuple[float, float, tuple[str, ...]]:
    """Complement and swap until p' <= q' <= 1/2. Returns the tags applied, in order."""
    if not (0 <= p <= 1 and 0 <= q <= 1):
        raise InvalidInputError(f"p, q must lie in [0, 1], got {p}, {q}")
    tags = []
    if q > 0.5:
        q = 1.0 - q
        tags.append(COMPLEMENT_H)
    if p > 0.5:
        p = 1.0 - p
        tags.append(COMPLEMENT_G)
    if p > q:
        p, q = q, p
        tags.append(SWAP)
    return p, q, tuple(tags)


def transform_pair(G: Hypergraph, H: Hypergraph, tags: Sequence[str]) -> tuple[Hypergraph, Hypergraph]:
    """Apply the tags from normalize_pq to the hypergraphs themselves."""
    for t in tags:
        if t == COMPLEMENT_G:
            G = complement(G)
        elif t == COMPLEMENT_H:
            H = complement(H)
        elif t == SWAP:
            G, H = H, G
        else:
            raise InvalidInputError(f"unknown transform tag {t!r}")
    return G, H


def tag_string(tags: Sequence[str]) -> str:
    return "+".join(tags) if tags else "none"


# --- schedules ---------------------------------------------------------------


def parse_schedule(spec) -> tuple[str, tuple[float, ...]]:
    """A density given as a number, "const:x" or "pow:c,alpha" (c * n^alpha)."""
    if isinstance(spec, (int, float)):
        return "const", (float(spec),)
    s = str(spec).strip()
    kind, _, rest = s.partition(":")
    try:
        if not rest:
            return "const", (float(s),)
        if kind == "const":
            return "const", (float(rest),)
        if kind == "pow":
            c, alpha = rest.split(",")
            return "pow", (float(c), float(alpha))
    except ValueError:
        pass
    raise InvalidInputError(f"cannot parse density schedule {spec!r}")


def evaluate_schedule(spec, n: int) -> float:
    kind, args = parse_schedule(spec)
    if kind == "const":
        return args[0]
    return args[0] * n ** args[1]


# --- configuration -----------------------------------------------------------


@dataclass
class SweepConfig:
    n: list[int]
    k: list[int]
    p: list
    q: list
    seeds_per_point: int = 1
    mode: str = "certify"
    output: str | None = None
    parallelism: int = 1
    master_seed: int = 0
    certifier: dict = field(default_factory=dict)
    keep_witnesses: bool = False
    timing: bool = False
    oracle_method: str = "enumerate"

    def __post_init__(self):
        for name in ("n", "k", "p", "q"):
            v = getattr(self, name)
            if isinstance(v, (int, float, str)):
                v = [v]
                setattr(self, name, v)
            if not v:
                raise InvalidInputError(f"grid axis {name!r} is empty")
        if self.seeds_per_point < 1:
            raise InvalidInputError("seeds_per_point must be >= 1")
        if self.mode not in MODES:
            raise InvalidInputError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.parallelism < 1:
            raise InvalidInputError("parallelism must be >= 1")
        for p in self.p:
            parse_schedule(p)
        for q in self.q:
            parse_schedule(q)
        self.certifier_config()  # validate overrides early

    def certifier_config(self, seed: int = 0) -> CertifierConfig:
        return CertifierConfig(**{**self.certifier, "seed": seed})

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise InvalidInputError(f"unknown sweep config keys: {sorted(extra)}")
        if "grid" in d:
            raise InvalidInputError("put n, k, p, q at the top level of the config")
        return cls(**d)

    @classmethod
    def from_json(cls, path: str) -> "SweepConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Task:
    row: int
    n: int
    k: int
    p_spec: str
    q_spec: str
    seed: int


def expand(cfg: SweepConfig) -> list[Task]:
    """Grid points in n, k, p, q order, seeds innermost; row seeds hash (master_seed, row)."""
    tasks = []
    for n, k, p, q in product(cfg.n, cfg.k, cfg.p, cfg.q):
        for _ in range(cfg.seeds_per_point):
            i = len(tasks)
            tasks.append(Task(i, int(n), int(k), str(p), str(q), mix(cfg.master_seed, i)))
    return tasks


# --- rows --------------------------------------------------------------------


@dataclass
class SweepRow:
    row: int
    n: int
    k: int
    p: float
    q: float
    seed: int
    transform: str = "none"
    regime: str = ""
    predicted: float | None = None
    achieved: float | None = None
    ratio: float | None = None
    provenance: str = ""
    low_p: bool | None = None
    wall_time: float | None = None
    error: str = ""

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def cells(self) -> list[str]:
        out = []
        for name in self.columns():
            v = getattr(self, name)
            if v is None:
                out.append("")
            elif isinstance(v, bool):
                out.append("1" if v else "0")
            elif isinstance(v, float):
                out.append(repr(v))
            else:
                out.append(str(v))
        return out

    @classmethod
    def from_cells(cls, rec: dict) -> "SweepRow":
        def num(x, typ=float):
            return None if x == "" else typ(x)

        return cls(row=int(rec["row"]), n=int(rec["n"]), k=int(rec["k"]), p=float(rec["p"]),
                   q=float(rec["q"]), seed=int(rec["seed"]), transform=rec["transform"],
                   regime=rec["regime"], predicted=num(rec["predicted"]), achieved=num(rec["achieved"]),
                   ratio=num(rec["ratio"]), provenance=rec["provenance"],
                   low_p=None if rec["low_p"] == "" else rec["low_p"] == "1",
                   wall_time=num(rec["wall_time"]), error=rec["error"])


def generate_pair(n: int, k: int, p: float, q: float, seed: int) -> tuple[Hypergraph, Hypergraph]:
    """G and H for a row seed; the standalone CLI uses the same derivation."""
    return sample_hypergraph(n, k, p, mix(seed, 0)), sample_hypergraph(n, k, q, mix(seed, 1))


def certify_normalized(G: Hypergraph, H: Hypergraph, p: float, q: float,
                       cfg: CertifierConfig) -> tuple[DiscrepancyReport, tuple[str, ...]]:
    """certify() after complement/swap normalization; the witness acts on the transformed pair."""
    p2, q2, tags = normalize_pq(p, q)
    G2, H2 = transform_pair(G, H, tags)
    return certify(G2, H2, p2, q2, cfg), tags


def _run_task(args: tuple[SweepConfig, Task]) -> tuple[SweepRow, str | None]:
    cfg, t = args
    p = evaluate_schedule(t.p_spec, t.n)
    q = evaluate_schedule(t.q_spec, t.n)
    row = SweepRow(t.row, t.n, t.k, p, q, t.seed)
    witness = None
    start = time.perf_counter()
    try:
        p2, q2, tags = normalize_pq(p, q)
        row.transform = tag_string(tags)
        reg = bounds.classify_regime(t.n, t.k, p2, q2)
        row.regime, row.predicted, row.low_p = reg.regime, reg.predicted, reg.low_p
        if cfg.mode == "bounds":
            row.achieved = bounds.predicted_disc_via_lambda(t.n, t.k, p2, q2)
            row.provenance = "lambda"
        elif cfg.mode == "envelope":
            env = bounds.upper_envelope(t.n, t.k, p2, q2)
            row.achieved = env.eps + env.lam
            row.provenance = f"envelope-{env.branch}"
        else:
            G, H = generate_pair(t.n, t.k, p, q, t.seed)
            if cfg.mode == "certify":
                rep, _ = certify_normalized(G, H, p, q, cfg.certifier_config(t.seed))
            else:
                rep = exact_disc_pair(G, H, method=cfg.oracle_method)
            row.achieved = float(rep.value)
            row.provenance = rep.provenance
            if cfg.keep_witnesses:
                witness = rep.to_json()
        if row.predicted and row.achieved is not None:
            row.ratio = row.achieved / row.predicted
    except Exception as exc:  # recorded in-row; the sweep carries on
        row.error = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    if cfg.timing:
        row.wall_time = round(time.perf_counter() - start, 6)
    return row, witness


def witness_dir(output: str) -> str:
    return output + ".witnesses"


def run_sweep(cfg: SweepConfig) -> list[SweepRow]:
    """Run every grid point x seed. Rows come back (and are written) in row order."""
    tasks = expand(cfg)
    jobs = [(cfg, t) for t in tasks]
    if cfg.parallelism == 1 or len(tasks) == 1:
        results = [_run_task(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=cfg.parallelism) as pool:
            results = list(pool.map(_run_task, jobs, chunksize=max(1, len(jobs) // (4 * cfg.parallelism))))
    rows = [r for r, _ in results]
    if cfg.output:
        write_csv(rows, cfg.output)
        if cfg.keep_witnesses:
            d = witness_dir(cfg.output)
            os.makedirs(d, exist_ok=True)
            for r, w in results:
                if w is not None:
                    with open(os.path.join(d, f"row-{r.row:06d}.json"), "w") as fh:
                        fh.write(w)
    return rows


def rows_to_csv(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    buf.write(SCHEMA_LINE + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SweepRow.columns())
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()


def write_csv(rows: Iterable[SweepRow], path: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))


def read_csv(path: str) -> list[SweepRow]:
    with open(path, newline="") as fh:
        first = fh.readline().rstrip("\n")
        if first != SCHEMA_LINE:
            raise InvalidInputError(f"{path}: expected {SCHEMA_LINE!r}, got {first!r}")
        reader = csv.DictReader(fh)
        if reader.fieldnames != SweepRow.columns():
            raise InvalidInputError(f"{path}: unexpected columns {reader.fieldnames}")
        return [SweepRow.from_cells(rec) for rec in reader]


def spot_check(cfg: SweepConfig, rows: Sequence[SweepRow], count: int = 5) -> list[tuple[int, bool]]:
    """Recompute a few certify/oracle rows from scratch and re-verify their witnesses."""
    if cfg.mode not in ("certify", "oracle"):
        return []
    candidates = [r for r in rows if not r.error]
    rng = np.random.default_rng(mix(cfg.master_seed, len(rows)))
    picks = sorted(rng.choice(len(candidates), size=min(count, len(candidates)), replace=False).tolist())
    out = []
    for i in picks:
        r = candidates[i]
        G, H = generate_pair(r.n, r.k, r.p, r.q, r.seed)
        if cfg.mode == "certify":
            rep, tags = certify_normalized(G, H, r.p, r.q, cfg.certifier_config(r.seed))
            G, H = transform_pair(G, H, tags)
        else:
            rep = exact_disc_pair(G, H, method=cfg.oracle_method)
        ok = check_witness(G, H, rep) and float(rep.value) == r.achieved
        out.append((r.row, ok))
    return out


# --- scaling summary -----------------------------------------------------------


@dataclass
class GroupSummary:
    k: int
    regime: str
    ns: list[int]
    count: list[int]
    median_ratio: list[float]
    q25_ratio: list[float]
    q75_ratio: list[float]
    median_achieved: list[float]
    median_predicted: list[float]
    ratio_band: float | None = None
    slope: float | None = None
    predicted_slope: float | None = None
    slope_deviation: float | None = None
    flagged: bool = False
    notice: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def scaling_report(rows: Sequence[SweepRow], tolerance: float = SLOPE_TOLERANCE) -> list[GroupSummary]:
    """Per (k, regime): ratio quantiles by n and the log-log slope of median achieved vs n."""
    groups: dict[tuple[int, str], dict[int, list[SweepRow]]] = {}
    for r in rows:
        if r.error or r.achieved is None or r.predicted is None:
            continue
        groups.setdefault((r.k, r.regime), {}).setdefault(r.n, []).append(r)
    out = []
    for (k, regime) in sorted(groups):
        by_n = groups[(k, regime)]
        ns = sorted(by_n)
        g = GroupSummary(k, regime, ns, [], [], [], [], [], [])
        for n in ns:
            rs = by_n[n]
            ratios = np.array([r.ratio for r in rs if r.ratio is not None], dtype=float)
            g.count.append(len(rs))
            q25, med, q75 = (np.quantile(ratios, [0.25, 0.5, 0.75]) if len(ratios) else [math.nan] * 3)
            g.q25_ratio.append(float(q25))
            g.median_ratio.append(float(med))
            g.q75_ratio.append(float(q75))
            g.median_achieved.append(float(statistics.median(r.achieved for r in rs)))
            g.median_predicted.append(float(statistics.median(r.predicted for r in rs)))
        good = [m for m in g.median_ratio if m > 0]
        if len(good) == len(ns) and good:
            g.ratio_band = max(good) / min(good)
        if len(ns) < 3:
            g.notice = f"slope omitted: only {len(ns)} distinct n"
        elif min(g.median_achieved) <= 0 or min(g.median_predicted) <= 0:
            g.notice = "slope omitted: non-positive median"
        else:
            g.slope = _loglog_slope(ns, g.median_achieved)
            g.predicted_slope = _loglog_slope(ns, g.median_predicted)
            g.slope_deviation = g.slope - g.predicted_slope
            g.flagged = abs(g.slope_deviation) > tolerance
        out.append(g)
    return out


def format_report(groups: Sequence[GroupSummary]) -> str:
    lines = []
    for g in groups:
        lines.append(f"k={g.k} regime={g.regime}")
        lines.append("  n        count  median_ratio  q25       q75       median_achieved  median_predicted")
        for i, n in enumerate(g.ns):
            lines.append(f"  {n:<8d} {g.count[i]:<6d} {g.median_ratio[i]:<13.6g} {g.q25_ratio[i]:<9.4g} "
                         f"{g.q75_ratio[i]:<9.4g} {g.median_achieved[i]:<16.6g} {g.median_predicted[i]:.6g}")
        if g.ratio_band is not None:
            lines.append(f"  ratio band (max/min median): {g.ratio_band:.4g}")
        if g.slope is None:
            lines.append(f"  {g.notice}")
        else:
            flag = "  FLAG" if g.flagged else ""
            lines.append(f"  slope {g.slope:.4f} vs predicted {g.predicted_slope:.4f} "
                         f"(deviation {g.slope_deviation:+.4f}){flag}")
    return "\n".join(lines) + "\n"


def plot_report(groups: Sequence[GroupSummary], path: str) -> None:
    """Log-log SVG of median achieved and predicted against n, one panel per group."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(len(groups), 1, figsize=(6, 3.5 * max(1, len(groups))), squeeze=False)
    for ax, g in zip(axes[:, 0], groups):
        ax.loglog(g.ns, g.median_achieved, "o-", label="median achieved")
        ax.loglog(g.ns, g.median_predicted, "s--", label="predicted")
        ax.set_title(f"k={g.k}, {g.regime}")
        ax.set_xlabel("n")
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# --- planted sparse instances ---------------------------------------------------


def plant_codegrees(G: Hypergraph, H: Hypergraph, pairs: Sequence[tuple[int, int]],
                    size: int | None = None) -> Hypergraph:
    """Add edges to H so that each v in ``pairs`` sees the first ``size`` projected
    G-neighbours of its u (all of them when size is None). L is the default left set."""
    from .certifier import build_projection, default_left
    from .hypergraph import unrank_array, rank_array

    n, k = G.n, G.k
    L = default_left(n, k)
    in_l = np.zeros(n, dtype=bool)
    in_l[list(L)] = True
    outside = np.flatnonzero(~in_l)
    PG = build_projection(G, L)
    new = []
    for u, v in pairs:
        nb = PG.neighbors(u)
        if size is not None:
            nb = nb[:size]
        if not len(nb):
            continue
        rest = outside[unrank_array(nb, len(outside), k - 1)]
        edges = np.concatenate([np.full((len(rest), 1), v), rest], axis=1)
        edges.sort(axis=1)
        new.append(edges)
    if not new:
        return H
    ranks = rank_array(np.concatenate(new), n, k)
    return Hypergraph(n, k, np.union1d(H.edges, ranks))
