"""Command-line entry point: ``reldisc <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

from . import bounds, harness, verify
from ._mix import mix
from .certifier import CertifierConfig
from .errors import InvalidInputError
from .hypergraph import edge_density, format_hypergraph, read_hypergraph, sample_hypergraph
from .oracle import check_witness, exact_disc_pair, exact_disc_subset


def _emit(text: str, path: str | None) -> None:
    if path and path != "-":
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _parse_assignments(items: list[str] | None) -> dict:
    """key=value pairs; values parsed as JSON when possible, else kept as strings."""
    out = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise InvalidInputError(f"expected key=value, got {item!r}")
        try:
            out[key.replace("-", "_")] = json.loads(raw)
        except json.JSONDecodeError:
            out[key.replace("-", "_")] = raw
    return out


def _load_json(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        return json.load(fh)


# --- subcommands -------------------------------------------------------------


def cmd_gen(args) -> int:
    seed = args.seed
    if args.role != "none":
        seed = mix(args.seed, 0 if args.role == "G" else 1)
    H = sample_hypergraph(args.n, args.k, args.p, seed)
    _emit(format_hypergraph(H), args.out)
    return 0


def cmd_disc_exact(args) -> int:
    if args.subset:
        rep = exact_disc_subset(read_hypergraph(args.subset), allow_large=args.allow_large)
    else:
        if not (args.g and args.h):
            raise InvalidInputError("disc-exact needs --g and --h, or --subset")
        G, H = read_hypergraph(args.g), read_hypergraph(args.h)
        rep = exact_disc_pair(G, H, method=args.method, workers=args.workers, allow_large=args.allow_large)
    _emit(rep.to_json(), args.out)
    return 0


def _certifier_config(args) -> CertifierConfig:
    fields = {**_load_json(args.config), **_parse_assignments(args.set)}
    if args.seed is not None:
        fields["seed"] = args.seed
    return CertifierConfig(**fields)


def cmd_certify(args) -> int:
    cfg = _certifier_config(args)
    if args.g or args.h:
        if not (args.g and args.h):
            raise InvalidInputError("give both --g and --h, or neither")
        G, H = read_hypergraph(args.g), read_hypergraph(args.h)
    else:
        if None in (args.n, args.k, args.p, args.q, args.seed):
            raise InvalidInputError("generating needs --n, --k, --p, --q and --seed")
        G, H = harness.generate_pair(args.n, args.k, args.p, args.q, args.seed)
    p = args.p if args.p is not None else float(edge_density(G))
    q = args.q if args.q is not None else float(edge_density(H))
    rep, tags = harness.certify_normalized(G, H, p, q, cfg)
    G2, H2 = harness.transform_pair(G, H, tags)
    ok = check_witness(G2, H2, rep)
    _emit(rep.to_json(), args.out)
    if not ok:
        print("witness self-check FAILED", file=sys.stderr)
    return 0 if ok else 1


def cmd_lambda(args) -> int:
    if args.m is not None:
        rho = Fraction(args.rho) if args.rho is not None else None
        if rho is None or args.K is None:
            raise InvalidInputError("lambda needs --m, --rho and --K")
        t = bounds.lambda_t(args.m, rho, args.K)
        out = {"m": args.m, "rho": float(rho), "K": args.K, "t": t, "lambda": float(t - args.m * rho)}
    else:
        if None in (args.n, args.k, args.p, args.q):
            raise InvalidInputError("lambda needs either --m/--rho/--K or --n/--k/--p/--q")
        m = bounds.lambda_trials(args.n, args.k, args.p)
        out = {"n": args.n, "k": args.k, "p": args.p, "q": args.q, "m": m, "K": math.log(args.n),
               "prediction": bounds.predicted_disc_via_lambda(args.n, args.k, args.p, args.q)}
    _emit(_dump(out), args.out)
    return 0


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise InvalidInputError(f"{args.function} needs --{', --'.join(missing)}")
    return [getattr(args, n) for n in names]


def cmd_bounds(args) -> int:
    f = args.function
    if f == "chernoff":
        mu, lam = _need(args, "mu", "lam")
        raw = bounds.chernoff_bound(mu, lam)
        out = {"mu": mu, "lambda": lam, "bound": min(1.0, raw), "raw": raw}
    elif f == "janson":
        mu, delta, lam = _need(args, "mu", "delta", "lam")
        out = {"mu": mu, "Delta": delta, "lambda": lam, "bound": bounds.janson_bound(mu, delta, lam)}
    elif f == "entropy":
        (p,) = _need(args, "p")
        out = {"p": p, "entropy": bounds.entropy(p)}
    elif f == "sandwich":
        m, p = _need(args, "m", "p")
        out = bounds.check_binomial_sandwich(int(m), Fraction(str(p)))._asdict()
    elif f == "hypergeom-tail":
        N, d1, d2, K = _need(args, "N", "d1", "d2", "K")
        out = bounds.hypergeom_tail_lower_check(N, d1, d2, K)._asdict()
    elif f == "regime":
        n, k, p, q = _need(args, "n", "k", "p", "q")
        out = bounds.classify_regime(n, k, p, q).to_dict()
    elif f == "envelope":
        n, k, p, q = _need(args, "n", "k", "p", "q")
        out = bounds.upper_envelope(n, k, p, q)._asdict()
    elif f == "disc-minus":
        n, k, p, q = _need(args, "n", "k", "p", "q")
        out = {"predicted_disc_minus": bounds.predicted_disc_minus(n, k, p, q)}
    else:  # argparse restricts choices
        raise AssertionError(f)
    _emit(_dump(out), args.out)
    return 0


def cmd_verify_bounds(args) -> int:
    checks = verify.run_checks(args.suite, samples=args.samples, seed=args.seed)
    _emit(verify.checks_to_csv(checks), args.out)
    bad = sum(not c.ok for c in checks)
    print(f"{len(checks) - bad}/{len(checks)} checks ok", file=sys.stderr)
    return 0 if bad == 0 else 1


def _sweep_config(args) -> harness.SweepConfig:
    d = _load_json(args.config)
    for name in ("n", "k", "p", "q"):
        v = getattr(args, name)
        if v is not None:
            d[name] = v
    simple = {"seeds": "seeds_per_point", "mode": "mode", "output": "output", "parallelism": "parallelism",
              "master_seed": "master_seed", "oracle_method": "oracle_method"}
    for flag, key in simple.items():
        v = getattr(args, flag)
        if v is not None:
            d[key] = v
    if args.keep_witnesses:
        d["keep_witnesses"] = True
    if args.timing:
        d["timing"] = True
    if args.set:
        d["certifier"] = {**d.get("certifier", {}), **_parse_assignments(args.set)}
    for name in ("n", "k", "p", "q"):
        if name not in d:
            raise InvalidInputError(f"sweep grid needs {name!r} (config file or --{name})")
    return harness.SweepConfig.from_dict(d)


def cmd_sweep(args) -> int:
    cfg = _sweep_config(args)
    rows = harness.run_sweep(cfg)
    if not cfg.output:
        sys.stdout.write(harness.rows_to_csv(rows))
    errors = sum(1 for r in rows if r.error)
    checks = harness.spot_check(cfg, rows, args.spot_checks) if args.spot_checks else []
    failed = [i for i, ok in checks if not ok]
    print(f"{len(rows)} rows, {errors} with errors; spot checks {len(checks) - len(failed)}/{len(checks)} ok",
          file=sys.stderr)
    return 1 if failed else 0


def cmd_report(args) -> int:
    rows = harness.read_csv(args.csv)
    groups = harness.scaling_report(rows, tolerance=args.tolerance)
    if args.json:
        _emit(_dump([g.to_dict() for g in groups]), args.out)
    else:
        _emit(harness.format_report(groups), args.out)
    if args.svg:
        harness.plot_report(groups, args.svg)
    return 0


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="reldisc", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="sample a random k-uniform hypergraph")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--p", type=float, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--role", choices=("none", "G", "H"), default="none",
                   help="derive the seed as certify/sweep do for G or H")
    g.add_argument("--out", "-o")
    g.set_defaults(func=cmd_gen)

    d = sub.add_parser("disc-exact", help="exact discrepancy by enumeration")
    d.add_argument("--g")
    d.add_argument("--h")
    d.add_argument("--subset", help="hypergraph file for the subset discrepancy disc(H)")
    d.add_argument("--method", choices=("enumerate", "bnb"), default="enumerate")
    d.add_argument("--workers", type=int, default=1)
    d.add_argument("--allow-large", action="store_true")
    d.add_argument("--out", "-o")
    d.set_defaults(func=cmd_disc_exact)

    c = sub.add_parser("certify", help="constructive lower bound on disc+(G, H)")
    c.add_argument("--n", type=int)
    c.add_argument("--k", type=int)
    c.add_argument("--p", type=float)
    c.add_argument("--q", type=float)
    c.add_argument("--seed", type=int)
    c.add_argument("--g", help="hypergraph file for G (otherwise generated)")
    c.add_argument("--h", help="hypergraph file for H (otherwise generated)")
    c.add_argument("--config", help="JSON file of certifier settings")
    c.add_argument("--set", action="append", metavar="KEY=VALUE", help="certifier override")
    c.add_argument("--out", "-o")
    c.set_defaults(func=cmd_certify)

    la = sub.add_parser("lambda", help="binomial rate quantity or the resulting prediction")
    la.add_argument("--m", type=int)
    la.add_argument("--rho")
    la.add_argument("--K", type=float)
    la.add_argument("--n", type=int)
    la.add_argument("--k", type=int)
    la.add_argument("--p", type=float)
    la.add_argument("--q", type=float)
    la.add_argument("--out", "-o")
    la.set_defaults(func=cmd_lambda)

    b = sub.add_parser("bounds", help="evaluate one bound or regime function")
    b.add_argument("--function", required=True,
                   choices=("chernoff", "janson", "entropy", "sandwich", "hypergeom-tail", "regime",
                            "envelope", "disc-minus"))
    for name, typ in (("mu", float), ("lam", float), ("delta", float), ("m", int), ("N", int),
                      ("d1", int), ("d2", int), ("K", float), ("n", int), ("k", int), ("p", float),
                      ("q", float)):
        b.add_argument(f"--{name}", type=typ)
    b.add_argument("--out", "-o")
    b.set_defaults(func=cmd_bounds)

    v = sub.add_parser("verify-bounds", help="grid checks as a CSV pass/fail table")
    v.add_argument("--suite", action="append", choices=sorted(verify.SUITES),
                   help="repeatable; default runs all")
    v.add_argument("--samples", type=int, default=verify.MC_SAMPLES)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", "-o")
    v.set_defaults(func=cmd_verify_bounds)

    s = sub.add_parser("sweep", help="seeded sweep over (n, k, p, q)")
    s.add_argument("--config", help="JSON sweep config; flags override its fields")
    s.add_argument("--n", type=int, nargs="+")
    s.add_argument("--k", type=int, nargs="+")
    s.add_argument("--p", nargs="+", help='numbers, "const:x" or "pow:c,alpha"')
    s.add_argument("--q", nargs="+")
    s.add_argument("--seeds", type=int)
    s.add_argument("--mode", choices=harness.MODES)
    s.add_argument("--output", "-o")
    s.add_argument("--parallelism", "-j", type=int)
    s.add_argument("--master-seed", type=int)
    s.add_argument("--oracle-method", choices=("enumerate", "bnb"))
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="certifier override")
    s.add_argument("--keep-witnesses", action="store_true")
    s.add_argument("--timing", action="store_true", help="fill wall_time (output no longer byte-stable)")
    s.add_argument("--spot-checks", type=int, default=5)
    s.set_defaults(func=cmd_sweep)

    r = sub.add_parser("report", help="scaling summary of a sweep CSV")
    r.add_argument("csv")
    r.add_argument("--tolerance", type=float, default=harness.SLOPE_TOLERANCE)
    r.add_argument("--json", action="store_true")
    r.add_argument("--svg")
    r.add_argument("--out", "-o")
    r.set_defaults(func=cmd_report)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
