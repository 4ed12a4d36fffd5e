import csv
import io
import json

import pytest

from reldisc import harness
from reldisc.cli import main
from reldisc.hypergraph import read_hypergraph, sample_hypergraph
from reldisc._mix import mix


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_and_disc_exact(tmp_path, capsys):
    g, h = tmp_path / "g.txt", tmp_path / "h.txt"
    assert run(capsys, "gen", "--n", "6", "--k", "2", "--p", "0.5", "--seed", "4", "--role", "G", "-o", str(g))[0] == 0
    assert run(capsys, "gen", "--n", "6", "--k", "2", "--p", "0.4", "--seed", "4", "--role", "H", "-o", str(h))[0] == 0
    assert read_hypergraph(g) == sample_hypergraph(6, 2, 0.5, mix(4, 0))
    code, out, _ = run(capsys, "disc-exact", "--g", str(g), "--h", str(h))
    assert code == 0
    d = json.loads(out)
    assert d["provenance"] == "oracle" and d["value_den"] >= 1
    code, out, _ = run(capsys, "disc-exact", "--subset", str(h))
    assert json.loads(out)["witness"]["kind"] == "subset"


def test_disc_exact_guard(tmp_path, capsys):
    g = tmp_path / "g.txt"
    run(capsys, "gen", "--n", "12", "--k", "2", "--p", "0.5", "-o", str(g))
    code, _, err = run(capsys, "disc-exact", "--g", str(g), "--h", str(g))
    assert code == 2 and "refuses" in err


def test_certify_matches_one_row_sweep(tmp_path, capsys):
    out = tmp_path / "s.csv"
    cfg = harness.SweepConfig(n=[40], k=[2], p=[0.5], q=[0.5], output=str(out), keep_witnesses=True,
                              master_seed=3)
    (row,) = harness.run_sweep(cfg)
    rep_path = tmp_path / "one.json"
    code, _, _ = run(capsys, "certify", "--n", "40", "--k", "2", "--p", "0.5", "--q", "0.5",
                     "--seed", str(row.seed), "-o", str(rep_path))
    assert code == 0
    assert rep_path.read_bytes() == (tmp_path / "s.csv.witnesses" / "row-000000.json").read_bytes()


def test_certify_from_files_with_overrides(tmp_path, capsys):
    g, h = tmp_path / "g.txt", tmp_path / "h.txt"
    run(capsys, "gen", "--n", "30", "--k", "2", "--p", "0.5", "--seed", "1", "-o", str(g))
    run(capsys, "gen", "--n", "30", "--k", "2", "--p", "0.3", "--seed", "2", "-o", str(h))
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"c_gamma": 0.3}))
    code, out, _ = run(capsys, "certify", "--g", str(g), "--h", str(h), "--config", str(conf),
                       "--set", "matching_fraction=1.0", "--seed", "0")
    assert code == 0
    assert json.loads(out)["provenance"].startswith("certifier")


def test_lambda(capsys):
    code, out, _ = run(capsys, "lambda", "--m", "10", "--rho", "1/2", "--K", "2.302585092994046")
    assert code == 0 and json.loads(out)["lambda"] == 2.0 and json.loads(out)["t"] == 7
    code, out, _ = run(capsys, "lambda", "--n", "100", "--k", "2", "--p", "0.5", "--q", "0.5")
    assert json.loads(out)["prediction"] == 800.0


@pytest.mark.parametrize("argv,key", [
    (["--function", "chernoff", "--mu", "100", "--lam", "20"], "bound"),
    (["--function", "janson", "--mu", "100", "--delta", "50", "--lam", "30"], "bound"),
    (["--function", "entropy", "--p", "0.5"], "entropy"),
    (["--function", "sandwich", "--m", "10", "--p", "0.5"], "ok"),
    (["--function", "hypergeom-tail", "--N", "1000", "--d1", "600", "--d2", "600", "--K", "1"], "ok"),
    (["--function", "regime", "--n", "100", "--k", "2", "--p", "0.5", "--q", "0.5"], "regime"),
    (["--function", "envelope", "--n", "100", "--k", "2", "--p", "0.5", "--q", "0.5"], "eps"),
])
def test_bounds(capsys, argv, key):
    code, out, _ = run(capsys, "bounds", *argv)
    assert code == 0 and key in json.loads(out)


def test_bounds_clamps_chernoff(capsys):
    _, out, _ = run(capsys, "bounds", "--function", "chernoff", "--mu", "5", "--lam", "0")
    d = json.loads(out)
    assert d["bound"] == 1.0 and d["raw"] == 2.0


def test_bounds_missing_flag(capsys):
    code, _, err = run(capsys, "bounds", "--function", "chernoff", "--mu", "5")
    assert code == 2 and "--lam" in err


def test_verify_bounds(tmp_path, capsys):
    out = tmp_path / "v.csv"
    code, _, err = run(capsys, "verify-bounds", "--suite", "sandwich", "--suite", "lambda", "-o", str(out))
    assert code == 0 and "checks ok" in err
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert {r["function"] for r in rows} == {"binomial_sandwich", "lambda"}
    assert all(r["ok"] == "1" for r in rows)


def test_sweep_and_report(tmp_path, capsys):
    out = tmp_path / "s.csv"
    conf = tmp_path / "sweep.json"
    conf.write_text(json.dumps({"n": [20, 30, 40], "k": [2], "p": [0.5], "q": [0.5], "seeds_per_point": 2}))
    code, _, err = run(capsys, "sweep", "--config", str(conf), "--seeds", "3", "-o", str(out), "--set",
                       "matching_fraction=1.0")
    assert code == 0 and "9 rows" in err
    assert len(harness.read_csv(str(out))) == 9
    code, text, _ = run(capsys, "report", str(out))
    assert code == 0 and "slope" in text
    code, js, _ = run(capsys, "report", str(out), "--json", "--svg", str(tmp_path / "r.svg"))
    assert json.loads(js)[0]["ns"] == [20, 30, 40]
    assert (tmp_path / "r.svg").exists()


def test_sweep_without_grid(capsys):
    code, _, err = run(capsys, "sweep", "--n", "10")
    assert code == 2 and "grid" in err
