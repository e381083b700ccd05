import json
import subprocess
import sys
import time
from importlib import resources

import jsonschema
import pytest

from crcs.cli import main
from crcs.truth import default_truth


def schema(name):
    return json.loads(resources.files("crcs").joinpath(f"schemas/{name}.schema.json").read_text())


def validate(obj, name):
    jsonschema.validate(obj, schema(name))


@pytest.fixture
def work(tmp_path):
    truth = default_truth().to_dict()
    (tmp_path / "truth.json").write_text(json.dumps(truth))
    (tmp_path / "sim.json").write_text(json.dumps({"truth": truth, "n": 300, "seed": 5}))
    (tmp_path / "two.csv").write_text("time,status\n1,1\n2,2\n")
    return tmp_path


def run(*args):
    return main([str(a) for a in args])


def test_schemas_are_valid():
    for name in ("estimate", "fenchel", "truth", "simulate_config", "rates_config",
                 "rates_summary", "metrics", "minimax"):
        jsonschema.Draft202012Validator.check_schema(schema(name))


def test_config_files_validate(work):
    validate(json.loads((work / "truth.json").read_text()), "truth")
    validate(json.loads((work / "sim.json").read_text()), "simulate_config")


def test_simulate_is_byte_identical(work):
    assert run("simulate", "--config", work / "sim.json", "--out", work / "a.csv") == 0
    assert run("simulate", "--config", work / "sim.json", "--out", work / "b.csv") == 0
    a = (work / "a.csv").read_bytes()
    assert a == (work / "b.csv").read_bytes()
    assert len(a.decode().splitlines()) == 301


def test_simulate_rejects_bad_input(work):
    assert run("simulate", "--config", work / "sim.json", "--n", 0) == 2
    bad = json.loads((work / "sim.json").read_text())
    bad["truth"]["cause_probs"] = [0.8, 0.8]
    (work / "bad.json").write_text(json.dumps(bad))
    assert run("simulate", "--config", work / "bad.json") == 2
    assert run("simulate", "--config", work / "missing.json") == 2


def test_estimate_mle_certified(work):
    run("simulate", "--config", work / "sim.json", "--out", work / "d.csv")
    code = run("estimate", "--method", "mle", "--k", 2, "--input", work / "d.csv", "--out", work / "e.json", "--certify")
    assert code == 0
    est = json.loads((work / "e.json").read_text())
    validate(est, "estimate")
    assert est["fenchel"]["passed"] is True
    validate(est["fenchel"], "fenchel")


def test_estimate_naive_reports_violations(work):
    assert run("estimate", "--method", "naive", "--k", 2, "--input", work / "two.csv", "--out", work / "n.json") == 0
    est = json.loads((work / "n.json").read_text())
    validate(est, "estimate")
    assert est["sum_violations"] == [{"t": 2.0, "F_plus": 1.5}]


def test_malformed_csv(work, capsys):
    (work / "bad.csv").write_text("time,status\n1,1\n2,oops\n")
    assert run("estimate", "--k", 2, "--input", work / "bad.csv") == 2
    assert "line 3" in capsys.readouterr().err
    (work / "bad2.csv").write_text("time,status\n1,7\n")
    assert run("estimate", "--k", 2, "--input", work / "bad2.csv") == 2


def test_unknown_flags_exit_2():
    assert run("estimate", "--bogus") == 2


def test_non_convergence_exit_3(work):
    run("simulate", "--config", work / "sim.json", "--n", 3000, "--out", work / "big.csv")
    assert run("estimate", "--k", 2, "--input", work / "big.csv", "--max-iters", 1) == 3


def test_certify_verb(work):
    run("simulate", "--config", work / "sim.json", "--out", work / "d.csv")
    run("estimate", "--k", 2, "--input", work / "d.csv", "--out", work / "e.json")
    assert run("certify", "--k", 2, "--input", work / "d.csv", "--estimate", work / "e.json", "--out", work / "c.json") == 0
    validate(json.loads((work / "c.json").read_text()), "fenchel")
    est = json.loads((work / "e.json").read_text())
    comp = est["components"][0]
    for j in comp["jumps"][len(comp["jumps"]) // 2:]:
        j["v"] += 0.05
    comp["tail_mass"] = max(comp["tail_mass"] - 0.05, 0.0)
    (work / "p.json").write_text(json.dumps(est))
    assert run("certify", "--k", 2, "--input", work / "d.csv", "--estimate", work / "p.json") == 4


def test_metrics_verb(work):
    run("simulate", "--config", work / "sim.json", "--out", work / "d.csv")
    run("estimate", "--k", 2, "--input", work / "d.csv", "--out", work / "e.json")
    assert run("metrics", "--estimate", work / "e.json", "--truth", work / "truth.json", "--out", work / "m.json") == 0
    m = json.loads((work / "m.json").read_text())
    validate(m, "metrics")
    assert m["l1"] == pytest.approx(2 * m["tv"], abs=1e-12)


def test_minimax_eval_only(capsys):
    assert run("minimax", "--eval-only") == 0
    out = json.loads(capsys.readouterr().out)
    validate(out, "minimax")
    assert out["bound"] == pytest.approx(0.0896, abs=1e-4)
    assert out["d"] == pytest.approx(0.225693220275169496, abs=1e-15)


def test_minimax_with_risks(work):
    assert run("minimax", "--n", 200, 400, "--reps", 3, "--out", work / "mm.json") == 0
    validate(json.loads((work / "mm.json").read_text()), "minimax")


def test_rates_smoke(work, capsys):
    cfg = {"n_grid": [200, 400, 800], "reps": 20, "base_seed": 3}
    validate(cfg, "rates_config")
    (work / "rates.json").write_text(json.dumps(cfg))
    start = time.perf_counter()
    code = run("rates", "--config", work / "rates.json", "--workers", 1,
               "--out-csv", work / "r.csv", "--out-json", work / "r.json")
    assert code == 0
    assert time.perf_counter() - start < 60
    assert "mle/hellinger" in capsys.readouterr().out
    validate(json.loads((work / "r.json").read_text()), "rates_summary")
    header = (work / "r.csv").read_text().splitlines()[0]
    assert header == "n,metric,q25,median,q75,slope_rowid"


def test_rates_bad_config(work):
    (work / "rates.json").write_text(json.dumps({"n_grid": [10, 5, 20]}))
    assert run("rates", "--config", work / "rates.json") == 2


def test_console_entry_point(work):
    out = subprocess.run([sys.executable, "-m", "crcs.cli", "minimax", "--eval-only"], capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["k"] == 1
