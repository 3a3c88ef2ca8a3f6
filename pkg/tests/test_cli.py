import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from tworank import __version__
from tworank.cli import main
from tworank.google import load_context


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def star_ctx(tmp_path, capsys):
    edges = tmp_path / "star.txt"
    edges.write_text("# nodes: 6\n" + "".join(f"{k} 0\n" for k in range(1, 6)))
    ctx = tmp_path / "star.ctx"
    code, out, _ = run(capsys, "build", str(edges), str(ctx))
    assert code == 0
    return ctx


def test_gen_writes_header(tmp_path, capsys):
    p = tmp_path / "er.txt"
    code, _, _ = run(capsys, "gen", "er", "1000", "0.1", "--seed", "4", "-o", str(p))
    assert code == 0
    head = p.read_text().splitlines()[0]
    assert "model=er" in head and "n=1000" in head and "seed=4" in head
    code, out, _ = run(capsys, "gen", "pa", "2000", "4")
    assert code == 0 and out.count("\n") > 7000


def test_gen_unknown_model(capsys):
    code, _, err = run(capsys, "gen", "bogus", "10")
    assert code == 2 and "unknown model" in err


def test_build_verify_and_reload(tmp_path, capsys):
    p, ctx = tmp_path / "g.txt", tmp_path / "g.ctx"
    run(capsys, "gen", "er", "150", "0.05", "--seed", "1", "-o", str(p))
    code, out, _ = run(capsys, "build", str(p), str(ctx), "--verify", "--alpha", "0.9")
    rec = json.loads(out)
    assert code == 0 and rec["version"] == __version__
    assert rec["directed"] is False and rec["round_trip"]
    assert max(rec["verify"].values()) < 1e-10
    assert load_context(ctx).alpha == 0.9


def test_compare(star_ctx, capsys):
    code, out, _ = run(capsys, "compare", str(star_ctx), "0", "3", "--seed", "2")
    rec = json.loads(out)
    assert code == 0
    assert rec["verdict"] in ("i_higher", "exceptional_i_higher")
    assert rec["config"]["seed"] == 2
    code, out, _ = run(capsys, "compare", str(star_ctx), "4", "4")
    assert json.loads(out)["verdict"] == "tie"
    code, _, err = run(capsys, "compare", str(star_ctx), "0", "6")
    assert code == 2 and "out of range" in err


def test_seed_from_environment(star_ctx, capsys, monkeypatch):
    monkeypatch.setenv("TWORANK_SEED", "17")
    code, out, _ = run(capsys, "compare", str(star_ctx), "0", "1")
    assert json.loads(out)["seed"] == 17
    monkeypatch.setenv("TWORANK_SEED", "x")
    assert run(capsys, "compare", str(star_ctx), "0", "1")[0] == 2


def test_topk_degenerate(star_ctx, capsys):
    code, out, _ = run(capsys, "topk", str(star_ctx), "6")
    rec = json.loads(out)
    assert code == 0 and rec["degenerate"] and len(rec["ranked"]) == 6 and rec["ranked"][0] == 0


def test_power_and_vector(star_ctx, tmp_path, capsys):
    vec = tmp_path / "r.npy"
    code, out, _ = run(capsys, "--compact", "power", str(star_ctx), "--top", "2", "--vector", str(vec))
    rec = json.loads(out)
    assert code == 0 and rec["converged"] and rec["top"][0]["node"] == 0
    r = np.load(vec)
    assert r.sum() == pytest.approx(1.0)
    code, _, _ = run(capsys, "power", str(star_ctx), "--max-iter", "1", "--tol", "1e-15")
    assert code == 1


def test_spectral(tmp_path, capsys):
    p, ctx = tmp_path / "g.txt", tmp_path / "g.ctx"
    run(capsys, "gen", "er", "80", "0.2", "-o", str(p))
    run(capsys, "build", str(p), str(ctx))
    code, out, _ = run(capsys, "spectral", str(ctx), "--m", "2", "3")
    rec = json.loads(out)
    assert code == 0 and [x["m"] for x in rec["reports"]] == [2, 3]
    assert all(0 <= x["theta_deg"] <= 180 for x in rec["reports"])


def test_bench_csv(capsys):
    code, out, _ = run(capsys, "bench", "angles", "--model", "er", "--n", "60", "--param", "0.2", "--seeds", "2")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and rows[0]["m"] == "2" and float(rows[0]["theta_mean"]) > 0
    code, out, _ = run(capsys, "bench", "rates", "--model", "pa", "--n", "80", "--param", "3",
                       "--seeds", "1", "--pairs", "500")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert {"rate", "pi_estimate", "theta_deg"} <= set(rows[0])
    assert json.loads(rows[0]["config"])["suite"] == "rates"


def test_runtime_failure_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.ctx"
    bad.write_bytes(b"garbage")
    code, _, err = run(capsys, "compare", str(bad), "0", "1")
    assert code == 1 and "ContextFormatError" in err


def test_usage_errors(capsys):
    assert run(capsys)[0] == 2
    assert run(capsys, "bench", "nosuch")[0] == 2
    assert run(capsys, "--threads", "0", "gen", "er", "5")[0] == 2


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "tworank", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and __version__ in out.stdout
