import json

import pytest

from brwre.cli import main

GAUSS = {"weight": 1.0, "offspring": {"family": "poisson", "mean": 2.0},
         "displacement": {"family": "gaussian", "mean": 0.0, "var": 1.0}}


def write(tmp_path, doc, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return str(path)


@pytest.fixture
def cfg(tmp_path):
    return write(tmp_path, {"states": [GAUSS], "seed": 3, "horizon": 5, "n_schedule": [3, 5],
                            "replicates": 6, "A": "-1:1"})


def test_clt_csv(tmp_path, cfg):
    out = tmp_path / "clt.csv"
    assert main(["clt", "--config", cfg, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("n,t,replicates_used,mean_residual")
    assert len(lines) == 1 + 2 * 2


def test_llt_json(tmp_path, cfg):
    out = tmp_path / "llt.json"
    assert main(["llt", "--config", cfg, "--format", "json", "--out", str(out), "--seed", "9"]) == 0
    doc = json.loads(out.read_text())
    assert doc["kind"] == "llt" and doc["meta"]["master_seed"] == 9


def test_simulate_and_conditions(tmp_path, cfg, capsys):
    assert main(["simulate", "--config", cfg]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "n,Z,W,N1,N2"
    assert main(["conditions", "--config", cfg, "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["meta"]["ok"] is True


def test_martingales_and_edgeworth(tmp_path, capsys):
    path = write(tmp_path, {"states": [GAUSS], "horizon": 4, "n_schedule": [2, 4],
                            "replicates": 30, "conditional_seeds": 2})
    assert main(["martingales", "--config", path]) == 0
    assert "population" in capsys.readouterr().out
    assert main(["edgeworth", "--config", path]) == 0
    assert capsys.readouterr().out.startswith("n,order,sup_error")


def test_bad_config(tmp_path):
    assert main(["clt", "--config", write(tmp_path, "{broken")]) == 2
    assert main(["clt", "--config", str(tmp_path / "missing.json")]) == 2
    bad = {"states": [dict(GAUSS, weight=0.5)]}
    assert main(["clt", "--config", write(tmp_path, bad)]) == 2


def test_guard_exit(tmp_path):
    sub = {"states": [dict(GAUSS, offspring={"family": "poisson", "mean": 0.8})], "horizon": 4,
           "n_schedule": [4]}
    assert main(["clt", "--config", write(tmp_path, sub)]) == 3
    assert main(["conditions", "--config", write(tmp_path, sub)]) == 3
    beta = {"states": [GAUSS], "horizon": 4, "n_schedule": [4], "beta": 0.1}
    assert main(["clt", "--config", write(tmp_path, beta)]) == 3


def test_capped_exit(tmp_path):
    binary = dict(GAUSS, offspring={"family": "finite", "support": [[2, 1.0]]})
    doc = {"states": [binary], "horizon": 6, "n_schedule": [6], "replicates": 3, "cap": 1}
    assert main(["clt", "--config", write(tmp_path, doc)]) == 4
