import csv
import json
import subprocess
import sys

import pytest

from maxrep.cache import SigmaCache
from maxrep.cli import RunConfig, main, run, write_atomic
from maxrep.errors import ValidationError


def test_maxdim_table(tmp_path):
    out = tmp_path / "table.csv"
    assert main(["maxdim", "--n-max", "10", "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 10 and rows[5]["argmax"] == "3 2 1"


def test_maxdim_stdout_and_mckay(capsys):
    assert main(["maxdim", "--n-max", "4", "--check-mckay", "6"]) == 0
    out = capsys.readouterr().out
    assert '"holds": true' in out


def test_maxdim_ceiling():
    assert main(["maxdim", "--n-max", "200"]) == 2


def test_verify_vk(tmp_path):
    out = tmp_path / "vk.json"
    assert main(["verify-vk", "--n", "8", "--exhaustive", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["count"] == 22 and rep["max_abs_residual"] <= 1e-6 and rep["ok"]


def test_verify_vk_tolerance_breach():
    assert main(["verify-vk", "--n", "6", "--samples", "3", "--tol", "1e-300", "--seed", "1"]) == 3


def test_sigma_validation(tmp_path):
    cache = str(tmp_path / "c.ndjson")
    assert main(["sigma", "--n", "0", "--rho", "0.5", "--cache", cache]) == 1
    assert main(["sigma", "--n", "5", "--rho", "2", "--cache", cache]) == 1
    assert main(["sigma", "--n", "5", "--rho", "0.5", "--heuristic", "--cache", cache]) == 1
    assert main(["sigma", "--n", "40", "--rho", "0.5", "--cache", cache]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["sigma", "--rho", "0.5"])
    assert exc.value.code == 1


def test_sigma_appends_to_cache(tmp_path, monkeypatch, capsys):
    cache = tmp_path / "env.ndjson"
    monkeypatch.setenv("MAXREP_CACHE", str(cache))
    assert main(["sigma", "--n", "6", "--rho", "1/2"]) == 0
    assert json.loads(capsys.readouterr().out)["kind"] == "exact"
    assert main(["sigma", "--n", "6", "--rho", "0.5", "--heuristic", "--seed", "3", "--budget", "500"]) == 0
    assert json.loads(capsys.readouterr().out)["kind"] == "heuristic_upper"
    recs = SigmaCache(cache).load().records
    assert len(recs) == 7 and recs[-1].kind == "heuristic_upper" and recs[-1].seed == 3


def test_estimate_needs_data(tmp_path):
    assert main(["estimate-d", "--grid", "8", "--cache", str(tmp_path / "none.ndjson")]) == 1
    assert main(["estimate-d", "--grid", "4", "--cache", str(tmp_path / "none.ndjson")]) == 1


def test_estimate_fill(tmp_path):
    cache = tmp_path / "c.ndjson"
    table = tmp_path / "t.csv"
    main(["maxdim", "--n-max", "20", "--out", str(table)])
    out = tmp_path / "d.json"
    assert main(["estimate-d", "--grid", "8", "--fill", "12", "--cache", str(cache), "--table", str(table), "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert 0 < rep["estimate"]["value"] < 2
    assert "comparison" in rep
    csv_out = tmp_path / "d.csv"
    assert main(["estimate-d", "--grid", "8", "--cache", str(cache), "--output", "csv", "--out", str(csv_out)]) == 0
    assert len(csv_out.read_text().splitlines()) == 9


def test_construct_and_decompose(tmp_path):
    out = tmp_path / "c.json"
    assert main(["construct", "--n", "200", "--window", "8", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["area"] == 200 and rep["candidate"]["N"] == 200
    out = tmp_path / "dec.json"
    assert main(["decompose", "--partition", "4,3,2,1", "--window", "2", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["N"] == 10
    assert main(["decompose", "--partition", "1,2", "--window", "2"]) == 1


def test_run_config_validation():
    with pytest.raises(ValidationError):
        RunConfig("nope")
    with pytest.raises(ValidationError):
        RunConfig("maxdim", threads=0)
    assert run(RunConfig("maxdim", {"n_max": -1})) == 1


def test_write_atomic(tmp_path):
    p = tmp_path / "sub" / "x.txt"
    write_atomic(p, "a")
    write_atomic(p, "b")
    assert p.read_text() == "b"
    assert list(p.parent.iterdir()) == [p]


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "maxrep.cli", "sigma", "--n", "0", "--rho", "0"], capture_output=True, text=True)
    assert r.returncode == 1 and "error" in r.stderr
