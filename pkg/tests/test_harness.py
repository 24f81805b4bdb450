import csv
import io
import json
import subprocess
import sys

import pytest

from gpbundle import adaptive
from gpbundle.cli import main
from gpbundle.errors import ConfigurationError
from gpbundle.harness import (
    BENCH_COLUMNS, ExperimentConfig, bench_cells, bench_csv, resolve, run_bench, run_experiment,
)


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def test_run_gpb_e3_abs1d(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", {"instance": "abs1d", "method": "gpb-e3", "lambda": "range-geomean",
                                     "eps_bar": 1e-2})
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["phi_gap_final"] <= 1e-2
    for key in ("iterations_total", "serious", "null_max_block", "phi_gap_final", "counters", "bound_values",
                "bound_ratios"):
        assert key in summary
    assert (tmp_path / "o" / "trace.csv").exists() and (tmp_path / "o" / "trace.jsonl").exists()
    assert json.loads(capsys.readouterr().out)["status"] == "converged"


@pytest.mark.parametrize("method", ["gpb-e1", "gpb-e2", "gpb-e3", "1c-apb", "cs-cs", "a-cs"])
def test_run_every_method_audits_clean(method):
    cfg = ExperimentConfig.from_dict({"instance": "maxaffine,2,0", "method": method, "tau": "theorem",
                                      "eps_bar": 1e-2, "audit_models": method.startswith("gpb")})
    s = run_experiment(cfg)
    assert s["status"] == "converged"
    assert s["audit_violations"] == 0, s["audit"]
    assert s["audit"]


def test_tau_bar_policy_resolves():
    res = resolve(ExperimentConfig.from_dict({"instance": "abs1d", "tau": "bar", "lambda": 1.0, "eps_bar": 1.0}))
    assert res.tau == 8.0 / 9.0


def test_malformed_json_exit_code(tmp_path):
    cfg = write(tmp_path, "bad.json", "{not json")
    assert main(["run", "--config", cfg]) == 2


@pytest.mark.parametrize("bad", [
    {"method": "gpb-e3"},
    {"instance": "abs1d", "method": "newton"},
    {"instance": "abs1d", "lambda": -1.0},
    {"instance": "abs1d", "lambda": "range-middle"},
    {"instance": "abs1d", "tau": 1.5},
    {"instance": "abs1d", "colour": "blue"},
    {"instance": "nope,1,0"},
    [1, 2, 3],
])
def test_invalid_configs_exit_2(tmp_path, bad):
    assert main(["run", "--config", write(tmp_path, "c.json", bad)]) == 2


def test_lambda_policy_needs_params(tmp_path):
    inst = {"f": {"kind": "abs", "n": 1}, "x0": [1.0]}
    cfg = ExperimentConfig.from_dict({"instance": inst})
    with pytest.raises(ConfigurationError):
        resolve(cfg)


def test_solver_failure_exit_and_partial_artifacts(tmp_path, monkeypatch):
    monkeypatch.setattr(adaptive, "MAX_UPDATES", 1)
    cfg = write(tmp_path, "c.json", {"instance": "maxaffine,2,0", "method": "1c-apb", "lambda": 10.0,
                                     "eps_bar": 1e-3, "audit": False})
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["status"] == "failed"
    assert (tmp_path / "o" / "trace.csv").read_bytes().count(b"\r\n") >= 2


def test_identical_config_gives_identical_traces(tmp_path):
    d = {"instance": "lasso_like,5,0", "method": "gpb-e3", "eps_bar": 1e-2, "audit_models": True, "seed": 3}
    cfg = write(tmp_path, "c.json", d)
    for out in ("a", "b"):
        assert main(["run", "--config", cfg, "--out", str(tmp_path / out)]) == 0
    for name in ("trace.csv", "trace.jsonl", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_repetitions_write_subdirectories(tmp_path):
    cfg = ExperimentConfig.from_dict({"instance": "abs1d", "method": "cs-cs", "repetitions": 2})
    run_experiment(cfg, str(tmp_path))
    assert (tmp_path / "rep0" / "summary.json").exists() and (tmp_path / "rep1" / "summary.json").exists()


def test_empty_bench(tmp_path, capsys):
    cfg = write(tmp_path, "m.json", {"methods": [], "instances": ["abs1d"], "lambda_policies": ["range-geomean"]})
    assert main(["bench", "--config", cfg]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows == [list(BENCH_COLUMNS)]
    assert run_bench({"methods": []}) == []


def test_default_bench_matrix():
    rows = run_bench(workers=1)
    assert len(rows) == 18
    keys = [(r["method"], r["instance"], r["lambda_policy"]) for r in rows]
    assert keys == sorted(keys)
    for r in rows:
        assert r["status"] == "converged", r
        assert float(r["wall_time"]) < 60
        if r["theory_checked"] == 1:
            assert float(r["bound_ratio"]) <= 1.0, r


def test_bench_records_cell_errors():
    rows = run_bench({"methods": ["gpb-e1"], "instances": ["abs1d", "nope"], "lambda_policies": ["range-low"]},
                     workers=1)
    by = {r["instance"]: r for r in rows}
    assert by["nope"]["status"] == "error" and "ConfigurationError" in by["nope"]["error"]
    assert by["abs1d"]["status"] == "converged"


def test_bench_parallel_matches_serial():
    m = {"methods": ["gpb-e2", "1c-apb"], "instances": ["abs1d", "maxaffine,2,0"],
         "lambda_policies": ["range-low", "range-geomean"]}
    drop = ("wall_time",)
    a = [{k: v for k, v in r.items() if k not in drop} for r in run_bench(m, workers=1)]
    b = [{k: v for k, v in r.items() if k not in drop} for r in run_bench(m, workers=2)]
    assert a == b
    assert len(bench_cells(m)) == 8
    assert bench_csv([]).strip() == ",".join(BENCH_COLUMNS)


def test_bounds_subcommand(tmp_path, capsys):
    assert main(["bounds"]) == 0
    table = json.loads(capsys.readouterr().out)
    assert table
    cfg = write(tmp_path, "b.json", {"M_f": 1.0, "L_f": 0.0, "mu": 0.0, "eps_bar": 1.0, "lam": 1.0, "d0": 1.0})
    assert main(["bounds", "--config", cfg]) == 0
    q = json.loads(capsys.readouterr().out)
    assert q["bar_t"] == 33.0
    bad = write(tmp_path, "bad.json", {"M_f": 1.0})
    assert main(["bounds", "--config", bad]) == 2


def test_verify_bounds_suite(capsys):
    assert main(["verify", "--suite", "bounds"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["passed"] and {c["name"] for c in rep["checks"]} >= {"pinned_regression"}


def test_verify_unknown_suite():
    assert main(["verify", "--suite", "everything"]) == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "gpbundle", "verify", "--suite", "bounds"], capture_output=True,
                         text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["passed"]
