import csv
import io
import json
import math

import numpy as np
import pytest

from gpbundle import bounds as B
from gpbundle import engine
from gpbundle.engine import GpbConfig, audit_run, classify_iteration, run_gpb, theory_inputs
from gpbundle.errors import ConfigurationError, SolverFailure
from gpbundle.problem import catalog, instance_from_json, make_benchmark
from gpbundle.trace import CSV_COLUMNS


def theorem_config(inst, eps, scheme, policy="geomean", **kw):
    inp, _ = theory_inputs(inst, eps, 1.0)
    rng = B.lambda_range(inp)
    lam = {"lo": rng.lo, "geomean": rng.geomean, "hi": rng.hi}[policy]
    tau = B.theorem_tau(theory_inputs(inst, eps, lam)[0])
    return GpbConfig(lam=lam, eps_bar=eps, tau=tau, scheme=scheme, **kw)


def test_classify_iteration():
    assert classify_iteration(0.0, 1.0) == "serious"
    assert classify_iteration(0.5, 1.0) == "serious"
    assert classify_iteration(0.5 + 1e-6, 1.0) == "null"
    with pytest.raises(ConfigurationError):
        classify_iteration(math.nan, 1.0)


def test_abs1d_single_step_e3():
    inst = make_benchmark("abs1d")
    rec = run_gpb(inst, GpbConfig(lam=1.0, eps_bar=0.01, tau=0.5, scheme="E3"))
    assert rec.status == "converged" and rec.iterations == 1
    assert rec.X[1][0] == 0.0
    assert rec.phi_y[1] == 0.0
    assert rec.c_idx[1] == 0


def test_start_at_optimum_stops_immediately():
    inst = make_benchmark("abs1d")
    for scheme in ("E1", "E2", "E3"):
        rec = run_gpb(inst, GpbConfig(lam=1.0, eps_bar=0.01, tau=0.5, scheme=scheme), x0=[0.0])
        assert rec.status == "converged" and rec.iterations == 0 and rec.serious[0]


@pytest.mark.parametrize("scheme", ["E1", "E2", "E3"])
def test_maxaffine_within_total_bound(scheme):
    inst = make_benchmark("maxaffine", 2, 0)
    cfg = theorem_config(inst, 1e-2, scheme)
    rec = run_gpb(inst, cfg)
    assert rec.status == "converged"
    assert rec.phi_gap_final <= 1e-2
    inp, _ = theory_inputs(inst, 1e-2, cfg.lam)
    assert rec.iterations <= B.total_bound(inp, "generic_tau", tau=cfg.tau)


@pytest.mark.parametrize("inst", catalog(), ids=lambda i: i.name)
@pytest.mark.parametrize("scheme", ["E1", "E2", "E3"])
def test_trace_invariants(inst, scheme):
    eps = 1e-1
    rec = run_gpb(inst, theorem_config(inst, eps, scheme))
    assert rec.status == "converged"
    t = rec.t
    assert t[0] == 0.0 and rec.serious[0]
    assert np.all(t >= -1e-9)
    np.testing.assert_array_equal(rec.serious[1:], t[1:] <= 0.5 * eps)
    # y_{j+1} is whichever of x_{j+1} and y_j has the smaller prox objective at the current center
    lam = rec.lam
    for j in range(1, rec.n_rows):
        xc = rec.point("c", j)
        prev = rec.y_idx[j - 1]
        val = {k: rec.phi_x[k] + np.sum((rec.X[k] - xc) ** 2) / (2 * lam) for k in (j, prev)}
        want = j if val[j] < val[prev] else prev
        assert rec.y_idx[j] == want
    # center is the last serious x before the row
    starts = rec.block_starts()
    for j in range(1, rec.n_rows):
        assert rec.c_idx[j] == starts[j - 1]
    blocks = rec.null_blocks()
    flat = sorted(i for _, b in blocks for i in b)
    assert flat == [j for j in range(rec.n_rows) if not rec.serious[j]]
    assert [b[0] for b in blocks] == list(rec.serious_indices)


@pytest.mark.parametrize("inst", catalog(), ids=lambda i: i.name)
def test_audit_has_no_violations(inst):
    for scheme in ("E1", "E2", "E3"):
        rec = run_gpb(inst, theorem_config(inst, 1e-2, scheme))
        rep = audit_run(rec, inst)
        assert rep.ok, rep.to_json()
        assert not rep.checks["null_recursion"].skipped


def test_audit_skips_recursion_below_tau_bar():
    inst = make_benchmark("maxaffine", 2, 0)
    cfg = theorem_config(inst, 1e-2, "E1")
    cfg.tau = 0.1
    rec = run_gpb(inst, cfg)
    rep = audit_run(rec, inst)
    assert rep.checks["null_recursion"].skipped
    # the other checks still run
    assert rep.checks["serious_sat"].checked == len(rec.serious_indices) - 1
    assert rep.checks["t_nonneg"].checked == rec.n_rows


def test_abs1d_iterates_stay_in_start_interval():
    inst = make_benchmark("abs1d")
    for scheme in ("E1", "E2", "E3"):
        rec = run_gpb(inst, theorem_config(inst, 1e-2, scheme, policy="hi"))
        xs = rec.X[rec.serious_indices, 0]
        assert np.all((xs >= -1e-12) & (xs <= 1.0))
        assert audit_run(rec, inst).checks["serious_dist"].violations == []


def test_one_cut_fast_path_matches_audited_path():
    for inst in catalog():
        cfg = theorem_config(inst, 1e-1, "E1")
        fast = run_gpb(inst, cfg)
        cfg.audit_models = True
        slow = run_gpb(inst, cfg)
        assert fast.n_rows == slow.n_rows
        np.testing.assert_array_equal(fast.y_idx, slow.y_idx)
        np.testing.assert_allclose(fast.X, slow.X, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(fast.t, slow.t, rtol=1e-7, atol=1e-10)


def test_max_iter_stop_rule():
    inst = make_benchmark("hybrid_norm", 2, 0)
    rec = run_gpb(inst, GpbConfig(lam=0.5, eps_bar=1e-3, tau=0.9, scheme="E2", stop_rule="max_iter",
                                  max_iterations=7))
    assert rec.status == "max_iter" and rec.iterations == 7


def test_known_gap_needs_reference():
    inst = instance_from_json({"f": {"kind": "abs", "n": 1}, "x0": [1.0]})
    with pytest.raises(ConfigurationError):
        run_gpb(inst, GpbConfig(lam=1.0, eps_bar=0.1, tau=0.5))
    rec = run_gpb(inst, GpbConfig(lam=1.0, eps_bar=0.1, tau=0.5, phi_star=0.0))
    assert rec.status == "converged"


def test_infeasible_start_rejected():
    inst = instance_from_json({"f": {"kind": "abs", "n": 1}, "h": {"kind": "box", "lower": [0.5], "upper": [2.0]},
                               "x0": [1.0], "pairs": [[1.0, 0.0]], "reference": {"x_star": [0.5]}})
    with pytest.raises(ConfigurationError):
        run_gpb(inst, GpbConfig(lam=1.0, eps_bar=0.1, tau=0.5), x0=[0.0])


@pytest.mark.parametrize("kw", [dict(lam=0.0), dict(eps_bar=-1.0), dict(tau=1.0), dict(scheme="E4"),
                                dict(scheme="E1", tau=0.0), dict(stop_rule="never"), dict(e3_reset="x")])
def test_config_validation(kw):
    base = dict(lam=1.0, eps_bar=0.1, tau=0.5)
    base.update(kw)
    with pytest.raises(ConfigurationError):
        run_gpb(make_benchmark("abs1d"), GpbConfig(**base))


def test_solver_failure_aborts_with_partial_trace(monkeypatch):
    calls = {"n": 0}
    real = engine.solve_multi_cut

    def flaky(*a, **k):
        calls["n"] += 1
        if calls["n"] > 2:
            raise SolverFailure("forced")
        return real(*a, **k)

    monkeypatch.setattr(engine, "solve_multi_cut", flaky)
    inst = make_benchmark("maxaffine", 2, 0)
    rec = run_gpb(inst, theorem_config(inst, 1e-3, "E3"))
    assert rec.status == "failed" and "forced" in rec.message
    assert rec.n_rows == 3


def test_csv_export_format():
    inst = make_benchmark("maxaffine", 2, 0)
    rec = run_gpb(inst, theorem_config(inst, 1e-2, "E3"))
    text = rec.to_csv()
    assert text.endswith("\r\n") and "\r\n" in text
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == rec.n_rows + 1
    # floats round-trip bit-exactly
    for j, r in enumerate(rows[1:]):
        assert float(r[2]) == rec.t[j] and float(r[4]) == rec.phi_y[j]


def test_jsonl_export_includes_points():
    inst = make_benchmark("maxaffine", 2, 0)
    rec = run_gpb(inst, theorem_config(inst, 1e-2, "E2"))
    lines = rec.to_jsonl().splitlines()
    assert len(lines) == rec.n_rows
    for j, line in enumerate(lines):
        d = json.loads(line)
        assert d["j"] == j
        assert d["x"] == rec.X[j].tolist()
        assert d["m"] == rec.m[j]
    assert json.loads(lines[0])["tau"] == rec.tau


def test_runs_are_deterministic():
    inst = make_benchmark("lasso_like", 5, 0)
    for scheme in ("E1", "E2", "E3"):
        cfg = theorem_config(inst, 1e-2, scheme, audit_models=True)
        a, b = run_gpb(inst, cfg), run_gpb(inst, cfg)
        assert a.to_csv() == b.to_csv() and a.to_jsonl() == b.to_jsonl()


def test_totals_and_views():
    inst = make_benchmark("maxaffine", 2, 0)
    rec = run_gpb(inst, theorem_config(inst, 1e-2, "E1"))
    tot = rec.totals()
    assert tot["serious"] + tot["null"] == rec.n_rows
    assert tot["iterations_total"] == rec.n_rows - 1
    assert tot["null_max_block"] == max(len(b) for _, b in rec.null_blocks())
    view = rec.serious_view()
    assert all(r.serious for r in view) and len(view) == tot["serious"]
    row = rec.row(3)
    assert row.j == 3 and np.array_equal(row.x, rec.X[3])
