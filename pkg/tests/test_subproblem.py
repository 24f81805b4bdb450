import numpy as np
import pytest

from gpbundle.errors import ConfigurationError, SolverFailure
from gpbundle.model import AggregateAffine, MultiCut, OneCut, TwoCuts, active_set, model_eval
from gpbundle.problem import AbsValue, Cut, h_ball, h_l1, h_zero, linearize, make_benchmark
from gpbundle.subproblem import (
    BoxTooSmall, brute_force_oracle, solve_model, solve_multi_cut, solve_one_cut, solve_two_cut,
    stationarity_residual, subproblem_value,
)
from gpbundle.verify import random_multicut


def agg(slope, intercept):
    s = np.atleast_1d(np.asarray(slope, dtype=float))
    return AggregateAffine.from_cut(Cut(np.zeros_like(s), float(intercept), s))


def test_one_cut_unconstrained():
    sol = solve_one_cut(agg(2.0, 0.0), h_zero(), np.array([0.0]), 1.0)
    assert sol.x[0] == -2.0 and sol.value == -2.0
    assert list(sol.multipliers) == [1.0] and sol.residual == 0.0


def test_one_cut_general_affine():
    a, b, xc, lam = np.array([1.0, -2.0]), 0.5, np.array([0.3, 0.1]), 0.7
    sol = solve_one_cut(agg(a, b), h_zero(), xc, lam)
    x = xc - lam * a
    np.testing.assert_allclose(sol.x, x)
    assert sol.value == pytest.approx(a @ x + b + lam * (a @ a) / 2)


def test_one_cut_soft_threshold():
    sol = solve_one_cut(agg(0.0, 0.0), h_l1(1.0), np.array([3.0]), 1.0)
    assert sol.x[0] == 2.0 and sol.value == pytest.approx(2.5)


def test_two_cut_identical_cuts():
    a = agg(1.5, -0.5)
    last = Cut(np.zeros(1), -0.5, np.array([1.5]))
    sol = solve_two_cut(a, last, h_zero(), np.array([1.0]), 2.0)
    one = solve_one_cut(a, h_zero(), np.array([1.0]), 2.0)
    assert sol.x[0] == pytest.approx(one.x[0]) and sol.value == pytest.approx(one.value)


def test_two_cut_symmetric():
    f = AbsValue(1)
    a = AggregateAffine.from_cut(linearize(f, [1.0]))
    last = linearize(f, [-1.0])
    sol = solve_two_cut(a, last, h_zero(), np.array([0.0]), 1.0)
    assert abs(sol.x[0]) < 1e-12 and abs(sol.value) < 1e-12
    assert sol.multipliers[0] == pytest.approx(0.5)
    sol = solve_two_cut(a, last, h_zero(), np.array([1.0]), 1.0)
    assert abs(sol.x[0]) < 1e-10 and sol.value == pytest.approx(0.5)


def test_two_cut_matches_grid():
    m = TwoCuts(agg(1.0, 0.0), Cut(np.zeros(1), 0.0, np.array([-1.0])), h_zero())
    xb, vb = brute_force_oracle(m, np.array([1.0]), 1.0, (-3.0, 3.0))
    assert abs(xb[0]) < 1e-6 and vb == pytest.approx(0.5, abs=1e-9)


def test_multi_cut_single_cut_reduces_to_one_cut():
    G, b = np.array([[1.0, 2.0]]), np.array([0.5])
    s1 = solve_multi_cut(G, b, h_l1(0.3), np.array([0.2, -0.1]), 0.8)
    s2 = solve_one_cut(agg([1.0, 2.0], 0.5), h_l1(0.3), np.array([0.2, -0.1]), 0.8)
    np.testing.assert_array_equal(s1.x, s2.x)
    assert s1.value == s2.value


def test_multi_cut_three_abs_cuts():
    f = AbsValue(1)
    m = MultiCut(tuple(linearize(f, [a]) for a in (1.0, -1.0, 0.0)), h_zero())
    sol = solve_model(m, np.array([0.2]), 1.0)
    assert abs(sol.x[0]) < 1e-8 and sol.value == pytest.approx(0.02, abs=1e-9)
    xb, vb = brute_force_oracle(m, np.array([0.2]), 1.0, (-3.0, 3.0))
    assert abs(xb[0] - sol.x[0]) < 1e-4 and abs(vb - sol.value) < 1e-6


def test_multi_cut_maxaffine_matches_grid():
    inst = make_benchmark("maxaffine", 2, 4)
    rng = np.random.default_rng(2)
    cuts = tuple(linearize(inst.f, rng.uniform(-2, 2, 2)) for _ in range(5))
    m = MultiCut(cuts, h_zero())
    xc = np.array([0.4, -0.3])
    sol = solve_model(m, xc, 0.6)
    xb, vb = brute_force_oracle(m, xc, 0.6, (-10.0, 10.0))
    assert np.linalg.norm(sol.x - xb) < 1e-4
    assert abs(sol.value - vb) < 1e-6


def test_multi_cut_failure_is_surfaced():
    m = random_multicut(np.random.default_rng(0), 2, 6, 0)
    G, b = m.pieces()
    with pytest.raises(SolverFailure) as exc:
        solve_multi_cut(G, b, m.h, np.zeros(2), 1.0, tol_sub=-1.0, max_inner=50)
    assert exc.value.best is not None


def test_solvers_reject_nonpositive_lambda():
    with pytest.raises(ConfigurationError):
        solve_one_cut(agg(1.0, 0.0), h_zero(), np.zeros(1), 0.0)
    with pytest.raises(ConfigurationError):
        solve_multi_cut(np.eye(2), np.zeros(2), h_zero(), np.zeros(2), -1.0)


def test_grid_oracle_box_too_small():
    m = OneCut(agg(0.0, 0.0), h_zero())
    with pytest.raises(BoxTooSmall):
        brute_force_oracle(m, np.array([5.0]), 1.0, (-1.0, 1.0))


def test_grid_oracle_one_cut_closed_form():
    m = OneCut(agg([1.0, -0.5], 0.2), h_zero())
    xc = np.array([0.1, 0.3])
    xb, vb = brute_force_oracle(m, xc, 0.5, (-5.0, 5.0))
    sol = solve_model(m, xc, 0.5)
    assert np.linalg.norm(xb - sol.x) < 1e-6 and abs(vb - sol.value) < 1e-9


def test_grid_oracle_respects_ball():
    m = OneCut(agg([1.0, 0.0], 0.0), h_ball([0.0, 0.0], 1.0))
    xb, vb = brute_force_oracle(m, np.array([0.0, 0.0]), 10.0, (-3.0, 3.0))
    assert np.linalg.norm(xb) <= 1.0 + 1e-9
    sol = solve_model(m, np.zeros(2), 10.0)
    np.testing.assert_allclose(sol.x, [-1.0, 0.0], atol=1e-12)
    assert np.linalg.norm(xb - sol.x) < 1e-4


def test_grid_oracle_rejects_high_dimension():
    m = OneCut(agg([1.0, 0.0, 0.0], 0.0), h_zero())
    with pytest.raises(ConfigurationError):
        brute_force_oracle(m, np.zeros(3), 1.0, (-1.0, 1.0))


def test_stationarity_residual_exact_and_perturbed():
    m = OneCut(agg([1.0, 2.0], 0.0), h_zero())
    xc = np.array([0.5, 0.5])
    sol = solve_model(m, xc, 0.5)
    assert stationarity_residual(m, m.h, xc, 0.5, sol.x, [1.0]) <= 1e-12
    r1 = stationarity_residual(m, m.h, xc, 0.5, sol.x + np.array([1e-3, 0.0]), [1.0])
    r2 = stationarity_residual(m, m.h, xc, 0.5, sol.x + np.array([2e-3, 0.0]), [1.0])
    assert r1 == pytest.approx(1e-3 / 0.5) and r2 == pytest.approx(2 * r1)


def test_multi_cut_solutions_are_certified():
    for k in range(40):
        rng = np.random.default_rng([9, k])
        n = 1 + k % 4
        m = random_multicut(rng, n, 8, k)
        xc = m.h.project(rng.uniform(-1, 1, n))
        lam = float(rng.uniform(0.1, 3.0))
        sol = solve_model(m, xc, lam)
        w = sol.multipliers
        assert np.all(w >= 0) and abs(w.sum() - 1) <= 1e-10
        assert stationarity_residual(m, m.h, xc, lam, sol.x, w) <= 1e-8
        # value is a global lower bound of the prox objective
        for _ in range(20):
            u = m.h.project(sol.x + rng.normal(size=n))
            assert sol.value <= subproblem_value(m, xc, lam, u) + 1e-9
        # positive weights only on active pieces
        act = set(active_set(m, sol.x).tolist())
        assert {i for i in np.flatnonzero(w > 1e-7)} <= act


def test_strong_convexity_lower_bound():
    for k in range(30):
        rng = np.random.default_rng([4, k])
        n = 2
        m = random_multicut(rng, n, 6, k)
        xc = m.h.project(rng.uniform(-1, 1, n))
        lam = float(rng.uniform(0.1, 2.0))
        sol = solve_model(m, xc, lam)
        lam_mu = lam / (1 + lam * m.h.mu)
        for _ in range(20):
            u = m.h.project(sol.x + rng.normal(size=n))
            lhs = model_eval(m, u) + (u - xc) @ (u - xc) / (2 * lam)
            assert lhs >= sol.value + (u - sol.x) @ (u - sol.x) / (2 * lam_mu) - 1e-8
