"""Randomized properties driven by hypothesis."""
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from gpbundle import bounds as B
from gpbundle.model import AggregateAffine, MultiCut, OneCut, model_eval, serious_reset, update_multi_cut
from gpbundle.model import active_set, blend
from gpbundle.problem import catalog, eval_phi, linearize
from gpbundle.subproblem import solve_model, subproblem_value
from gpbundle.verify import random_h, random_multicut

CATALOG = catalog()
coord = st.floats(-5, 5, allow_nan=False)
seeds = st.integers(0, 2 ** 32 - 1)
FAST = settings(max_examples=60, deadline=None)


def point(inst, data):
    return np.array(data.draw(st.lists(coord, min_size=inst.n, max_size=inst.n)))


@FAST
@given(st.sampled_from(range(len(CATALOG))), st.data())
def test_cut_stays_below_f(k, data):
    inst = CATALOG[k]
    x, u = point(inst, data), point(inst, data)
    cut = linearize(inst.f, x)
    assert cut(u) <= inst.f.value(u) + 1e-9 * (1 + abs(inst.f.value(u)))


@FAST
@given(st.sampled_from(range(len(CATALOG))), seeds, st.integers(1, 40))
def test_one_cut_aggregate_is_a_minorant(k, seed, steps):
    inst = CATALOG[k]
    rng = np.random.default_rng(seed)
    agg = AggregateAffine.from_cut(linearize(inst.f, rng.uniform(-2, 2, inst.n)))
    for _ in range(steps):
        agg = blend(agg, linearize(inst.f, rng.uniform(-2, 2, inst.n)), float(rng.uniform(0.01, 0.99)))
    w = agg.weights
    assert np.all(w >= 0) and abs(w.sum() - 1) <= 1e-12
    m = OneCut(agg, inst.h)
    for _ in range(20):
        u = inst.h.project(rng.uniform(-3, 3, inst.n))
        assert model_eval(m, u) <= eval_phi(inst, u) + 1e-9


@FAST
@given(st.sampled_from(range(len(CATALOG))), seeds)
def test_multicut_updates_stay_below_phi(k, seed):
    inst = CATALOG[k]
    rng = np.random.default_rng(seed)
    x = rng.uniform(-2, 2, inst.n)
    m = serious_reset("E3", None, x, linearize(inst.f, x), h=inst.h)
    for _ in range(8):
        x = rng.uniform(-2, 2, inst.n)
        m = update_multi_cut(m, x, linearize(inst.f, x), active_set(m, x))
        for _ in range(5):
            u = inst.h.project(rng.uniform(-3, 3, inst.n))
            assert model_eval(m, u) <= eval_phi(inst, u) + 1e-9
    assert isinstance(m, MultiCut)


@FAST
@given(seeds, st.integers(1, 4), st.integers(0, 5))
def test_subproblem_value_is_the_minimum(seed, n, kind):
    rng = np.random.default_rng(seed)
    m = random_multicut(rng, n, 6, kind)
    xc = m.h.project(rng.uniform(-1, 1, n))
    lam = float(rng.uniform(0.05, 3.0))
    sol = solve_model(m, xc, lam)
    assert abs(subproblem_value(m, xc, lam, sol.x) - sol.value) <= 1e-9 * (1 + abs(sol.value))
    for _ in range(10):
        u = m.h.project(sol.x + rng.normal(size=n))
        assert sol.value <= subproblem_value(m, xc, lam, u) + 1e-9


@FAST
@given(seeds, st.integers(1, 5), st.integers(0, 5))
def test_prox_distance_monotone(seed, n, kind):
    rng = np.random.default_rng(seed)
    m = random_multicut(rng, n, 6, kind)
    xc = m.h.project(rng.uniform(-1, 1, n))
    lam = float(rng.uniform(0.05, 3.0))
    lam_t = lam * float(rng.uniform(0.05, 0.99))
    a, b = solve_model(m, xc, lam), solve_model(m, xc, lam_t)
    assert np.linalg.norm(a.x - xc) <= (lam / lam_t) * np.linalg.norm(b.x - xc) + 1e-8


@FAST
@given(seeds, st.integers(1, 4), st.integers(0, 5))
def test_prox_is_nonexpansive(seed, n, kind):
    rng = np.random.default_rng(seed)
    h = random_h(rng, n, kind)
    a = float(rng.uniform(0.01, 5))
    z1, z2 = rng.normal(scale=3, size=n), rng.normal(scale=3, size=n)
    assert np.linalg.norm(h.prox(z1, a) - h.prox(z2, a)) <= np.linalg.norm(z1 - z2) * (1 + 1e-12) + 1e-15


@given(st.floats(1e-3, 1e3), st.floats(0, 10), st.floats(1e-4, 1), st.floats(1e-2, 10))
def test_bar_tau_in_unit_interval(lam, mu, eps, T):
    tb = B.bar_tau(lam, mu, eps, T)
    assert 0 < tb < 1
    assert B.lambda_mu(lam, mu) <= lam


@given(st.floats(0, 3), st.floats(0, 3), st.floats(1e-3, 1), st.floats(1e-2, 10), st.floats(0, 5))
def test_total_bound_dominates_serious_bound(M, L, eps, lam, d0):
    inp = B.TheoryInputs(M, L, 0.0, eps, lam, d0)
    assert B.total_bound(inp, "theorem_tau") >= B.serious_bound(inp) - 1e-12
