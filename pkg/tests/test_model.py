import numpy as np
import pytest

from gpbundle.engine import GpbConfig, model_check_summary, run_gpb
from gpbundle.errors import ContractViolation
from gpbundle.model import (
    AggregateAffine, MultiCut, OneCut, TwoCuts, active_set, auxiliary_model, blend, check_model_condition,
    model_eval, model_from_json, model_to_json, serious_reset, update_multi_cut, update_one_cut, update_two_cuts,
)
from gpbundle.problem import AbsValue, Cut, h_l1, h_zero, linearize, make_benchmark


def affine(slope, intercept):
    """Cut with the given slope and intercept, anchored at the origin."""
    s = np.atleast_1d(np.asarray(slope, dtype=float))
    return Cut(np.zeros_like(s), float(intercept), s)


def test_model_eval_examples():
    f = AbsValue(1)
    mc = MultiCut((linearize(f, [1.0]), linearize(f, [-1.0])), h_zero())
    assert model_eval(mc, [0.5]) == 0.5
    one = OneCut(AggregateAffine.from_cut(affine(0.0, 0.0)), h_l1(1.0))
    assert model_eval(one, [2.0]) == 2.0
    two = TwoCuts(AggregateAffine.from_cut(affine(1.0, -1.0)), affine(-1.0, 0.0), h_zero())
    assert model_eval(two, [0.0]) == 0.0


def test_update_one_cut_mean():
    m = OneCut(AggregateAffine.from_cut(affine(1.0, 0.0)), h_zero())
    m2 = update_one_cut(m, affine(-1.0, 0.0), 0.5)
    assert m2.agg.slope[0] == 0.0 and m2.agg.intercept == 0.0


def test_update_one_cut_fixed_point():
    c = affine(3.0, -2.0)
    m = OneCut(AggregateAffine.from_cut(c), h_zero())
    m2 = update_one_cut(m, c, 0.3)
    assert m2.agg.slope[0] == pytest.approx(3.0) and m2.agg.intercept == pytest.approx(-2.0)


def test_update_one_cut_weighted():
    m = OneCut(AggregateAffine.from_cut(affine(2.0, 1.0)), h_zero())
    m2 = update_one_cut(m, affine(-2.0, 1.0), 0.75)
    assert m2.agg.slope[0] == pytest.approx(1.0) and m2.agg.intercept == pytest.approx(1.0)


@pytest.mark.parametrize("tau", [0.0, 1.0, -0.1, 1.5])
def test_update_one_cut_rejects_tau(tau):
    m = OneCut(AggregateAffine.from_cut(affine(1.0, 0.0)), h_zero())
    with pytest.raises(ContractViolation):
        update_one_cut(m, affine(1.0, 0.0), tau)


def test_provenance_weights_stay_convex():
    rng = np.random.default_rng(0)
    agg = AggregateAffine.from_cut(affine(rng.normal(size=2), 0.0))
    for _ in range(300):
        agg = blend(agg, Cut(rng.normal(size=2), 0.0, rng.normal(size=2)), float(rng.uniform(0.01, 0.99)))
    w = agg.weights
    assert len(w) == 301
    assert np.all(w >= 0) and abs(w.sum() - 1.0) <= 1e-12


def _two_cut_model(agg_cut, last_cut):
    return TwoCuts(AggregateAffine.from_cut(agg_cut), last_cut, h_zero())


def test_update_two_cuts_first_branch():
    # agg(x) = 5 > last(x) = 3 at x = 0
    m = _two_cut_model(affine(1.0, 5.0), affine(-1.0, 3.0))
    new = affine(0.5, 0.0)
    m2 = update_two_cuts(m, [0.0], new, 1.0)
    assert m2.agg.slope[0] == 1.0 and m2.agg.intercept == 5.0
    assert m2.last is new
    with pytest.raises(ContractViolation):
        update_two_cuts(m, [0.0], new, 0.4)


def test_update_two_cuts_second_branch():
    m = _two_cut_model(affine(1.0, 1.0), affine(-1.0, 3.0))
    m2 = update_two_cuts(m, [0.0], affine(0.5, 0.0), 0.0)
    assert m2.agg.slope[0] == -1.0 and m2.agg.intercept == 3.0


def test_update_two_cuts_tie_uses_multiplier():
    m = _two_cut_model(affine(1.0, 2.0), affine(-1.0, 2.0))
    m2 = update_two_cuts(m, [0.0], affine(0.5, 0.0), 0.4)
    assert m2.agg.slope[0] == pytest.approx(0.4 * 1.0 + 0.6 * -1.0)
    assert m2.agg.intercept == pytest.approx(2.0)
    with pytest.raises(ContractViolation):
        update_two_cuts(m, [0.0], affine(0.5, 0.0), 1.2)


def test_update_multi_cut_minimal_and_maximal():
    c1, c2 = affine(1.0, 0.0), affine(-1.0, -5.0)  # at x = 1: c1 = 1 active, c2 = -6 inactive
    m = MultiCut((c1, c2), h_zero())
    new = affine(0.0, 0.0)
    minimal = update_multi_cut(m, [1.0], new, [0])
    assert minimal.cuts == (c1, new)
    maximal = update_multi_cut(m, [1.0], new, [0, 1])
    assert maximal.cuts == (c1, c2, new)
    with pytest.raises(ContractViolation):
        update_multi_cut(m, [1.0], new, [1])


def test_update_multi_cut_hand_step():
    f = AbsValue(1)
    m = MultiCut((linearize(f, [1.0]),), h_zero())
    # one cut u with center 1 and lam 1 gives x = 0, where the cut is active
    assert list(active_set(m, [0.0])) == [0]
    new = linearize(f, [0.0])
    m2 = update_multi_cut(m, [0.0], new, active_set(m, [0.0]))
    assert len(m2.cuts) == 2 and m2.cuts[1] is new


def test_update_multi_cut_pruning_keeps_active_and_new():
    cuts = tuple(affine(s, b) for s, b in [(1.0, 0.0), (0.0, -3.0), (0.5, -4.0), (-1.0, 0.0)])
    m = MultiCut(cuts, h_zero(), max_size=3)
    x = [2.0]  # only cut 0 is active
    m2 = update_multi_cut(m, x, affine(0.0, 0.0), [0, 1, 2, 3], multipliers=[1.0, 0.0, 0.0, 0.0])
    assert m2.size == 3
    assert m2.cuts[0] is cuts[0]
    assert m2.cuts[-1].grad[0] == 0.0


def test_update_multi_cut_chain_inclusion():
    rng = np.random.default_rng(5)
    for _ in range(30):
        cuts = tuple(Cut(rng.normal(size=2), float(rng.normal()), rng.normal(size=2)) for _ in range(6))
        m = MultiCut(cuts, h_zero())
        x = rng.normal(size=2)
        act = set(active_set(m, x).tolist())
        extra = {i for i in range(6) if rng.uniform() < 0.5}
        new = Cut(x, 0.0, rng.normal(size=2))
        m2 = update_multi_cut(m, x, new, sorted(act | extra))
        ids = {id(c) for c in m2.cuts}
        assert {id(cuts[i]) for i in act} | {id(new)} <= ids <= {id(c) for c in cuts} | {id(new)}


def test_serious_reset_variants():
    f = AbsValue(1)
    c = linearize(f, [2.0])
    prev = MultiCut((linearize(f, [1.0]), linearize(f, [-1.0])), h_zero())
    e1 = serious_reset("E1", prev, np.array([2.0]), c)
    assert isinstance(e1, OneCut) and e1.agg.slope[0] == 1.0
    e2 = serious_reset("E2", prev, np.array([2.0]), c)
    for u in (-2.0, 0.0, 3.0):
        assert model_eval(e2, [u]) == c([u])
    keep = serious_reset("E3", prev, np.array([2.0]), c, policy="keep_all")
    assert keep.size == 3
    act = serious_reset("E3", prev, np.array([2.0]), c)
    assert act.size == 2  # only the cut at 1 is active at x = 2
    for m in (e1, e2, keep, act):
        for u in np.linspace(-3, 3, 13):
            assert model_eval(m, [u]) >= c([u]) - 1e-12


def test_check_model_condition_one_cut_equality():
    m = OneCut(AggregateAffine.from_cut(affine(1.0, 0.0)), h_zero())
    cut = affine(-1.0, 0.5)
    plus = update_one_cut(m, cut, 0.3)
    rep = check_model_condition(plus, m, cut, 0.3, [np.array([u]) for u in np.linspace(-2, 2, 9)])
    assert rep.ok and abs(rep.worst_slack) < 1e-12


def test_check_model_condition_keep_all_multicut():
    f = AbsValue(1)
    m = MultiCut((linearize(f, [1.0]),), h_zero())
    x = np.array([0.0])
    new = linearize(f, [-0.5])
    plus = update_multi_cut(m, x, new, [0])
    bar = auxiliary_model("E3", m, x)
    rep = check_model_condition(plus, bar, new, 0.9, [np.array([u]) for u in np.linspace(-2, 2, 9)], x=x, gamma=m)
    assert rep.ok and rep.worst_slack >= 0


def test_check_model_condition_reports_violation():
    m = OneCut(AggregateAffine.from_cut(affine(1.0, 0.0)), h_zero())
    bad = OneCut(AggregateAffine.from_cut(affine(0.0, -10.0)), h_zero())
    rep = check_model_condition(bad, m, affine(-1.0, 0.0), 0.5, [np.array([0.0])])
    assert not rep.ok and rep.violations


def test_e2_run_has_no_condition_violations():
    inst = make_benchmark("abs1d")
    rec = run_gpb(inst, GpbConfig(lam=1.0, eps_bar=1e-6, tau=0.9, scheme="E2", max_iterations=10,
                                  stop_rule="max_iter", audit_models=True))
    s = model_check_summary(rec)
    assert s["violations"] == 0


def test_model_json_round_trip():
    f = AbsValue(2)
    agg = blend(AggregateAffine.from_cut(linearize(f, [1.0, 2.0])), linearize(f, [-1.0, 0.5]), 0.4)
    for m in (OneCut(agg, h_l1(0.5)), TwoCuts(agg, linearize(f, [3.0, -1.0]), h_zero()),
              MultiCut((linearize(f, [1.0, 1.0]), linearize(f, [-2.0, 1.0])), h_zero(), max_size=5)):
        back = model_from_json(model_to_json(m))
        for u in ([0.0, 0.0], [1.5, -2.0]):
            assert model_eval(back, u) == pytest.approx(model_eval(m, u), abs=1e-14)
    np.testing.assert_allclose(AggregateAffine.from_json(agg.to_json()).weights, agg.weights)


def test_multicut_needs_cuts():
    with pytest.raises(ContractViolation):
        MultiCut((), h_zero())
