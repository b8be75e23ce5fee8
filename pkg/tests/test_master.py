import itertools

import numpy as np
import pytest

from tmecor.master import HybridColumn, build_core_lp, column_payoffs, solve_core_lp
from tmecor.sequence_form import (PurePlan, behavioral_to_plan, expected_team_utility,
                                  random_pure_plan, uniform_plan, validate_plan)
from tmecor.verify import NormalFormCatalog, brute_force_tmecor, catalogs

from toys import K3_VALUE, figure_game, pennies, toy12


def _plan(g, p, labels):
    probs = np.zeros(g.n_sequences(p))
    probs[0] = 1.0
    for s, lbl in enumerate(g.seq_labels[p]):
        if lbl in labels:
            probs[s] = 1.0
    return PurePlan(p, probs)


def _random_column(g, seed):
    return HybridColumn.from_plans(g, random_pure_plan(g, 0, seed),
                                   [random_pure_plan(g, i, seed + 100 * i) for i in range(1, g.n_players - 1)])


def test_figure_column_reaches_only_d_branch():
    g = figure_game()
    col = HybridColumn.from_plans(g, _plan(g, 0, {"Aa"}), [_plan(g, 1, {"Bd", "Ce"})])
    live = {g.seq_labels[2][s] for s in np.flatnonzero(col.payoff)}
    assert live == {"Ei", "Ej"}
    # sequence m lies under b, which this column never plays
    assert col.payoff[g.seq_labels[2].index("Gm")] == 0.0


def test_payoffs_match_tree_walk(k3):
    rng = np.random.default_rng(0)
    adv = uniform_plan(k3, 2)
    for seed in range(10):
        r0 = behavioral_to_plan(k3, 0, {I.index: rng.dirichlet([1, 1]) for I in k3.infosets[0]})
        r1 = random_pure_plan(k3, 1, seed)
        col = HybridColumn.from_plans(k3, r0, [r1])
        assert col.value_against(adv) == pytest.approx(expected_team_utility(k3, [r0, r1, adv]), abs=1e-12)


def test_single_column_value_is_adversary_best_response():
    g = toy12()
    adv_cat = NormalFormCatalog(g, g.adversary)
    for seed in range(10):
        col = _random_column(g, seed)
        ms = solve_core_lp(g, [col])
        assert ms.value == pytest.approx(min(col.value_against(p) for p in adv_cat), abs=1e-9)


@pytest.mark.parametrize("make", [toy12, pennies, figure_game])
def test_complete_column_set_matches_brute_force(make):
    g = make()
    cats = catalogs(g)
    cols = [HybridColumn.from_plans(g, plans[0], plans[1:])
            for plans in itertools.product(*[list(c) for c in cats])]
    ms = solve_core_lp(g, cols)
    assert ms.value == pytest.approx(brute_force_tmecor(g, method="normal").value, abs=1e-9)


def test_brute_force_support_gives_k3_value(k3):
    bf = brute_force_tmecor(k3, method="hybrid")
    ms = solve_core_lp(k3, bf.columns)
    assert ms.value == pytest.approx(K3_VALUE, abs=1e-9)


@pytest.mark.parametrize("game", ["k3", "k4"])
def test_master_invariants_on_random_column_sets(game, request):
    g = request.getfixturevalue(game)
    rng = np.random.default_rng(4)
    for trial in range(50):
        cols = [_random_column(g, int(s)) for s in rng.integers(0, 10**6, size=rng.integers(1, 7))]
        ms = solve_core_lp(g, cols)
        assert validate_plan(ms.adversary_plan, g)
        assert np.all(ms.mixture >= 0) and abs(ms.mixture.sum() - 1.0) < 1e-9
        # no column in the set beats the restricted value against the extracted plan
        assert max(c.value_against(ms.adversary_plan) for c in cols) <= ms.value + 1e-7
        # strong duality
        assert ms.dual_value == pytest.approx(ms.value, abs=1e-7)


def test_adding_columns_never_lowers_value(k3):
    cols = []
    last = -np.inf
    for seed in range(15):
        cols.append(_random_column(k3, seed))
        v = solve_core_lp(k3, cols).value
        assert v >= last - 1e-9
        last = v


def test_row_structure(k3):
    m = build_core_lp(k3, [_random_column(k3, 0), _random_column(k3, 1)])
    assert m.n_rows == k3.n_sequences(2) + 1
    assert m.n_vars == 1 + k3.n_infosets(2) + 2


def test_column_roundtrip(k3):
    col = _random_column(k3, 3)
    again = HybridColumn.from_dict(k3, col.to_dict())
    np.testing.assert_array_equal(again.payoff, col.payoff)
    assert again.key == col.key


def test_column_rejects_bad_plan(k3):
    bad = PurePlan(1, np.zeros(k3.n_sequences(1)))
    with pytest.raises(ValueError):
        HybridColumn.from_plans(k3, random_pure_plan(k3, 0, 0), [bad])


def test_payoff_length_mismatch(k3):
    with pytest.raises(ValueError):
        column_payoffs(k3, random_pure_plan(k3, 0, 0), [])
