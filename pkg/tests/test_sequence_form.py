import numpy as np
import pytest

from tmecor.game import Decision, Terminal, build_game
from tmecor.sequence_form import (RealizationPlan, behavioral_to_plan, enumerate_sequences,
                                  leaf_reach, leaf_reaches, random_pure_plan, uniform_plan,
                                  validate_plan)


@pytest.fixture
def one_infoset():
    root = Decision(0, "X", [("a", Decision(2, "Z", [("s", Terminal(1.0)), ("t", Terminal(0.0))])),
                             ("b", Terminal(-1.0))])
    return build_game(root, 3)


def test_enumerate_single_decision(one_infoset):
    seqs = enumerate_sequences(one_infoset, 0)
    assert len(seqs) == 3
    assert seqs[0].parent == -1
    assert [s.label for s in seqs[1:]] == ["Xa", "Xb"]
    assert all(s.parent == 0 for s in seqs[1:])


def test_sequence_counts(k4):
    from tmecor import build_kuhn
    assert len(enumerate_sequences(k4, 0)) == 33
    assert len(enumerate_sequences(build_kuhn(3, 12), 2)) == 97


def test_uniform_is_valid(k4):
    for p in range(3):
        assert validate_plan(uniform_plan(k4, p), k4)


def test_bad_root_mass(k4):
    probs = uniform_plan(k4, 0).probs.copy()
    probs *= 0.9
    assert not validate_plan(RealizationPlan(0, probs), k4)


def test_random_pure_plans(k4):
    a = random_pure_plan(k4, 0, 7)
    b = random_pure_plan(k4, 0, 7)
    assert a == b
    for seed in range(1000):
        plan = random_pure_plan(k4, seed % 3, seed)
        assert validate_plan(plan, k4)


def test_random_pure_one_infoset(one_infoset):
    for seed in range(10):
        plan = random_pure_plan(one_infoset, 0, seed)
        assert plan.probs[1] + plan.probs[2] == 1.0


def test_leaf_reach_simple(one_infoset):
    g = one_infoset
    plans = [random_pure_plan(g, p, 0) for p in range(3)]
    for l in range(g.n_leaves):
        r = leaf_reach(g, plans, l)
        reached = all(plans[i].probs[g.leaf_seqs[l, i]] == 1.0 for i in range(3))
        assert r == (g.leaf_chance[l] if reached else 0.0)


def test_uniform_reach_sums_to_one(k4):
    plans = [uniform_plan(k4, p) for p in range(3)]
    assert abs(leaf_reaches(k4, plans).sum() - 1.0) < 1e-9


def _random_behavioral(g, p, rng):
    return behavioral_to_plan(g, p, {I.index: rng.dirichlet(np.ones(len(I.actions)))
                                      for I in g.infosets[p]})


def test_reach_normalized_for_random_profiles(k3):
    rng = np.random.default_rng(1)
    for _ in range(50):
        plans = [_random_behavioral(k3, p, rng) for p in range(3)]
        assert abs(leaf_reaches(k3, plans).sum() - 1.0) < 1e-9


def test_reach_is_multiplicative(k3):
    rng = np.random.default_rng(2)
    plans = [_random_behavioral(k3, p, rng) for p in range(3)]
    for l in rng.choice(k3.n_leaves, 20, replace=False):
        i = int(rng.integers(3))
        base = leaf_reach(k3, plans, l)
        probs = plans[i].probs.copy()
        probs[k3.leaf_seqs[l, i]] *= 0.5
        scaled = list(plans)
        scaled[i] = RealizationPlan(i, probs)
        assert np.isclose(leaf_reach(k3, scaled, l), 0.5 * base)


def test_mixing_pure_plans_stays_valid(k4):
    """A mixed normal-form strategy maps to a valid realization plan."""
    rng = np.random.default_rng(3)
    for trial in range(100):
        k = int(rng.integers(1, 6))
        w = rng.dirichlet(np.ones(k))
        mixed = sum(wi * random_pure_plan(k4, 0, 1000 * trial + j).probs for j, wi in enumerate(w))
        assert validate_plan(RealizationPlan(0, mixed), k4)
