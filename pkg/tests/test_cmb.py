import numpy as np
import pytest

import tmecor.cmb as cmb_mod
from tmecor.bro import BroSolution, solve_bro
from tmecor.cmb import CmbConfig, initial_column, run_cmb
from tmecor.exceptions import DidNotConverge, InvalidParams, NumericalStall
from tmecor.sequence_form import validate_plan
from tmecor.verify import adversary_best_response, brute_force_tmecor

from toys import K3_VALUE, figure_game, pennies, toy12


@pytest.fixture(scope="module")
def k3_run(k3):
    return run_cmb(k3)


def test_k3_value(k3_run):
    assert k3_run.converged
    assert k3_run.value == pytest.approx(K3_VALUE, abs=1e-6)


def test_sandwich_every_iteration(k3_run):
    for lo, up in k3_run.bound_trace:
        assert lo <= K3_VALUE + 1e-7
        assert up >= K3_VALUE - 1e-7


def test_trace_shape(k3_run):
    lows = [lo for lo, _ in k3_run.bound_trace]
    assert all(b >= a - 1e-9 for a, b in zip(lows, lows[1:]))
    assert k3_run.gap <= 1e-7
    assert len(k3_run.columns) <= k3_run.iterations + 1
    # every iteration but the last added a strictly improving column
    for lo, up in k3_run.bound_trace[:-1]:
        assert up > lo + 1e-7
    assert len(k3_run.duality_gaps) == k3_run.iterations
    assert max(abs(d) for d in k3_run.duality_gaps) <= 1e-7


def test_equilibrium_gains(k3, k3_run):
    team = solve_bro(k3, k3_run.adversary_plan).value
    adv, _ = adversary_best_response(k3, k3_run.columns, k3_run.mixture)
    u = float(k3_run.mixture @ np.array([c.payoff for c in k3_run.columns]) @ k3_run.adversary_plan.probs)
    assert team - u <= k3_run.gap + 1e-9
    assert u - adv <= 1e-7


@pytest.mark.parametrize("make", [toy12, pennies, figure_game])
def test_toy_values(make):
    g = make()
    assert run_cmb(g).value == pytest.approx(brute_force_tmecor(g).value, abs=1e-7)


def test_c18_driver_on_toy():
    g = toy12()
    assert run_cmb(g, oracle="c18").value == pytest.approx(brute_force_tmecor(g).value, abs=1e-7)


def test_epsilon_mode_stops_early(k3):
    res = run_cmb(k3, epsilon=0.5)
    assert res.converged
    assert res.gap <= 0.5
    assert res.iterations <= run_cmb(k3).iterations


def test_initial_column(k3):
    a, b = initial_column(k3), initial_column(k3)
    assert a.key == b.key
    assert validate_plan(a.r0, k3) and all(validate_plan(p, k3) for p in a.pure_rest)
    assert np.all(np.isfinite(a.payoff))
    assert np.abs(a.payoff).sum() <= np.abs(k3.leaf_payoff).max() + 1e-12


def test_iteration_limit_carries_result(k3):
    with pytest.raises(DidNotConverge) as info:
        run_cmb(k3, max_iterations=1)
    res = info.value.result
    assert not res.converged
    assert res.iterations == 1
    assert len(res.columns) == len(res.mixture) == 2


def test_config_checks():
    with pytest.raises(InvalidParams):
        CmbConfig(epsilon=-1.0)
    with pytest.raises(InvalidParams):
        CmbConfig(convergence_tol=0.0)
    with pytest.raises(InvalidParams):
        CmbConfig(oracle="f18")
    assert CmbConfig(epsilon=0.6).oracle_gap == 1e-8
    assert CmbConfig(epsilon=1e-8).oracle_gap == pytest.approx(2.5e-9)


def test_stall_is_reported(k3, monkeypatch):
    class Stuck:
        def solve(self, r_n, abs_gap=1e-8, node_limit=0):
            col = initial_column(k3)
            return BroSolution(10.0, col, 10.0, 10.0)

    monkeypatch.setattr(cmb_mod, "oracle_for", lambda *a, **k: Stuck())
    with pytest.raises(NumericalStall) as info:
        run_cmb(k3)
    assert info.value.diagnostics["iteration"] == 1
