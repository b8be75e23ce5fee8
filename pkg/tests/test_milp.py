import math

import numpy as np
import pytest

from tmecor.exceptions import InvalidParams
from tmecor.milp import EQ, GE, LE, LinearModel, Status, get_backend
from tmecor.milp.backends import ENV_VAR

BACKENDS = ["builtin", "highs"]


@pytest.mark.parametrize("name", BACKENDS)
def test_single_bound_lp(name):
    m = LinearModel()
    x = m.add_variable("x")
    m.add_constraint({x: 1.0}, LE, 3.0, name="cap")
    m.set_objective({x: 1.0}, "max")
    res = get_backend(name).solve_lp(m)
    assert res.optimal
    assert res.objective_value == pytest.approx(3.0)
    assert res.duals[0] == pytest.approx(1.0)


@pytest.mark.parametrize("name", BACKENDS)
def test_two_var_lp(name):
    m = LinearModel()
    x, y = m.add_variable("x"), m.add_variable("y")
    m.add_constraint({x: 1.0, y: 1.0}, LE, 1.0)
    m.set_objective({x: 1.0, y: 1.0}, "max")
    assert get_backend(name).solve_lp(m).objective_value == pytest.approx(1.0)


@pytest.mark.parametrize("name", BACKENDS)
def test_small_milps(name):
    b = get_backend(name)
    m = LinearModel()
    x1, x2 = m.add_variable("x1", 0, 1, True), m.add_variable("x2", 0, 1, True)
    m.add_constraint({x1: 1.0, x2: 1.0}, LE, 1.5)
    m.set_objective({x1: 1.0, x2: 1.0}, "max")
    assert b.solve_milp(m).objective_value == pytest.approx(1.0)

    k = LinearModel()
    a, c = k.add_variable("a", 0, 1, True), k.add_variable("b", 0, 1, True)
    k.add_constraint({a: 2.0, c: 2.0}, LE, 3.0)
    k.set_objective({a: 3.0, c: 2.0}, "max")
    res = b.solve_milp(k)
    assert res.objective_value == pytest.approx(3.0)
    np.testing.assert_allclose(res.primal, [1.0, 0.0], atol=1e-9)


def test_infeasible_and_unbounded():
    b = get_backend("builtin")
    m = LinearModel()
    x = m.add_variable("x")
    m.add_constraint({x: 1.0}, GE, 2.0)
    m.add_constraint({x: 1.0}, LE, 1.0)
    m.set_objective({x: 1.0}, "max")
    assert b.solve_lp(m).status is Status.INFEASIBLE

    u = LinearModel()
    y = u.add_variable("y")
    u.set_objective({y: 1.0}, "max")
    assert b.solve_lp(u).status is Status.UNBOUNDED


def _random_model(rng, binaries=True, bounded=True):
    n = int(rng.integers(1, 12))
    m = LinearModel()
    for j in range(n):
        lo, up = [(0, math.inf), (0, 1), (-math.inf, math.inf), (-2, 3)][rng.integers(4)]
        m.add_variable(f"x{j}", lo, up, binary=binaries and bool(rng.integers(3) == 0))
    for _ in range(int(rng.integers(0, 10))):
        cols = rng.choice(n, size=rng.integers(1, n + 1), replace=False)
        vals = rng.integers(-3, 4, size=len(cols)).astype(float)
        m.add_constraint((cols, vals), [LE, EQ, GE][rng.integers(3)], float(rng.integers(-3, 6)))
    if bounded:
        for j in range(n):
            m.add_constraint(([j], [1.0]), LE, 5.0)
            m.add_constraint(([j], [1.0]), GE, -5.0)
    m.set_objective(rng.integers(-5, 6, size=n).astype(float), ["max", "min"][rng.integers(2)])
    return m


def test_builtin_agrees_with_highs():
    rng = np.random.default_rng(0)
    B, H = get_backend("builtin"), get_backend("highs")
    for _ in range(200):
        m = _random_model(rng)
        a, b = B.solve_lp(m), H.solve_lp(m)
        assert a.status == b.status
        if a.optimal:
            assert a.objective_value == pytest.approx(b.objective_value, abs=1e-7)
            assert m.is_feasible(a.primal, 1e-7, integral=False)
        a, b = B.solve_milp(m), H.solve_milp(m)
        assert a.status == b.status
        if a.optimal:
            assert a.objective_value == pytest.approx(b.objective_value, abs=1e-7)
            assert m.is_feasible(a.primal, 1e-7)


def test_strong_duality_and_slackness():
    """max c.x, Ax <= b, x >= 0: b.y equals the optimum, y >= 0, A'y >= c, slackness holds."""
    rng = np.random.default_rng(1)
    for _ in range(100):
        n, k = int(rng.integers(1, 8)), int(rng.integers(1, 8))
        A = rng.integers(0, 5, size=(k, n)).astype(float) + 0.1
        b = rng.integers(1, 10, size=k).astype(float)
        c = rng.integers(-2, 6, size=n).astype(float)
        m = LinearModel()
        for j in range(n):
            m.add_variable(f"x{j}")
        for i in range(k):
            m.add_constraint((np.arange(n), A[i]), LE, b[i])
        m.set_objective(c, "max")
        res = get_backend("builtin").solve_lp(m)
        assert res.optimal
        y = res.duals
        assert b @ y == pytest.approx(res.objective_value, abs=1e-7)
        assert np.all(y >= -1e-9)
        assert np.all(A.T @ y >= c - 1e-9)
        slack = b - A @ res.primal
        assert np.all(np.abs(slack * y) <= 1e-7)


def test_relaxation_bounds_milp_and_determinism():
    rng = np.random.default_rng(2)
    B = get_backend("builtin")
    for _ in range(100):
        m = _random_model(rng)
        milp = B.solve_milp(m)
        if not milp.optimal:
            continue
        lp = B.solve_lp(m)
        sign = 1.0 if m.sense == "max" else -1.0
        assert sign * lp.objective_value >= sign * milp.objective_value - 1e-9
        again = B.solve_milp(m)
        assert again.objective_value == milp.objective_value
        np.testing.assert_array_equal(again.primal, milp.primal)


def test_node_limit_reports_iteration_limit():
    # a knapsack whose relaxation is fractional at every shallow node
    rng = np.random.default_rng(5)
    m = LinearModel()
    w = rng.integers(10, 40, size=25).astype(float)
    ids = [m.add_variable(f"z{j}", 0, 1, True) for j in range(25)]
    m.add_constraint((ids, w), LE, float(w.sum() / 2) + 0.5)
    m.set_objective(w + rng.random(25), "max")
    res = get_backend("builtin").solve_milp(m, node_limit=3)
    assert res.status is Status.ITERATION_LIMIT


def test_backend_selection(monkeypatch):
    monkeypatch.setenv(ENV_VAR, "highs")
    assert get_backend().name == "highs"
    monkeypatch.setenv(ENV_VAR, "builtin")
    assert get_backend().name == "builtin"
    with pytest.raises(InvalidParams):
        get_backend("cplex")


def test_lp_text_mentions_every_row():
    m = LinearModel("t")
    x = m.add_variable("x[1]", 0, 1, True)
    y = m.add_variable("y")
    m.add_constraint({x: 1.0, y: 2.0}, LE, 4.0, name="cap")
    m.set_objective({x: 1.0}, "max")
    text = m.to_lp_text()
    assert "Maximize" in text and "cap" in text and "Binar" in text
