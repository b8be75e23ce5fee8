"""Backend selection: the builtin simplex/branch-and-bound or HiGHS via scipy.

``TMECOR_SOLVER_BACKEND`` picks the default (``builtin`` or ``highs``).  Both
backends report duals as the derivative of the optimal objective with respect
to each row's right-hand side, in the model's own objective sense.
"""

from __future__ import annotations

import math
import os
import weakref

import numpy as np

from ..exceptions import InvalidParams
from .branch_and_bound import solve_lp as _builtin_lp
from .branch_and_bound import solve_milp as _builtin_milp
from .model import EQ, GE, LE, LinearModel, SolveResult, Status
from .simplex import SimplexLP

ENV_VAR = "TMECOR_SOLVER_BACKEND"


class BuiltinBackend:
    name = "builtin"

    def __init__(self):
        self._cache: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()

    def _lp_for(self, model: LinearModel) -> SimplexLP:
        # one simplex state per model; the matrix is rebuilt when rows change
        hit = self._cache.get(model)
        if hit is not None and hit[0] == model.version:
            lp = hit[1]
            lp.set_costs(model)
            return lp
        lp = SimplexLP(model)
        self._cache[model] = (model.version, lp)
        return lp

    def solve_lp(self, model: LinearModel, warm_start=None) -> SolveResult:
        return _builtin_lp(model, warm=warm_start, lp=self._lp_for(model))

    def solve_milp(self, model: LinearModel, abs_gap: float = 1e-8, node_limit: int = 100_000,
                   warm_start=None) -> SolveResult:
        return _builtin_milp(model, abs_gap=abs_gap, node_limit=node_limit, warm=warm_start,
                             lp=self._lp_for(model))


def _split_rows(model: LinearModel):
    A = model.matrix()
    senses = np.asarray(model.senses, dtype=object)
    rhs = np.asarray(model.rhs, dtype=np.float64)
    ub_rows = np.flatnonzero((senses == LE) | (senses == GE))
    eq_rows = np.flatnonzero(senses == EQ)
    flip = np.where(senses[ub_rows] == GE, -1.0, 1.0)
    A_ub = A[ub_rows].multiply(flip[:, None]).tocsr() if len(ub_rows) else None
    b_ub = rhs[ub_rows] * flip if len(ub_rows) else None
    A_eq = A[eq_rows] if len(eq_rows) else None
    b_eq = rhs[eq_rows] if len(eq_rows) else None
    return A_ub, b_ub, A_eq, b_eq, ub_rows, eq_rows, flip


class HighsBackend:
    name = "highs"

    def solve_lp(self, model: LinearModel, warm_start=None, bounds=None) -> SolveResult:
        from scipy.optimize import linprog

        sign = -1.0 if model.sense == "max" else 1.0
        A_ub, b_ub, A_eq, b_eq, ub_rows, eq_rows, flip = _split_rows(model)
        lo, up = model.bounds() if bounds is None else bounds
        bounds = [(None if math.isinf(a) else a, None if math.isinf(b) else b) for a, b in zip(lo, up)]
        res = linprog(sign * model.objective, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                      bounds=bounds, method="highs")
        if res.status == 2:
            return SolveResult(Status.INFEASIBLE, iterations=int(res.nit))
        if res.status == 3:
            return SolveResult(Status.UNBOUNDED, iterations=int(res.nit))
        if res.status != 0:
            return SolveResult(Status.ITERATION_LIMIT, iterations=int(res.nit))
        duals = np.zeros(model.n_rows)
        if len(ub_rows):
            duals[ub_rows] = sign * flip * res.ineqlin.marginals
        if len(eq_rows):
            duals[eq_rows] = sign * res.eqlin.marginals
        obj = model.objective_value(res.x)
        return SolveResult(Status.OPTIMAL, obj, res.x, duals, 0.0, obj, int(res.nit), 0, None)

    def solve_milp(self, model: LinearModel, abs_gap: float = 1e-8, node_limit: int = 100_000,
                   warm_start=None) -> SolveResult:
        from scipy.optimize import Bounds, LinearConstraint, milp

        sign = -1.0 if model.sense == "max" else 1.0
        senses = np.asarray(model.senses, dtype=object)
        rhs = np.asarray(model.rhs, dtype=np.float64)
        row_lo = np.where(senses == LE, -np.inf, rhs)
        row_up = np.where(senses == GE, np.inf, rhs)
        lo, up = model.bounds()
        integrality = np.asarray(model.is_binary, dtype=np.int64)
        cons = [LinearConstraint(model.matrix(), row_lo, row_up)] if model.n_rows else []
        res = milp(sign * model.objective, integrality=integrality, bounds=Bounds(lo, up),
                   constraints=cons,
                   options={"mip_rel_gap": 0.0, "node_limit": node_limit, "presolve": True})
        if res.status == 2:
            return SolveResult(Status.INFEASIBLE)
        if res.status == 3:
            return SolveResult(Status.UNBOUNDED)
        if res.x is None:
            return SolveResult(Status.ITERATION_LIMIT)
        x = np.asarray(res.x, dtype=np.float64)
        b = model.binary_indices()
        x[b] = np.round(x[b])
        if len(b) < model.n_vars:
            # integrality slack leaks into the continuous part; re-solve with the binaries fixed
            lo2, up2 = lo.copy(), up.copy()
            lo2[b] = up2[b] = x[b]
            polished = self.solve_lp(model, bounds=(lo2, up2))
            if polished.optimal:
                x = polished.primal
                x[b] = lo2[b]
        obj = model.objective_value(x)
        raw = getattr(res, "mip_dual_bound", None)
        bound = sign * raw if raw is not None and np.isfinite(raw) else obj
        status = Status.OPTIMAL if res.status == 0 else Status.ITERATION_LIMIT
        gap = abs(bound - obj) if status is Status.ITERATION_LIMIT else 0.0
        return SolveResult(status, obj, x, None, gap, bound, 0, int(getattr(res, "mip_node_count", 0) or 0), None)


BACKENDS = {"builtin": BuiltinBackend, "highs": HighsBackend}


def get_backend(name: str | None = None):
    """Backend instance by name; ``None`` reads ``TMECOR_SOLVER_BACKEND`` (default builtin)."""
    if name is None:
        name = os.environ.get(ENV_VAR, "builtin")
    if not isinstance(name, str):
        return name  # already a backend object
    try:
        return BACKENDS[name.lower()]()
    except KeyError:
        raise InvalidParams(f"unknown solver backend {name!r}; choose from {sorted(BACKENDS)}") from None
