"""Depth-first branch-and-bound over binary variables."""

from __future__ import annotations

import heapq
import itertools
import math

import numpy as np

from .model import LinearModel, SolveResult, Status
from .simplex import Basis, SimplexLP

INT_TOL = 1e-6


def _most_fractional(x: np.ndarray, binaries: np.ndarray, tol: float) -> int:
    """Binary with value furthest from integral; lowest index on ties, -1 if none."""
    if len(binaries) == 0:
        return -1
    xb = x[binaries]
    frac = np.minimum(xb - np.floor(xb), np.ceil(xb) - xb)
    k = int(np.argmax(frac))
    return int(binaries[k]) if frac[k] > tol else -1


def solve_lp(model: LinearModel, warm: Basis | None = None, lp: SimplexLP | None = None) -> SolveResult:
    """Solve the continuous relaxation of ``model`` (integrality marks are ignored)."""
    lp = lp if lp is not None else SimplexLP(model)
    out = lp.solve(warm=warm)
    if out.status is not Status.OPTIMAL:
        return SolveResult(out.status, iterations=out.iterations)
    obj = model.objective_value(out.x)
    return SolveResult(Status.OPTIMAL, obj, out.x, lp.sign * out.y, 0.0, obj,
                       out.iterations, 0, out.basis)


def solve_milp(model: LinearModel, abs_gap: float = 1e-8, node_limit: int = 100_000,
               int_tol: float = INT_TOL, warm: Basis | None = None,
               lp: SimplexLP | None = None, node_selection: str = "depth") -> SolveResult:
    """Branch-and-bound on the binaries of ``model``.

    Nodes are explored deepest first, then by best LP bound; children are
    solved right away from the parent basis with the dual simplex so that
    infeasible or dominated ones never enter the queue.  The returned basis is
    the root relaxation's, which remains a good warm start when only the
    objective changes.
    """
    lp = lp if lp is not None else SimplexLP(model)
    sense = 1.0 if model.sense == "max" else -1.0  # internally everything is maximized
    binaries = model.binary_indices()
    lower0, upper0 = model.bounds()

    root = lp.solve(lower0, upper0, warm=warm)
    iterations = root.iterations
    if root.status is not Status.OPTIMAL:
        return SolveResult(root.status, iterations=iterations, nodes=1)
    root_basis = root.basis

    best_x = None
    best_val = -math.inf
    counter = itertools.count()
    heap: list = []
    nodes = 1

    best_first = False

    def key(depth, val):
        return (-val, -depth) if best_first else (-depth, -val)

    def consider(x, lo, up, basis, depth):
        nonlocal best_x, best_val
        val = sense * model.objective_value(x)
        if val <= best_val + abs_gap:
            return
        j = _most_fractional(x, binaries, int_tol)
        if j < 0:
            x = x.copy()
            x[binaries] = np.round(x[binaries])
            best_x, best_val = x, sense * model.objective_value(x)
            return
        heapq.heappush(heap, (key(depth, val), next(counter), depth, val, j, lo, up, basis))

    consider(root.x, lower0, upper0, root_basis, 0)
    status = Status.OPTIMAL
    while heap:
        if best_x is not None and max(h[3] for h in heap) <= best_val + abs_gap:
            break
        if node_selection == "hybrid" and best_x is not None and not best_first:
            best_first = True
            heap = [(key(h[2], h[3]),) + h[1:] for h in heap]
            heapq.heapify(heap)
        entry = heapq.heappop(heap)
        _, _, depth, val, j, lo, up, basis = entry
        if val <= best_val + abs_gap:
            continue
        if nodes >= node_limit:
            heapq.heappush(heap, entry)
            status = Status.ITERATION_LIMIT
            break
        for value in (1.0, 0.0) if sense * model.objective[j] >= 0 else (0.0, 1.0):
            lo2, up2 = lo.copy(), up.copy()
            lo2[j] = up2[j] = value
            out = lp.solve(lo2, up2, warm=basis)
            nodes += 1
            iterations += out.iterations
            if out.status is Status.OPTIMAL:
                consider(out.x, lo2, up2, out.basis, depth + 1)

    bound = max([h[3] for h in heap], default=-math.inf)
    if best_x is None:
        if status is Status.ITERATION_LIMIT:
            return SolveResult(status, best_bound=sense * bound, iterations=iterations, nodes=nodes, basis=root_basis)
        return SolveResult(Status.INFEASIBLE, iterations=iterations, nodes=nodes)
    bound = max(bound, best_val)
    gap = bound - best_val
    return SolveResult(status, sense * best_val, best_x, None, gap, sense * bound,
                       iterations, nodes, root_basis)
