"""Ground-truth oracles and equilibrium certification.

Everything here is deliberately independent of the column-generation path:
normal-form enumeration, dense matrix products and HiGHS (through scipy)
rather than the builtin simplex.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .exceptions import SolverFailure, TooLarge
from .game import GameTree
from .master import HybridColumn, mixture_payoff, team_leaf_reach
from .sequence_form import PurePlan, RealizationPlan

DEFAULT_CAP = 1_000_000
EQUIVALENCE_TOL = 1e-9


# -- reduced normal-form catalogs ------------------------------------------------

class NormalFormCatalog:
    """Reduced pure strategies of one player as a 0/1 matrix (one row per plan)."""

    def __init__(self, g: GameTree, player: int, cap: int = DEFAULT_CAP):
        self.g = g
        self.player = player
        size = count_reduced_plans(g, player)
        if size > cap:
            raise TooLarge(f"player {player} has {size} reduced pure plans (cap {cap})")
        followers = _followers(g, player)

        def below(s: int) -> list[tuple[int, ...]]:
            # plans of the part of the strategy that lives under sequence s
            parts = []
            for I in followers[s]:
                options = []
                for t in I.sequences:
                    options.extend((t,) + rest for rest in below(t))
                parts.append(options)
            return [sum(combo, ()) for combo in itertools.product(*parts)]

        rows = below(0)
        mat = np.zeros((len(rows), g.n_sequences(player)))
        mat[:, 0] = 1.0
        for k, seqs in enumerate(rows):
            mat[k, list(seqs)] = 1.0
        mat.setflags(write=False)
        self.matrix = mat

    def __len__(self) -> int:
        return len(self.matrix)

    def plan(self, k: int) -> PurePlan:
        return PurePlan(self.player, self.matrix[k])

    def __iter__(self):
        return (self.plan(k) for k in range(len(self)))


def _followers(g: GameTree, player: int) -> list[list]:
    out: list[list] = [[] for _ in range(g.n_sequences(player))]
    for I in g.infosets[player]:
        out[I.parent_sequence].append(I)
    return out


def count_reduced_plans(g: GameTree, player: int) -> int:
    followers = _followers(g, player)
    memo: dict[int, int] = {}

    def count(s: int) -> int:
        if s not in memo:
            total = 1
            for I in followers[s]:
                total *= sum(count(t) for t in I.sequences)
            memo[s] = total
        return memo[s]

    return count(0)


def catalogs(g: GameTree, cap: int = DEFAULT_CAP) -> list[NormalFormCatalog]:
    cached = g._cache.get("catalogs")
    if cached is None:
        cached = [NormalFormCatalog(g, i, cap) for i in g.team]
        g._cache["catalogs"] = cached
    for c in cached:
        if len(c) > cap:
            raise TooLarge(f"player {c.player} has {len(c)} reduced pure plans (cap {cap})")
    return cached


def _grid(g: GameTree, rows: np.ndarray, cols: np.ndarray, weights: np.ndarray, shape) -> np.ndarray:
    flat = np.bincount(rows * shape[1] + cols, weights=weights, minlength=shape[0] * shape[1])
    return flat.reshape(shape)


# -- team best response by enumeration --------------------------------------------

@dataclass
class BruteForceBR:
    value: float
    plans: tuple[PurePlan, ...]


def brute_force_best_response(g: GameTree, r_n: RealizationPlan, cap: int = DEFAULT_CAP,
                              chunk: int = 4096) -> BruteForceBR:
    """Best pure joint team strategy against ``r_n`` by exhaustive evaluation."""
    cats = catalogs(g, cap)
    total = math.prod(len(c) for c in cats)
    if total > cap:
        raise TooLarge(f"{total} joint pure team strategies exceed the cap {cap}")
    t = len(cats)
    seqs = g.leaf_seqs
    base = g.leaf_chance * g.leaf_payoff * r_n.probs[seqs[:, g.adversary]]
    first, last = cats[0], cats[-1]
    shape = (g.n_sequences(0), g.n_sequences(t - 1))
    best_val, best_idx = -math.inf, None
    for mid in itertools.product(*(range(len(c)) for c in cats[1:-1])):
        w = base.copy()
        for i, k in enumerate(mid, start=1):
            w *= cats[i].matrix[k, seqs[:, i]]
        G = _grid(g, seqs[:, 0], seqs[:, t - 1], w, shape)
        right = G @ last.matrix.T
        for start in range(0, len(first), chunk):
            vals = first.matrix[start:start + chunk] @ right
            k = int(np.argmax(vals))
            a, b = divmod(k, vals.shape[1])
            if vals[a, b] > best_val + 1e-12:
                best_val, best_idx = float(vals[a, b]), (start + a,) + mid + (b,)
    plans = tuple(cats[i].plan(k) for i, k in enumerate(best_idx))
    return BruteForceBR(best_val, plans)


# -- adversary best response ------------------------------------------------------

def adversary_best_response_to_payoff(g: GameTree, payoff: np.ndarray) -> tuple[float, PurePlan]:
    """Adversary plan minimizing ``payoff @ r_n``; payoff is indexed by adversary sequence."""
    adv = g.adversary
    infosets = g.infosets[adv]
    cont = np.asarray(payoff, dtype=np.float64).copy()  # value of playing s, including what follows
    best = np.zeros(len(infosets))
    choice = np.zeros(len(infosets), dtype=np.int64)
    # infosets are discovered parents first, so reverse order is bottom-up
    for I in reversed(infosets):
        vals = cont[I.first_sequence:I.first_sequence + len(I.actions)]
        a = int(np.argmin(vals))
        best[I.index], choice[I.index] = vals[a], a
        cont[I.parent_sequence] += vals[a]
    probs = np.zeros(g.n_sequences(adv))
    probs[0] = 1.0
    for I in infosets:
        if probs[I.parent_sequence] == 1.0:
            probs[I.first_sequence + choice[I.index]] = 1.0
    return float(cont[0]), PurePlan(adv, probs)


def adversary_best_response(g: GameTree, columns: Sequence[HybridColumn],
                            weights: Sequence[float] | None = None) -> tuple[float, PurePlan]:
    """Adversary's optimal counter to a mixture of hybrid columns (min over its plans of U_T)."""
    if weights is None:
        weights = np.full(len(columns), 1.0 / len(columns))
    return adversary_best_response_to_payoff(g, mixture_payoff(columns, weights))


# -- brute-force TMECor -----------------------------------------------------------

@dataclass
class BruteForceResult:
    value: float
    columns: list           # HybridColumn per supported strategy
    weights: np.ndarray
    method: str
    n_strategies: int

    @property
    def support_size(self) -> int:
        return int(np.sum(self.weights > 1e-9))


def _adversary_rows(g: GameTree) -> tuple[sp.csr_matrix, int]:
    """Rows ``v(I(s)) - sum_{I' after s} v(I')`` over variables (v_root, v_I...)."""
    adv = g.adversary
    n_inf = g.n_infosets(adv)
    rows, cols, vals = [], [], []
    seq_infoset = g.seq_infoset[adv]
    for s in range(g.n_sequences(adv)):
        rows.append(s)
        cols.append(0 if s == 0 else 1 + int(seq_infoset[s]))
        vals.append(1.0)
    for I in g.infosets[adv]:
        rows.append(I.parent_sequence)
        cols.append(1 + I.index)
        vals.append(-1.0)
    m = sp.csr_matrix((vals, (rows, cols)), shape=(g.n_sequences(adv), 1 + n_inf))
    return m, 1 + n_inf


def _highs(c, A_ub, b_ub, A_eq, b_eq, bounds):
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status != 0:
        raise SolverFailure(f"brute-force LP failed: {res.message}", res.status)
    return res


def _normal_form_payoffs(g: GameTree, cats) -> np.ndarray:
    """``U[joint strategy, adversary sequence]`` for every joint pure team strategy."""
    t = len(cats)
    seqs = g.leaf_seqs
    n_adv = g.n_sequences(g.adversary)
    base = g.leaf_chance * g.leaf_payoff
    shape = (g.n_sequences(0), g.n_sequences(t - 1))
    blocks = []
    for mid in itertools.product(*(range(len(c)) for c in cats[1:-1])):
        w = base.copy()
        for i, k in enumerate(mid, start=1):
            w *= cats[i].matrix[k, seqs[:, i]]
        # one (first x last) block per adversary sequence
        block = np.empty((len(cats[0]), len(cats[-1]), n_adv))
        for s in range(n_adv):
            mask = seqs[:, g.adversary] == s
            G = _grid(g, seqs[mask, 0], seqs[mask, t - 1], w[mask], shape)
            block[:, :, s] = cats[0].matrix @ G @ cats[-1].matrix.T
        blocks.append(block)
    # order: first player slowest, then middle combos, then last player
    stacked = np.stack(blocks, axis=1)  # (first, mid, last, adv)
    return stacked.reshape(-1, n_adv)


def _solve_normal(g: GameTree, cats) -> BruteForceResult:
    U = _normal_form_payoffs(g, cats)
    n_cols = len(U)
    head, n_v = _adversary_rows(g)
    A_ub = sp.hstack([head, sp.csr_matrix(-U.T)]).tocsr()
    b_ub = np.zeros(A_ub.shape[0])
    A_eq = sp.hstack([sp.csr_matrix((1, n_v)), sp.csr_matrix(np.ones((1, n_cols)))]).tocsr()
    c = np.zeros(n_v + n_cols)
    c[0] = -1.0
    bounds = [(None, None)] * n_v + [(0, None)] * n_cols
    res = _highs(c, A_ub, b_ub, A_eq, [1.0], bounds)
    x = res.x[n_v:]
    support = np.flatnonzero(x > 1e-12)
    sizes = [len(c) for c in cats]
    columns = []
    for k in support:
        idx = np.unravel_index(k, sizes[:1] + sizes[1:-1] + sizes[-1:]) if len(sizes) > 1 else (k,)
        plans = [cats[i].plan(int(j)) for i, j in enumerate(idx)]
        columns.append(HybridColumn.from_plans(g, plans[0], plans[1:], check=False))
    return BruteForceResult(-res.fun, columns, x[support], "normal", n_cols)


def _solve_hybrid(g: GameTree, cats) -> BruteForceResult:
    """Normal form for members 1.., sequence form for member 0, mixture weights folded in.

    Variables ``z[k, s]`` stand for ``x_k * r0_k(s)``; each block obeys the
    flow constraints scaled by ``x_k = z[k, empty]``.
    """
    rest = cats[1:]
    seqs = g.leaf_seqs
    adv = g.adversary
    n0 = g.n_sequences(0)
    n_adv = g.n_sequences(adv)
    base = g.leaf_chance * g.leaf_payoff
    combos = list(itertools.product(*(range(len(c)) for c in rest)))
    K = len(combos)
    head, n_v = _adversary_rows(g)

    blocks = []
    for combo in combos:
        w = base.copy()
        for i, k in enumerate(combo, start=1):
            w *= rest[i - 1].matrix[k, seqs[:, i]]
        blocks.append(sp.csr_matrix(_grid(g, seqs[:, adv], seqs[:, 0], w, (n_adv, n0))))
    payoff = sp.hstack(blocks).tocsr()  # (n_adv, K * n0), column k*n0 + s
    A_ub = sp.hstack([head, -payoff]).tocsr()
    b_ub = np.zeros(n_adv)

    # flow rows per block; root: sum_k z[k, 0] = 1
    flow_rows, flow_cols, flow_vals = [], [], []
    infosets0 = g.infosets[0]
    n_flow = len(infosets0)
    for k in range(K):
        off = n_v + k * n0
        for I in infosets0:
            r = k * n_flow + I.index
            for s in I.sequences:
                flow_rows.append(r)
                flow_cols.append(off + s)
                flow_vals.append(1.0)
            flow_rows.append(r)
            flow_cols.append(off + I.parent_sequence)
            flow_vals.append(-1.0)
    n_vars = n_v + K * n0
    flow = sp.csr_matrix((flow_vals, (flow_rows, flow_cols)), shape=(K * n_flow, n_vars))
    root = sp.csr_matrix((np.ones(K), (np.zeros(K, dtype=np.int64), n_v + np.arange(K) * n0)),
                         shape=(1, n_vars))
    A_eq = sp.vstack([flow, root]).tocsr()
    b_eq = np.zeros(A_eq.shape[0])
    b_eq[-1] = 1.0
    c = np.zeros(n_vars)
    c[0] = -1.0
    bounds = [(None, None)] * n_v + [(0, None)] * (K * n0)
    res = _highs(c, A_ub, b_ub, A_eq, b_eq, bounds)
    z = res.x[n_v:].reshape(K, n0)
    weights = z[:, 0]
    support = np.flatnonzero(weights > 1e-12)
    columns = []
    for k in support:
        r0 = RealizationPlan(0, np.clip(z[k] / weights[k], 0.0, 1.0))
        plans = [rest[i].plan(j) for i, j in enumerate(combos[k])]
        columns.append(HybridColumn.from_plans(g, r0, plans, check=False))
    return BruteForceResult(-res.fun, columns, weights[support], "hybrid", K)


def _solve_priced(g: GameTree, cats, tol: float = 1e-10, max_rounds: int = 10_000) -> BruteForceResult:
    """Same LP as ``normal`` with columns brought in only when they price out.

    Every round prices the complete joint strategy set exhaustively (by
    :func:`brute_force_best_response`), so at termination no omitted column
    has a positive reduced cost and the value is that of the full LP.
    """
    head, n_v = _adversary_rows(g)
    adv = g.adversary
    n_adv = g.n_sequences(adv)
    first = [c.plan(0) for c in cats]
    columns = [HybridColumn.from_plans(g, first[0], first[1:], check=False)]
    keys = {columns[0].key}
    for _ in range(max_rounds):
        U = np.array([c.payoff for c in columns])
        A_ub = sp.hstack([head, sp.csr_matrix(-U.T)]).tocsr()
        A_eq = sp.hstack([sp.csr_matrix((1, n_v)), sp.csr_matrix(np.ones((1, len(columns))))]).tocsr()
        c = np.zeros(n_v + len(columns))
        c[0] = -1.0
        bounds = [(None, None)] * n_v + [(0, None)] * len(columns)
        res = _highs(c, A_ub, np.zeros(n_adv), A_eq, [1.0], bounds)
        value = -res.fun
        # ineqlin marginals are d(-v)/d(b); their negation is the adversary plan
        y = np.clip(-res.ineqlin.marginals, 0.0, None)
        y = y / y[0]
        br = brute_force_best_response(g, RealizationPlan(adv, y), cap=math.inf)
        if br.value <= value + tol:
            x = res.x[n_v:]
            keep = np.flatnonzero(x > 1e-12)
            return BruteForceResult(value, [columns[k] for k in keep], x[keep], "priced",
                                    math.prod(len(c) for c in cats))
        col = HybridColumn.from_plans(g, br.plans[0], br.plans[1:], check=False)
        if col.key in keys:
            raise SolverFailure("exhaustive pricing repeated a column; LP duals are inaccurate")
        keys.add(col.key)
        columns.append(col)
    raise SolverFailure(f"exhaustive pricing did not finish in {max_rounds} rounds")


def brute_force_tmecor(g: GameTree, cap: int = DEFAULT_CAP, method: str = "auto") -> BruteForceResult:
    """Exact TMECor value by solving the master LP over a complete strategy set.

    ``normal`` uses every joint pure team strategy as a column.  ``hybrid``
    enumerates joint pure strategies of members 1.. only and leaves member 0
    in sequence form, which is realization-equivalent.  ``priced`` solves the
    ``normal`` LP by pricing the complete joint set exhaustively each round
    and only materializing the columns that enter; it is the one that keeps
    3K4-sized games tractable.  ``auto`` prefers ``normal`` while it fits
    under ``cap`` and falls back to ``priced``.
    """
    counts = [count_reduced_plans(g, i) for i in g.team]
    joint = math.prod(counts)
    rest = math.prod(counts[1:])
    if method == "auto":
        method = "normal" if joint <= cap else "priced"
    if method == "priced":
        if rest > cap:
            raise TooLarge(f"{rest} joint pure strategies of members 1.. exceed the cap {cap}")
        return _solve_priced(g, catalogs(g, cap))
    if method == "normal":
        if joint > cap:
            raise TooLarge(f"{joint} joint pure team strategies exceed the cap {cap}")
        return _solve_normal(g, catalogs(g, cap))
    if method == "hybrid":
        if rest > cap:
            raise TooLarge(f"{rest} joint pure strategies of members 1.. exceed the cap {cap}")
        return _solve_hybrid(g, catalogs(g, cap))
    raise ValueError(f"unknown method {method!r}")


# -- realization equivalence -------------------------------------------------------

def team_reach(g: GameTree, strategy) -> np.ndarray:
    """Team reach probability of every leaf under a team strategy.

    ``strategy`` is a :class:`HybridColumn`, or an iterable of
    ``(weight, item)`` pairs where ``item`` is a column or a tuple of one
    plan per team member.
    """
    if isinstance(strategy, HybridColumn):
        return strategy.team_reach(g)
    out = np.zeros(g.n_leaves)
    for weight, item in strategy:
        if isinstance(item, HybridColumn):
            out += weight * item.team_reach(g)
        else:
            plans = tuple(item)
            out += weight * team_leaf_reach(g, plans[0], plans[1:])
    return out


def check_realization_equivalence(g: GameTree, a, b, tol: float = EQUIVALENCE_TOL) -> bool:
    return bool(np.all(np.abs(team_reach(g, a) - team_reach(g, b)) <= tol))


def plan_to_mixture(g: GameTree, plan: RealizationPlan, cap: int = DEFAULT_CAP) -> list[tuple[float, PurePlan]]:
    """Mixed strategy over reduced pure plans realizing ``plan`` (behavioral product weights)."""
    p = plan.player
    probs = plan.probs
    beta = np.ones(len(probs))
    for I in g.infosets[p]:
        parent = probs[I.parent_sequence]
        for s in I.sequences:
            beta[s] = probs[s] / parent if parent > 0 else 1.0 / len(I.actions)
    cat = NormalFormCatalog(g, p, cap)
    weights = np.prod(np.where(cat.matrix > 0, beta, 1.0), axis=1)
    return [(float(w), cat.plan(k)) for k, w in enumerate(weights) if w > 0]


# -- certification -----------------------------------------------------------------

@dataclass
class ExploitabilityReport:
    value: float            # U_T(team mixture, adversary plan)
    team_best: float        # best team response value against the adversary plan
    adversary_best: float   # team value under the adversary's best response to the mixture
    team_gain: float
    adversary_gain: float
    certified_epsilon: float

    def to_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in
                ("value", "team_best", "adversary_best", "team_gain", "adversary_gain", "certified_epsilon")}


def exploitability(g: GameTree, columns: Sequence[HybridColumn], weights: Iterable[float],
                   adversary_plan: RealizationPlan, team_best_value: float) -> ExploitabilityReport:
    weights = np.asarray(list(weights), dtype=np.float64)
    u = float(mixture_payoff(columns, weights) @ adversary_plan.probs)
    adv_val, _ = adversary_best_response(g, columns, weights)
    team_gain = team_best_value - u
    adversary_gain = u - adv_val
    return ExploitabilityReport(u, team_best_value, adv_val, team_gain, adversary_gain,
                                max(team_gain, adversary_gain))


def certify(g: GameTree, columns: Sequence[HybridColumn], weights: Iterable[float],
            adversary_plan: RealizationPlan, backend=None, oracle: str = "art") -> ExploitabilityReport:
    """Both unilateral gains of a team mixture / adversary plan profile."""
    from .bro import oracle_for

    best = oracle_for(g, oracle, backend).solve(adversary_plan)
    return exploitability(g, columns, weights, adversary_plan, best.value)
