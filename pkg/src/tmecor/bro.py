"""Team best-response oracles against a fixed adversary realization plan.

``ArtOracle`` linearizes the multilinear best-response program exactly: one
continuous plan for team player 0, binary plans for the other members, and
one auxiliary ``w`` per team joint sequence standing for the product of the
members' realization probabilities.  Each ``w`` is pinned to that product by
the MR inequalities

    w <= r_i(s_i)                       for every member i >= 1
    0 <= r_0(s_0) - w <= (n-2) - sum_{i>=1} r_i(s_i)

and the associated constraints ``w(s) = sum_a w(s with s_i -> s_i a)`` (one
per team infoset and joint sequence reaching it) mirror the flow equations
in joint-sequence space, which tightens the LP relaxation.

``C18Oracle`` is the leaf-binary baseline: one binary per leaf bounded by
each member's reach, with payoffs shifted to be positive.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import ReconstructionMismatch, SolverFailure
from .game import GameTree
from .master import HybridColumn
from .milp import EQ, GE, LE, LinearModel, Status, get_backend
from .sequence_form import PurePlan, RealizationPlan, clean_plan, validate_plan

INTEGRALITY_TOL = 1e-6
RECONSTRUCTION_TOL = 1e-6

JointSequence = tuple  # tuple of per-team-player sequence ids


@dataclass
class BroSolution:
    value: float               # recomputed U_T(column, r_n)
    column: HybridColumn
    milp_objective: float
    best_bound: float
    nodes: int = 0
    iterations: int = 0


def enumerate_joint_sequences(g: GameTree) -> dict[tuple[int, int], list[JointSequence]]:
    """``(player, infoset) -> team joint sequences reaching that infoset``, in first-seen order."""
    cached = g._cache.get("joint_sequences")
    if cached is not None:
        return cached
    k = g.n_players - 1
    out = {}
    for i in g.team:
        for I in g.infosets[i]:
            rows = g.node_seqs[list(I.members), :k]
            seen = dict.fromkeys(tuple(int(s) for s in row) for row in rows)
            out[(i, I.index)] = list(seen)
    g._cache["joint_sequences"] = out
    return out


class WVariableTable:
    """Joint sequences that need a ``w`` variable, with their associated constraints.

    Entries are, in order: every leaf's team joint sequence, then every joint
    sequence reaching a team infoset, then the one-action extensions used by
    the associated constraints.
    """

    def __init__(self, g: GameTree):
        self.g = g
        self.index: dict[JointSequence, int] = {}
        k = g.n_players - 1
        leaf_rows = g.leaf_seqs[:, :k]
        self.leaf_w = np.empty(g.n_leaves, dtype=np.int64)
        for l, row in enumerate(leaf_rows):
            self.leaf_w[l] = self._add(tuple(int(s) for s in row))
        self.associated: list[tuple[int, list[int], tuple[int, int]]] = []
        joint = enumerate_joint_sequences(g)
        for (i, j), seqs in joint.items():
            I = g.infosets[i][j]
            for sigma in seqs:
                head = self._add(sigma)
                parts = []
                for s in I.sequences:
                    ext = sigma[:i] + (s,) + sigma[i + 1:]
                    parts.append(self._add(ext))
                self.associated.append((head, parts, (i, j)))
        self.joint = list(self.index)

    def _add(self, sigma: JointSequence) -> int:
        idx = self.index.get(sigma)
        if idx is None:
            idx = len(self.index)
            self.index[sigma] = idx
        return idx

    def __len__(self) -> int:
        return len(self.index)

    def __contains__(self, sigma) -> bool:
        return tuple(sigma) in self.index

    def label(self, w: int) -> str:
        g = self.g
        return "w(" + "|".join(g.seq_labels[i][s] for i, s in enumerate(self.joint[w])) + ")"

    def dump_associated(self) -> list[str]:
        """One text line per associated constraint, e.g. ``w(a|b|c) = w(a'|b|c) + w(a''|b|c)``."""
        return [f"{self.label(h)} = " + " + ".join(self.label(p) for p in parts)
                for h, parts, _ in self.associated]

    def products(self, plans: Sequence[RealizationPlan]) -> np.ndarray:
        """Value of every ``w`` when it equals the product of the members' probabilities."""
        arr = np.array(self.joint, dtype=np.int64).reshape(len(self.joint), -1)
        out = np.ones(len(arr))
        for i, plan in enumerate(plans):
            out *= plan.probs[arr[:, i]]
        return out


class _TeamVars:
    """Variable ids of the team plans inside a model."""

    def __init__(self, m: LinearModel, g: GameTree, continuous_first: bool):
        self.r = []
        for i in g.team:
            binary = not (continuous_first and i == 0)
            ids = [m.add_variable(f"r{i}[{lbl}]", 0.0, 1.0, binary=binary) for lbl in g.seq_labels[i]]
            m.lower[ids[0]] = 1.0  # r_i(empty) = 1
            self.r.append(np.asarray(ids, dtype=np.int64))
        for i in g.team:
            for I in g.infosets[i]:
                cols = [int(self.r[i][s]) for s in I.sequences] + [int(self.r[i][I.parent_sequence])]
                vals = [1.0] * len(I.actions) + [-1.0]
                m.add_constraint((cols, vals), EQ, 0.0, name=f"flow{i}[{I.key}]")


def _validate_adversary(g: GameTree, r_n: RealizationPlan) -> np.ndarray:
    if r_n.player != g.adversary:
        raise ValueError(f"plan belongs to player {r_n.player}, adversary is {g.adversary}")
    if not validate_plan(r_n, g, tol=1e-7):
        raise ValueError("adversary plan violates the flow constraints")
    return r_n.probs


def _read_pure(g: GameTree, i: int, x: np.ndarray) -> PurePlan:
    if np.any(np.abs(x - np.round(x)) > INTEGRALITY_TOL):
        raise SolverFailure(f"binary plan of player {i} is not integral within {INTEGRALITY_TOL}")
    plan = PurePlan(i, (x >= 0.5).astype(np.float64))
    if not validate_plan(plan, g):
        raise SolverFailure(f"rounded plan of player {i} violates the flow constraints")
    return plan


def _leaf_objective(g: GameTree, r_n: np.ndarray) -> np.ndarray:
    return g.leaf_payoff * g.leaf_chance * r_n[g.leaf_seqs[:, g.adversary]]


class ArtOracle:
    """Best-response MILP built once per game; only the objective changes between calls."""

    def __init__(self, g: GameTree, backend=None, associated: bool = True):
        self.g = g
        self.backend = get_backend(backend)
        self.associated = associated
        self.table = WVariableTable(g)
        self.model = self._build()
        self._warm = None

    def _build(self) -> LinearModel:
        g, table = self.g, self.table
        n = g.n_players
        m = LinearModel(f"bro_art[{g.name}]")
        tv = _TeamVars(m, g, continuous_first=True)
        self.r = tv.r
        self.w = np.array([m.add_variable(table.label(k), 0.0, 1.0) for k in range(len(table))],
                          dtype=np.int64)
        for k, sigma in enumerate(table.joint):
            w = int(self.w[k])
            r0 = int(tv.r[0][sigma[0]])
            rest = [int(tv.r[i][sigma[i]]) for i in range(1, n - 1)]
            for ri in rest:
                m.add_constraint(([w, ri], [1.0, -1.0]), LE, 0.0)
            m.add_constraint(([r0, w], [1.0, -1.0]), GE, 0.0)
            m.add_constraint(([r0, w] + rest, [1.0, -1.0] + [1.0] * len(rest)), LE, float(n - 2))
        if self.associated:
            for head, parts, (i, j) in table.associated:
                cols = [int(self.w[head])] + [int(self.w[p]) for p in parts]
                m.add_constraint((cols, [1.0] + [-1.0] * len(parts)), EQ, 0.0)
        m.set_objective({}, "max")
        return m

    def set_adversary(self, r_n: RealizationPlan) -> LinearModel:
        probs = _validate_adversary(self.g, r_n)
        leaf_obj = _leaf_objective(self.g, probs)
        w_obj = np.bincount(self.table.leaf_w, weights=leaf_obj, minlength=len(self.table))
        obj = np.zeros(self.model.n_vars)
        obj[self.w] = w_obj
        self.model.set_objective(obj, "max")
        return self.model

    def solve(self, r_n: RealizationPlan, abs_gap: float = 1e-8, node_limit: int = 100_000) -> BroSolution:
        g = self.g
        model = self.set_adversary(r_n)
        res = self.backend.solve_milp(model, abs_gap=abs_gap, node_limit=node_limit, warm_start=self._warm)
        if res.status is not Status.OPTIMAL:
            raise SolverFailure(f"best-response MILP ended with status {res.status.value}", res.status)
        if res.basis is not None:
            self._warm = res.basis
        x = res.primal
        r0 = RealizationPlan(0, clean_plan(g, 0, x[self.r[0]]))
        rest = [_read_pure(g, i, x[self.r[i]]) for i in range(1, g.n_players - 1)]
        column = HybridColumn.from_plans(g, r0, rest, check=False)
        value = column.value_against(r_n)
        if abs(value - res.objective_value) > RECONSTRUCTION_TOL:
            raise ReconstructionMismatch(res.objective_value, value)
        return BroSolution(value, column, res.objective_value, res.best_bound, res.nodes, res.iterations)


class C18Oracle:
    """Leaf-binary best-response MILP with positively shifted payoffs.

    Team plans are binary as well; with continuous plans the relaxation is
    the same but branching only on leaf indicators is far slower.
    """

    def __init__(self, g: GameTree, backend=None):
        self.g = g
        self.backend = get_backend(backend)
        self.n_leaf_binaries = g.n_leaves
        self.shift = 1.0 - float(g.leaf_payoff.min())
        self.model = self._build()
        self._warm = None

    def _build(self) -> LinearModel:
        g = self.g
        m = LinearModel(f"bro_c18[{g.name}]")
        tv = _TeamVars(m, g, continuous_first=False)
        self.r = tv.r
        self.y = np.array([m.add_variable(f"y{l}", 0.0, 1.0, binary=True) for l in range(g.n_leaves)],
                          dtype=np.int64)
        for l in range(g.n_leaves):
            y = int(self.y[l])
            for i in g.team:
                m.add_constraint(([y, int(tv.r[i][g.leaf_seqs[l, i]])], [1.0, -1.0]), LE, 0.0)
        m.set_objective({}, "max")
        return m

    def set_adversary(self, r_n: RealizationPlan) -> LinearModel:
        probs = _validate_adversary(self.g, r_n)
        g = self.g
        coef = (g.leaf_payoff + self.shift) * g.leaf_chance * probs[g.leaf_seqs[:, g.adversary]]
        obj = np.zeros(self.model.n_vars)
        obj[self.y] = coef
        self.model.set_objective(obj, "max")
        return self.model

    def solve(self, r_n: RealizationPlan, abs_gap: float = 1e-8, node_limit: int = 100_000) -> BroSolution:
        g = self.g
        model = self.set_adversary(r_n)
        res = self.backend.solve_milp(model, abs_gap=abs_gap, node_limit=node_limit, warm_start=self._warm)
        if res.status is not Status.OPTIMAL:
            raise SolverFailure(f"C18 MILP ended with status {res.status.value}", res.status)
        if res.basis is not None:
            self._warm = res.basis
        y = np.round(res.primal[self.y])
        plans = [_read_pure(g, i, res.primal[self.r[i]]) for i in g.team]
        column = HybridColumn.from_plans(g, plans[0], plans[1:], check=False)
        value = column.value_against(r_n)
        # the shifted objective counts every selected leaf; reached leaves with zero
        # adversary mass contribute nothing either way
        expected = res.objective_value - self.shift * float(
            (g.leaf_chance * r_n.probs[g.leaf_seqs[:, g.adversary]] * y).sum())
        if abs(value - expected) > RECONSTRUCTION_TOL:
            raise ReconstructionMismatch(expected, value)
        return BroSolution(value, column, res.objective_value - self.shift, res.best_bound - self.shift,
                           res.nodes, res.iterations)


def oracle_for(g: GameTree, kind: str = "art", backend=None, associated: bool = True):
    """Cached oracle instance per (game, kind, backend)."""
    backend = get_backend(backend)
    key = ("oracle", kind, backend.name, associated)
    oracle = g._cache.get(key)
    if oracle is None:
        if kind == "art":
            oracle = ArtOracle(g, backend, associated=associated)
        elif kind == "c18":
            oracle = C18Oracle(g, backend)
        else:
            raise ValueError(f"unknown oracle {kind!r}")
        g._cache[key] = oracle
    return oracle


def build_bro_milp(g: GameTree, r_n: RealizationPlan, associated: bool = True) -> LinearModel:
    """Fresh best-response MILP for ``r_n``."""
    return ArtOracle(g, "builtin", associated=associated).set_adversary(r_n)


def solve_bro(g: GameTree, r_n: RealizationPlan, abs_gap: float = 1e-8, backend=None,
              associated: bool = True) -> BroSolution:
    return oracle_for(g, "art", backend, associated).solve(r_n, abs_gap=abs_gap)


def c18_oracle(g: GameTree, r_n: RealizationPlan, abs_gap: float = 1e-8, backend=None) -> BroSolution:
    return oracle_for(g, "c18", backend).solve(r_n, abs_gap=abs_gap)
