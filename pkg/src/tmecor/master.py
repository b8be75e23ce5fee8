"""Restricted master LP over hybrid-form columns.

A hybrid column pairs a (possibly mixed) realization plan of team player 0
with pure plans of the other team members.  Against an adversary sequence
``s`` its payoff is the chance- and team-weighted utility of the leaves whose
adversary sequence is ``s``; the master LP mixes columns so as to maximize
the value the adversary can hold the team to, written in the adversary's
sequence form.  The row duals are an adversary realization plan.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import SolverFailure
from .game import GameTree
from .milp import LE, EQ, LinearModel, get_backend
from .sequence_form import PurePlan, RealizationPlan, clean_plan, validate_plan

DUAL_TOL = 1e-7
SUPPORT_TOL = 1e-9


def column_payoffs(g: GameTree, r0: RealizationPlan, pure_rest: Sequence[PurePlan]) -> np.ndarray:
    """Payoff of the hybrid strategy ``(r0, pure_rest)`` bucketed by adversary sequence."""
    if len(pure_rest) != g.n_players - 2:
        raise ValueError(f"need {g.n_players - 2} pure plans for the rest of the team, got {len(pure_rest)}")
    w = g.leaf_chance * g.leaf_payoff * r0.probs[g.leaf_seqs[:, 0]]
    for i, plan in enumerate(pure_rest, start=1):
        w = w * plan.probs[g.leaf_seqs[:, i]]
    return np.bincount(g.leaf_seqs[:, g.adversary], weights=w, minlength=g.n_sequences(g.adversary))


def team_leaf_reach(g: GameTree, r0: RealizationPlan, pure_rest: Sequence[PurePlan]) -> np.ndarray:
    """Team part of the reach probability of every leaf (no chance, no adversary)."""
    out = r0.probs[g.leaf_seqs[:, 0]].copy()
    for i, plan in enumerate(pure_rest, start=1):
        out *= plan.probs[g.leaf_seqs[:, i]]
    return out


class HybridColumn:
    """One hybrid-form team strategy together with its payoff vector."""

    __slots__ = ("r0", "pure_rest", "payoff")

    def __init__(self, r0: RealizationPlan, pure_rest: Sequence[PurePlan], payoff: np.ndarray):
        self.r0 = r0
        self.pure_rest = tuple(pure_rest)
        payoff = np.array(payoff, dtype=np.float64)
        payoff.setflags(write=False)
        self.payoff = payoff

    @classmethod
    def from_plans(cls, g: GameTree, r0: RealizationPlan, pure_rest: Sequence[PurePlan],
                   check: bool = True) -> "HybridColumn":
        if check:
            for plan in (r0, *pure_rest):
                if not validate_plan(plan, g):
                    raise ValueError(f"plan for player {plan.player} violates the flow constraints")
        return cls(r0, pure_rest, column_payoffs(g, r0, pure_rest))

    @property
    def key(self) -> bytes:
        return self.payoff.tobytes()

    def value_against(self, r_n: RealizationPlan | np.ndarray) -> float:
        probs = r_n.probs if isinstance(r_n, RealizationPlan) else np.asarray(r_n)
        return float(self.payoff @ probs)

    def team_reach(self, g: GameTree) -> np.ndarray:
        return team_leaf_reach(g, self.r0, self.pure_rest)

    def to_dict(self) -> dict:
        return {"r0": self.r0.to_dict(), "pure_rest": [p.to_dict() for p in self.pure_rest]}

    @classmethod
    def from_dict(cls, g: GameTree, doc: dict) -> "HybridColumn":
        r0 = RealizationPlan.from_dict(doc["r0"])
        rest = [PurePlan(int(p["player"]), p["probs"]) for p in doc["pure_rest"]]
        return cls.from_plans(g, r0, rest)

    def __repr__(self) -> str:
        return f"HybridColumn(pure_r0={self.r0.is_pure}, rest={len(self.pure_rest)})"


@dataclass
class MasterSolution:
    value: float
    mixture: np.ndarray
    adversary_plan: RealizationPlan
    infoset_values: np.ndarray
    dual_value: float = np.nan          # max_f U(f, adversary_plan) over the column set
    used_dual_fallback: bool = False
    lp_iterations: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.mixture > SUPPORT_TOL)


def build_core_lp(g: GameTree, columns: Sequence[HybridColumn]) -> LinearModel:
    """LP over adversary sequence rows; variables: root value, infoset values, then column weights."""
    adv = g.adversary
    infosets = g.infosets[adv]
    m = LinearModel("core_lp")
    root = m.add_variable("v_root", -np.inf, np.inf)
    v_ids = [m.add_variable(f"v[{I.key}]", -np.inf, np.inf) for I in infosets]
    x_ids = [m.add_variable(f"x{k}", 0.0, np.inf) for k in range(len(columns))]
    payoff = np.array([c.payoff for c in columns]).T if columns else np.zeros((g.n_sequences(adv), 0))

    # infosets that follow each adversary sequence
    followers: list[list[int]] = [[] for _ in range(g.n_sequences(adv))]
    for I in infosets:
        followers[I.parent_sequence].append(I.index)
    seq_infoset = g.seq_infoset[adv]

    x_arr = np.asarray(x_ids, dtype=np.int64)
    for s in range(g.n_sequences(adv)):
        coeffs: dict[int, float] = {}
        head = root if s == 0 else v_ids[seq_infoset[s]]
        coeffs[head] = 1.0
        for k in followers[s]:
            coeffs[v_ids[k]] = coeffs.get(v_ids[k], 0.0) - 1.0
        cols = list(coeffs.keys()) + list(x_arr)
        vals = list(coeffs.values()) + list(-payoff[s])
        m.add_constraint((cols, vals), LE, 0.0, name=f"seq[{g.seq_labels[adv][s]}]")
    m.add_constraint((x_arr, np.ones(len(x_arr))), EQ, 1.0, name="convexity")
    m.set_objective({root: 1.0}, "max")
    return m


def _dual_fallback(g: GameTree, columns: Sequence[HybridColumn], backend) -> tuple[np.ndarray, float]:
    """Adversary plan minimizing the best in-set column payoff, by solving that LP directly."""
    adv = g.adversary
    n_seq = g.n_sequences(adv)
    m = LinearModel("core_dual")
    y = [m.add_variable(f"y[{lbl}]", 0.0, 1.0) for lbl in g.seq_labels[adv]]
    z = m.add_variable("z", -np.inf, np.inf)
    m.add_constraint({y[0]: 1.0}, EQ, 1.0, name="root")
    for I in g.infosets[adv]:
        coeffs = {y[s]: 1.0 for s in I.sequences}
        coeffs[y[I.parent_sequence]] = coeffs.get(y[I.parent_sequence], 0.0) - 1.0
        m.add_constraint(coeffs, EQ, 0.0, name=f"flow[{I.key}]")
    for k, col in enumerate(columns):
        m.add_constraint((list(range(n_seq)) + [z], list(col.payoff) + [-1.0]), LE, 0.0, name=f"col{k}")
    m.set_objective({z: 1.0}, "min")
    res = backend.solve_lp(m)
    if not res.optimal:
        raise SolverFailure(f"adversary fallback LP ended with status {res.status.value}", res.status)
    return res.primal[:n_seq], res.objective_value


def solve_core_lp(g: GameTree, columns: Sequence[HybridColumn], backend=None) -> MasterSolution:
    """Solve the restricted master over ``columns``; the adversary plan comes from the row duals."""
    if not columns:
        raise ValueError("the master LP needs at least one column")
    backend = get_backend(backend)
    adv = g.adversary
    model = build_core_lp(g, columns)
    res = backend.solve_lp(model)
    if not res.optimal:
        raise SolverFailure(f"master LP ended with status {res.status.value}", res.status)
    n_inf = g.n_infosets(adv)
    n_seq = g.n_sequences(adv)
    value = float(res.primal[0])
    mixture = np.clip(res.primal[1 + n_inf:], 0.0, None)
    mixture = mixture / mixture.sum()

    y = np.asarray(res.duals[:n_seq], dtype=np.float64).copy()
    fallback = False
    ok = y[0] > 0.5 and np.all(y >= -DUAL_TOL)
    if ok:
        y = np.clip(y, 0.0, None) / y[0]
        ok = validate_plan(RealizationPlan(adv, y), g, tol=DUAL_TOL)
    if not ok:
        y, _ = _dual_fallback(g, columns, backend)
        fallback = True
    plan = RealizationPlan(adv, clean_plan(g, adv, y))
    payoff = np.array([c.payoff for c in columns])
    dual_value = float(np.max(payoff @ plan.probs))
    return MasterSolution(value, mixture, plan, res.primal[1:1 + n_inf].copy(), dual_value,
                          fallback, res.iterations)


def mixture_payoff(columns: Sequence[HybridColumn], weights: np.ndarray) -> np.ndarray:
    """Payoff vector over adversary sequences of a mixture of columns."""
    return np.asarray(weights, dtype=np.float64) @ np.array([c.payoff for c in columns])
