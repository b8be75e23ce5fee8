"""Sequences, realization plans and reach probabilities."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .exceptions import DimensionMismatch
from .game import GameTree

FLOW_TOL = 1e-9


class SequenceInfo(NamedTuple):
    player: int
    index: int
    label: str
    infoset: int          # infoset this sequence extends, -1 for the empty sequence
    parent: int           # parent sequence, -1 for the empty sequence


@dataclass(frozen=True, eq=False)
class RealizationPlan:
    """Sequence-form strategy: one probability per sequence of ``player``."""

    player: int
    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    def __len__(self) -> int:
        return len(self.probs)

    def __getitem__(self, seq):
        return self.probs[seq]

    @property
    def is_pure(self) -> bool:
        return bool(np.all((self.probs == 0.0) | (self.probs == 1.0)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, RealizationPlan):
            return NotImplemented
        return self.player == other.player and np.array_equal(self.probs, other.probs)

    def __hash__(self) -> int:
        return hash((self.player, self.probs.tobytes()))

    def to_dict(self) -> dict:
        return {"player": self.player, "probs": [float(x) for x in self.probs]}

    @classmethod
    def from_dict(cls, doc: dict) -> "RealizationPlan":
        probs = np.asarray(doc["probs"], dtype=np.float64)
        if np.all((probs == 0.0) | (probs == 1.0)):
            return PurePlan(int(doc["player"]), probs)
        return cls(int(doc["player"]), probs)


class PurePlan(RealizationPlan):
    """Realization plan with every entry in {0, 1}."""

    def __post_init__(self):
        super().__post_init__()
        if not np.all((self.probs == 0.0) | (self.probs == 1.0)):
            raise ValueError("pure plan entries must be 0 or 1")


def enumerate_sequences(g: GameTree, player: int) -> list[SequenceInfo]:
    """Sequences of ``player`` in topological order (parents first, index 0 is the empty sequence)."""
    labels = g.seq_labels[player]
    infoset = g.seq_infoset[player]
    parent = g.seq_parent[player]
    return [SequenceInfo(player, k, labels[k], int(infoset[k]), int(parent[k]))
            for k in range(len(labels))]


def _check_length(probs: np.ndarray, g: GameTree, player: int) -> None:
    if len(probs) != g.n_sequences(player):
        raise DimensionMismatch(
            f"plan for player {player} has {len(probs)} entries, game has {g.n_sequences(player)} sequences"
        )


def flow_residuals(g: GameTree, player: int, probs: np.ndarray) -> np.ndarray:
    """Residual of every flow equation: the root row, then one per infoset."""
    probs = np.asarray(probs, dtype=np.float64)
    _check_length(probs, g, player)
    infosets = g.infosets[player]
    out = np.empty(len(infosets) + 1)
    out[0] = probs[0] - 1.0
    for I in infosets:
        out[I.index + 1] = probs[I.first_sequence:I.first_sequence + len(I.actions)].sum() - probs[I.parent_sequence]
    return out


def validate_plan(plan: RealizationPlan, g: GameTree, tol: float = FLOW_TOL) -> bool:
    """True iff the plan satisfies the sequence-form flow constraints within ``tol``."""
    probs = plan.probs
    _check_length(probs, g, plan.player)
    if np.any(probs < -tol) or np.any(probs > 1.0 + tol):
        return False
    return bool(np.all(np.abs(flow_residuals(g, plan.player, probs)) <= tol))


def behavioral_to_plan(g: GameTree, player: int, behavior: dict[int, Sequence[float]] | None = None) -> RealizationPlan:
    """Realization plan of a behavioral strategy.

    ``behavior`` maps infoset index to action probabilities; infosets not listed
    play uniformly.
    """
    probs = np.zeros(g.n_sequences(player))
    probs[0] = 1.0
    for I in g.infosets[player]:  # discovery order: parent sequence already set
        k = len(I.actions)
        beta = np.full(k, 1.0 / k) if behavior is None or I.index not in behavior else np.asarray(behavior[I.index], float)
        probs[I.first_sequence:I.first_sequence + k] = probs[I.parent_sequence] * beta
    return RealizationPlan(player, probs)


def uniform_plan(g: GameTree, player: int) -> RealizationPlan:
    return behavioral_to_plan(g, player)


def clean_plan(g: GameTree, player: int, probs: np.ndarray, tiny: float = 1e-12) -> np.ndarray:
    """Project solver output onto exact flow constraints.

    Behavioral probabilities are read off each infoset (negatives clipped) and
    pushed down from the root, so the result satisfies every flow equation up
    to rounding.  Infosets whose parent mass is below ``tiny`` get zero mass.
    """
    raw = np.clip(np.asarray(probs, dtype=np.float64), 0.0, None)
    _check_length(raw, g, player)
    out = np.zeros_like(raw)
    out[0] = 1.0
    for I in g.infosets[player]:
        k = len(I.actions)
        block = raw[I.first_sequence:I.first_sequence + k]
        mass = out[I.parent_sequence]
        total = block.sum()
        if mass <= tiny or total <= tiny:
            if mass > tiny:
                beta = np.zeros(k)
                beta[0] = 1.0
                out[I.first_sequence:I.first_sequence + k] = mass * beta
            continue
        out[I.first_sequence:I.first_sequence + k] = mass * block / total
    return out


def pure_plan_from_choices(g: GameTree, player: int, choose) -> PurePlan:
    """Pure plan choosing ``choose(infoset)`` (an action position) at every reachable infoset."""
    probs = np.zeros(g.n_sequences(player))
    probs[0] = 1.0
    for I in g.infosets[player]:
        if probs[I.parent_sequence] == 1.0:
            probs[I.first_sequence + int(choose(I))] = 1.0
    return PurePlan(player, probs)


def first_action_plan(g: GameTree, player: int) -> PurePlan:
    return pure_plan_from_choices(g, player, lambda I: 0)


def random_pure_plan(g: GameTree, player: int, seed: int) -> PurePlan:
    """Reduced pure strategy picking uniformly random actions at reachable infosets."""
    rng = np.random.default_rng(seed)
    return pure_plan_from_choices(g, player, lambda I: rng.integers(len(I.actions)))


def leaf_reach(g: GameTree, plans: Sequence[RealizationPlan], leaf: int) -> float:
    """``c(l)`` times every player's realization probability of ``seq_i(l)``."""
    if len(plans) != g.n_players:
        raise DimensionMismatch(f"need {g.n_players} plans, got {len(plans)}")
    value = float(g.leaf_chance[leaf])
    for i, plan in enumerate(plans):
        value *= float(plan.probs[g.leaf_seqs[leaf, i]])
    return value


def leaf_reaches(g: GameTree, plans: Sequence[RealizationPlan]) -> np.ndarray:
    """Vectorized :func:`leaf_reach` over all leaves."""
    if len(plans) != g.n_players:
        raise DimensionMismatch(f"need {g.n_players} plans, got {len(plans)}")
    out = g.leaf_chance.copy()
    for i, plan in enumerate(plans):
        _check_length(plan.probs, g, i)
        out *= plan.probs[g.leaf_seqs[:, i]]
    return out


def expected_team_utility(g: GameTree, plans: Sequence[RealizationPlan]) -> float:
    return float(leaf_reaches(g, plans) @ g.leaf_payoff)
