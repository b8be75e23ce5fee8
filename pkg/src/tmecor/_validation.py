"""Input checks shared by the estimator and the CLI."""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionMismatch, InvalidGame, InvalidParams
from .game import GameTree, validate_game
from .sequence_form import FLOW_TOL, PurePlan, RealizationPlan, validate_plan


def check_game(g) -> GameTree:
    """Return ``g`` if it is a valid team game, otherwise raise InvalidGame."""
    if not isinstance(g, GameTree):
        raise InvalidParams(f"expected a GameTree, got {type(g).__name__}")
    report = validate_game(g)
    if not report.ok:
        raise InvalidGame("; ".join(str(v) for v in report))
    return g


def check_plan(g: GameTree, plan, player: int | None = None, tol: float = FLOW_TOL) -> RealizationPlan:
    """Coerce ``plan`` (a RealizationPlan or an array) and check the flow constraints."""
    if not isinstance(plan, RealizationPlan):
        if player is None:
            raise InvalidParams("player is required when the plan is a bare array")
        probs = np.asarray(plan, dtype=np.float64)
        if probs.ndim != 1:
            raise DimensionMismatch(f"plan must be one-dimensional, got shape {probs.shape}")
        plan = RealizationPlan(player, probs)
    elif player is not None and plan.player != player:
        raise InvalidParams(f"plan belongs to player {plan.player}, expected {player}")
    if len(plan.probs) != g.n_sequences(plan.player):
        raise DimensionMismatch(
            f"plan has {len(plan.probs)} entries, player {plan.player} has {g.n_sequences(plan.player)} sequences")
    if not np.all(np.isfinite(plan.probs)):
        raise InvalidParams("plan contains non-finite entries")
    if not validate_plan(plan, g, tol):
        raise InvalidParams(f"plan for player {plan.player} violates the flow constraints")
    return plan


def check_pure_plan(g: GameTree, plan, player: int | None = None) -> PurePlan:
    plan = check_plan(g, plan, player)
    if not isinstance(plan, PurePlan):
        if not plan.is_pure:
            raise InvalidParams(f"plan for player {plan.player} is not pure")
        plan = PurePlan(plan.player, plan.probs)
    return plan
