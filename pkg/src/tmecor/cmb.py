"""Column generation with a multilinear best-response oracle.

Each iteration solves the restricted master over the current hybrid
columns, which yields a lower bound and an adversary plan; the oracle's best
response to that plan yields an upper bound and the next column.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .bro import oracle_for
from .exceptions import DidNotConverge, InvalidParams, NumericalStall
from .game import GameTree
from .master import HybridColumn, MasterSolution, solve_core_lp
from .milp import get_backend
from .sequence_form import RealizationPlan, first_action_plan

log = logging.getLogger(__name__)

CONVERGENCE_TOL = 1e-7
SUPPORT_TOL = 1e-9


@dataclass
class CmbConfig:
    epsilon: float = 0.0
    max_iterations: int = 500
    convergence_tol: float = CONVERGENCE_TOL
    oracle: str = "art"
    backend: object = None
    associated_constraints: bool = True
    node_limit: int = 100_000
    time_limit: float | None = None

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise InvalidParams(f"epsilon must be >= 0, got {self.epsilon}")
        if not self.convergence_tol > 0:
            raise InvalidParams(f"convergence_tol must be > 0, got {self.convergence_tol}")
        if self.max_iterations < 1:
            raise InvalidParams(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.oracle not in ("art", "c18"):
            raise InvalidParams(f"unknown oracle {self.oracle!r}")

    @property
    def threshold(self) -> float:
        return max(self.epsilon, self.convergence_tol)

    @property
    def oracle_gap(self) -> float:
        return min(1e-8, self.epsilon / 4) if self.epsilon > 0 else 1e-8


@dataclass
class CmbResult:
    value: float
    columns: list
    mixture: np.ndarray
    adversary_plan: RealizationPlan
    iterations: int
    bound_trace: list              # (lower, upper) per iteration
    converged: bool
    wall_times: dict = field(default_factory=dict)
    duality_gaps: list = field(default_factory=list)
    dual_fallbacks: int = 0

    @property
    def support_size(self) -> int:
        return int(np.sum(self.mixture > SUPPORT_TOL))

    @property
    def gap(self) -> float:
        lo, up = self.bound_trace[-1]
        return up - lo

    @property
    def upper_bound(self) -> float:
        return self.bound_trace[-1][1]


def initial_column(g: GameTree) -> HybridColumn:
    """Every team member plays the first action at each infoset it reaches."""
    plans = [first_action_plan(g, i) for i in g.team]
    return HybridColumn.from_plans(g, plans[0], plans[1:])


def run_cmb(g: GameTree, cfg: CmbConfig | None = None, **overrides) -> CmbResult:
    """Alternate master and oracle until the bound gap closes to ``cfg.threshold``."""
    if cfg is None:
        cfg = CmbConfig(**overrides)
    elif overrides:
        raise TypeError("pass either a CmbConfig or keyword overrides, not both")
    if g.n_players < 3:
        raise InvalidParams("team games need at least three players")
    backend = get_backend(cfg.backend)
    oracle = oracle_for(g, cfg.oracle, backend, cfg.associated_constraints)

    columns = [initial_column(g)]
    keys = {columns[0].key}
    trace: list[tuple[float, float]] = []
    gaps: list[float] = []
    times = {"master": 0.0, "oracle": 0.0}
    fallbacks = 0
    start = time.perf_counter()
    ms: MasterSolution | None = None

    def result(converged: bool) -> CmbResult:
        times["total"] = time.perf_counter() - start
        return CmbResult(ms.value, list(columns[:len(ms.mixture)]), ms.mixture.copy(),
                         ms.adversary_plan, len(trace), list(trace), converged, dict(times),
                         list(gaps), fallbacks)

    for it in range(1, cfg.max_iterations + 1):
        t0 = time.perf_counter()
        ms = solve_core_lp(g, columns, backend)
        t1 = time.perf_counter()
        times["master"] += t1 - t0
        fallbacks += ms.used_dual_fallback
        gaps.append(ms.dual_value - ms.value)

        br = oracle.solve(ms.adversary_plan, abs_gap=cfg.oracle_gap, node_limit=cfg.node_limit)
        times["oracle"] += time.perf_counter() - t1
        upper = br.value
        lower = ms.value
        trace.append((lower, upper))
        log.debug("iteration %d: lower %.10g upper %.10g columns %d", it, lower, upper, len(columns))

        # the oracle's proven bound, not only its incumbent, has to meet the lower bound
        if max(upper, br.best_bound) - lower <= cfg.threshold:
            return result(True)
        if br.column.key in keys:
            raise NumericalStall(
                f"oracle returned an existing column at iteration {it} with gap {upper - lower:.3g}",
                {"iteration": it, "lower": lower, "upper": upper, "trace": list(trace)},
            )
        columns.append(br.column)
        keys.add(br.column.key)
        if cfg.time_limit is not None and time.perf_counter() - start > cfg.time_limit:
            break

    # one more master solve so the returned mixture covers every generated column
    ms = solve_core_lp(g, columns, backend)
    res = result(False)
    raise DidNotConverge(
        f"gap {trace[-1][1] - trace[-1][0]:.3g} still open after {len(trace)} iterations", res)
