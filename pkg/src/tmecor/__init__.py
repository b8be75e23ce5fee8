"""Team-maxmin equilibria with a coordination device (TMECor) for extensive-form games."""

from .bro import ArtOracle, BroSolution, C18Oracle, WVariableTable, build_bro_milp, c18_oracle, solve_bro
from .cmb import CmbConfig, CmbResult, initial_column, run_cmb
from .estimator import TMECorSolver
from .exceptions import (DidNotConverge, DimensionMismatch, InvalidGame, InvalidParams,
                         NumericalFailure, NumericalStall, ReconstructionMismatch, SolverFailure,
                         TMECorError, TooLarge)
from .game import GameTree, build_game, game_from_dict, game_to_dict, validate_game
from .master import HybridColumn, MasterSolution, solve_core_lp
from .poker import build_kuhn, build_leduc
from .sequence_form import PurePlan, RealizationPlan, validate_plan
from .verify import (ExploitabilityReport, adversary_best_response, brute_force_best_response,
                     brute_force_tmecor, certify, check_realization_equivalence)

__version__ = "0.1.0"

__all__ = [
    "ArtOracle", "BroSolution", "C18Oracle", "WVariableTable", "build_bro_milp", "c18_oracle", "solve_bro",
    "CmbConfig", "CmbResult", "initial_column", "run_cmb", "TMECorSolver",
    "DidNotConverge", "DimensionMismatch", "InvalidGame", "InvalidParams", "NumericalFailure",
    "NumericalStall", "ReconstructionMismatch", "SolverFailure", "TMECorError", "TooLarge",
    "GameTree", "build_game", "game_from_dict", "game_to_dict", "validate_game",
    "HybridColumn", "MasterSolution", "solve_core_lp", "build_kuhn", "build_leduc",
    "PurePlan", "RealizationPlan", "validate_plan",
    "ExploitabilityReport", "adversary_best_response", "brute_force_best_response",
    "brute_force_tmecor", "certify", "check_realization_equivalence",
]
