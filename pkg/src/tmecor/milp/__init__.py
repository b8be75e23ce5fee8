"""LP/MILP engine: model container, builtin simplex and branch-and-bound, HiGHS adapter."""

from .backends import BuiltinBackend, HighsBackend, get_backend
from .model import EQ, GE, LE, LinearModel, SolveResult, Status

__all__ = [
    "EQ", "GE", "LE", "LinearModel", "SolveResult", "Status",
    "BuiltinBackend", "HighsBackend", "get_backend",
]
