"""Solver-agnostic LP/MILP model and solve result."""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np
import scipy.sparse as sp

LE, EQ, GE = "<=", "=", ">="
_SENSES = (LE, EQ, GE)


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass
class SolveResult:
    status: Status
    objective_value: float = math.nan
    primal: np.ndarray | None = None
    duals: np.ndarray | None = None
    gap: float = 0.0
    best_bound: float = math.nan
    iterations: int = 0
    nodes: int = 0
    basis: Any = None  # backend-specific warm start token

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


class LinearModel:
    """Variables with bounds and integrality marks, sparse linear rows, one objective.

    Rows are appended with :meth:`add_constraint`; the objective can be
    replaced later with :meth:`set_objective` without touching the rows, which
    lets oracles re-solve one structure against many objectives.
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self.var_names: list[str] = []
        self.lower: list[float] = []
        self.upper: list[float] = []
        self.is_binary: list[bool] = []
        self._row_cols: list[np.ndarray] = []
        self._row_vals: list[np.ndarray] = []
        self.senses: list[str] = []
        self.rhs: list[float] = []
        self.row_names: list[str] = []
        self._objective = np.zeros(0)
        self.sense = "max"
        self._matrix = None
        self.version = 0  # bumped on every structural change

    # -- building --------------------------------------------------------------

    def add_variable(self, name: str, lower: float = 0.0, upper: float = math.inf,
                     binary: bool = False) -> int:
        if binary:
            lower, upper = max(lower, 0.0), min(upper, 1.0)
        if lower > upper:
            raise ValueError(f"variable {name!r}: lower bound {lower} exceeds upper bound {upper}")
        self.var_names.append(name)
        self.lower.append(float(lower))
        self.upper.append(float(upper))
        self.is_binary.append(bool(binary))
        self._touch()
        return len(self.var_names) - 1

    def add_constraint(self, coeffs: Mapping[int, float] | tuple, sense: str, rhs: float,
                       name: str | None = None) -> int:
        if sense not in _SENSES:
            raise ValueError(f"unknown relation {sense!r}")
        if isinstance(coeffs, Mapping):
            cols = np.fromiter(coeffs.keys(), dtype=np.int64, count=len(coeffs))
            vals = np.fromiter(coeffs.values(), dtype=np.float64, count=len(coeffs))
        else:
            cols = np.asarray(coeffs[0], dtype=np.int64)
            vals = np.asarray(coeffs[1], dtype=np.float64)
        if len(cols) and (cols.min() < 0 or cols.max() >= self.n_vars):
            raise ValueError(f"constraint {name!r} references an undeclared variable")
        self._row_cols.append(cols)
        self._row_vals.append(vals)
        self.senses.append(sense)
        self.rhs.append(float(rhs))
        self.row_names.append(name if name is not None else f"c{len(self.rhs) - 1}")
        self._touch()
        return len(self.rhs) - 1

    def set_objective(self, coeffs: Mapping[int, float] | np.ndarray, sense: str = "max") -> None:
        if sense not in ("max", "min"):
            raise ValueError(f"unknown objective sense {sense!r}")
        obj = np.zeros(self.n_vars)
        if isinstance(coeffs, Mapping):
            for j, v in coeffs.items():
                obj[j] += v
        else:
            coeffs = np.asarray(coeffs, dtype=np.float64)
            obj[:len(coeffs)] = coeffs
        self._objective = obj
        self.sense = sense

    def _touch(self) -> None:
        self._matrix = None
        self.version += 1

    # -- views -----------------------------------------------------------------

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_rows(self) -> int:
        return len(self.rhs)

    @property
    def n_binary(self) -> int:
        return int(sum(self.is_binary))

    @property
    def objective(self) -> np.ndarray:
        obj = np.zeros(self.n_vars)
        obj[:len(self._objective)] = self._objective[:self.n_vars]
        return obj

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        return self._row_cols[i], self._row_vals[i]

    def matrix(self) -> sp.csr_matrix:
        if self._matrix is None:
            lengths = [len(c) for c in self._row_cols]
            indptr = np.zeros(self.n_rows + 1, dtype=np.int64)
            np.cumsum(lengths, out=indptr[1:])
            cols = np.concatenate(self._row_cols) if self._row_cols else np.zeros(0, np.int64)
            vals = np.concatenate(self._row_vals) if self._row_vals else np.zeros(0)
            m = sp.csr_matrix((vals, cols, indptr), shape=(self.n_rows, self.n_vars))
            m.sum_duplicates()
            self._matrix = m
        return self._matrix

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.lower, dtype=np.float64), np.asarray(self.upper, dtype=np.float64)

    def binary_indices(self) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.is_binary, dtype=bool))

    def objective_value(self, x: np.ndarray) -> float:
        return float(self.objective @ x)

    def violations(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-row and per-variable violation amounts (zero when satisfied)."""
        ax = self.matrix() @ x
        rhs = np.asarray(self.rhs)
        senses = np.asarray(self.senses)
        row = np.where(senses == LE, np.maximum(ax - rhs, 0.0),
                       np.where(senses == GE, np.maximum(rhs - ax, 0.0), np.abs(ax - rhs)))
        lo, up = self.bounds()
        var = np.maximum(lo - x, 0.0) + np.maximum(x - up, 0.0)
        return row, var

    def is_feasible(self, x: np.ndarray, tol: float = 1e-9, integral: bool = True) -> bool:
        row, var = self.violations(x)
        if row.max(initial=0.0) > tol or var.max(initial=0.0) > tol:
            return False
        if integral:
            xb = x[self.binary_indices()]
            if np.any(np.abs(xb - np.round(xb)) > tol):
                return False
        return True

    # -- LP text dump ----------------------------------------------------------

    def to_lp_text(self) -> str:
        """CPLEX-style LP text; names are sanitized, order follows declaration order."""
        vnames = _sanitize(self.var_names, "x")
        rnames = _sanitize(self.row_names, "c")
        lines = [f"\\ {self.name}", "Maximize" if self.sense == "max" else "Minimize"]
        obj = self.objective
        nz = np.flatnonzero(obj)
        lines.append(" obj: " + (_expr(nz, obj[nz], vnames) if len(nz) else "0 " + vnames[0] if vnames else "0"))
        lines.append("Subject To")
        for i in range(self.n_rows):
            cols, vals = self.row(i)
            expr = _expr(cols, vals, vnames) if len(cols) else "0 " + vnames[0]
            lines.append(f" {rnames[i]}: {expr} {self.senses[i]} {_num(self.rhs[i])}")
        lines.append("Bounds")
        for j in range(self.n_vars):
            lo, up = self.lower[j], self.upper[j]
            if self.is_binary[j] and lo == 0.0 and up == 1.0:
                continue
            if lo == -math.inf and up == math.inf:
                lines.append(f" {vnames[j]} free")
            elif lo == -math.inf:
                lines.append(f" -inf <= {vnames[j]} <= {_num(up)}")
            elif up == math.inf:
                if lo != 0.0:
                    lines.append(f" {vnames[j]} >= {_num(lo)}")
            else:
                lines.append(f" {_num(lo)} <= {vnames[j]} <= {_num(up)}")
        bins = [vnames[j] for j in range(self.n_vars) if self.is_binary[j]]
        if bins:
            lines.append("Binary")
            lines.extend(f" {v}" for v in bins)
        lines.append("End")
        return "\n".join(lines) + "\n"


_NAME_BAD = re.compile(r"[^A-Za-z0-9_.\[\]]")


def _sanitize(names: list[str], prefix: str) -> list[str]:
    out, seen = [], set()
    for k, raw in enumerate(names):
        name = _NAME_BAD.sub("_", raw) or f"{prefix}{k}"
        if name[0].isdigit() or name[0] == ".":
            name = f"{prefix}_{name}"
        base, n = name, 1
        while name in seen:
            name = f"{base}#{n}"
            n += 1
        seen.add(name)
        out.append(name)
    return out


def _num(v: float) -> str:
    return format(float(v), ".17g")


def _expr(cols, vals, names) -> str:
    parts = []
    for j, v in zip(cols, vals):
        sign = "-" if v < 0 else "+"
        mag = abs(float(v))
        term = names[j] if mag == 1.0 else f"{_num(mag)} {names[j]}"
        parts.append(f"{sign} {term}")
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text
