"""``tmecor-result-v1`` documents: writing, reading and schema checks.

Floats are written with 17 significant digits so that a reloaded result
reproduces the solver output bit for bit.  Nothing time- or host-dependent is
written unless timings are asked for, which keeps repeated runs byte-identical.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .exceptions import InvalidParams
from .game import GameTree
from .master import HybridColumn
from .sequence_form import RealizationPlan

RESULT_SCHEMA = "tmecor-result-v1"
REQUIRED_KEYS = ("schema", "run", "game", "converged", "value", "upper_bound", "iterations",
                 "support", "bound_trace", "columns", "mixture", "adversary_plan")


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = "%.17g" % x
    # keep floats recognizable as floats after a round trip
    if not any(c in s for c in ".eEn"):
        s += ".0"
    return s


def _emit(obj: Any, out: list, indent: int, level: int) -> None:
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = "," if indent else ", "
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        out.append(json.dumps(bool(obj) if obj is not None else None))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for k, (key, val) in enumerate(obj.items()):
            if k:
                out.append(sep)
            out.append(pad + json.dumps(str(key)) + ": ")
            _emit(val, out, indent, level + 1)
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = obj.tolist() if isinstance(obj, np.ndarray) else obj
        if not items:
            out.append("[]")
            return
        # flat numeric arrays go on one line
        flat = all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)
                   for v in items)
        out.append("[")
        for k, val in enumerate(items):
            if k:
                out.append(", " if flat else sep)
            if not flat:
                out.append(pad)
            _emit(val, out, indent, level + 1)
        out.append("]" if flat else end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(doc: Any, indent: int = 1) -> str:
    """JSON text with every float at 17 significant digits."""
    out: list[str] = []
    _emit(doc, out, indent, 0)
    return "".join(out) + "\n"


def loads(text: str) -> Any:
    return json.loads(text)


def game_summary(g: GameTree) -> dict:
    return {
        "name": g.name,
        "n_players": g.n_players,
        "n_leaves": g.n_leaves,
        "n_sequences": [g.n_sequences(p) for p in range(g.n_players)],
        "delta_u": g.utility_range,
    }


def result_to_dict(g: GameTree, res, run: dict | None = None, timings: bool = False) -> dict:
    """Document for a :class:`CmbResult` (converged or not)."""
    mixture = np.asarray(res.mixture, dtype=np.float64)
    doc = {
        "schema": RESULT_SCHEMA,
        "run": dict(run or {}),
        "game": game_summary(g),
        "converged": bool(res.converged),
        "value": float(res.value),
        "upper_bound": float(res.upper_bound),
        "iterations": int(res.iterations),
        "support": [int(k) for k in np.flatnonzero(mixture > 1e-9)],
        "bound_trace": [[float(lo), float(up)] for lo, up in res.bound_trace],
        "columns": [c.to_dict() for c in res.columns],
        "mixture": [float(x) for x in mixture],
        "adversary_plan": res.adversary_plan.to_dict(),
    }
    if timings:
        doc["timings"] = {k: float(v) for k, v in sorted(res.wall_times.items())}
    return doc


def check_result_dict(doc: dict) -> dict:
    """Schema check; raises InvalidParams naming the first offending field."""
    if not isinstance(doc, dict):
        raise InvalidParams("result document must be a JSON object")
    if doc.get("schema") != RESULT_SCHEMA:
        raise InvalidParams(f"schema: expected {RESULT_SCHEMA!r}, got {doc.get('schema')!r}")
    for key in REQUIRED_KEYS:
        if key not in doc:
            raise InvalidParams(f"{key}: missing from result document")
    if len(doc["mixture"]) != len(doc["columns"]):
        raise InvalidParams("mixture: length differs from the number of columns")
    for k in doc["support"]:
        if not 0 <= k < len(doc["columns"]):
            raise InvalidParams(f"support: column id {k} out of range")
    if not all(len(pair) == 2 for pair in doc["bound_trace"]):
        raise InvalidParams("bound_trace: entries must be [lower, upper] pairs")
    return doc


def load_result(path: str | Path) -> dict:
    try:
        doc = loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidParams(f"{path}: not valid JSON ({exc})") from exc
    return check_result_dict(doc)


def columns_from_dict(g: GameTree, doc: dict) -> tuple[list[HybridColumn], np.ndarray, RealizationPlan]:
    """Rebuild the columns, weights and adversary plan stored in a result document."""
    summary = doc["game"]
    if summary.get("n_leaves") != g.n_leaves or list(summary.get("n_sequences", [])) != [
            g.n_sequences(p) for p in range(g.n_players)]:
        raise InvalidParams("game: result was produced on a game of a different size")
    columns = [HybridColumn.from_dict(g, c) for c in doc["columns"]]
    weights = np.asarray(doc["mixture"], dtype=np.float64)
    plan = RealizationPlan.from_dict(doc["adversary_plan"])
    return columns, weights, plan


def write_result(path: str | Path, doc: dict) -> None:
    Path(path).write_text(dumps(doc))
