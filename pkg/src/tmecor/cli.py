"""Command-line entry point: ``tmecor solve | bench | certify``."""

from __future__ import annotations

import csv
import io as _io
import json
import logging
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import click

from . import io
from .cmb import CmbConfig, run_cmb
from .exceptions import DidNotConverge, InvalidParams, TMECorError
from .game import GameTree, game_from_dict
from .poker import build_kuhn, build_leduc
from .verify import certify

log = logging.getLogger("tmecor")

BENCH_COLUMNS = ("game", "|L|", "|Σ_i|", "mode", "value", "iterations", "support",
                 "oracle time", "master time", "total time")


@dataclass(frozen=True)
class RunSpec:
    game: str
    mode: str = "exact"
    oracle: str = "art"
    seed: int = 0
    max_iterations: int = 500
    node_limit: int = 100_000
    time_limit: float | None = None
    output: str | None = None

    def __post_init__(self):
        parse_game_spec(self.game)          # raises on a malformed source
        if self.oracle not in ("art", "c18"):
            raise InvalidParams(f"oracle: expected 'art' or 'c18', got {self.oracle!r}")
        parse_mode(self.mode)

    def epsilon(self, g: GameTree) -> float:
        kind, eps = parse_mode(self.mode)
        if kind == "epsilon-normalized":
            return eps * g.utility_range
        return eps

    def config(self, g: GameTree, backend=None) -> CmbConfig:
        return CmbConfig(epsilon=self.epsilon(g), max_iterations=self.max_iterations,
                         oracle=self.oracle, backend=backend, node_limit=self.node_limit,
                         time_limit=self.time_limit)


def parse_game_spec(text: str) -> tuple:
    parts = text.split(":", 1) if text.startswith("file:") else text.split(":")
    kind = parts[0]
    if kind == "file":
        if len(parts) != 2 or not parts[1]:
            raise InvalidParams(f"game: expected file:<path>, got {text!r}")
        return ("file", parts[1])
    if kind in ("kuhn", "leduc"):
        if len(parts) != 3:
            raise InvalidParams(f"game: expected {kind}:<players>:<ranks>, got {text!r}")
        try:
            n, r = int(parts[1]), int(parts[2])
        except ValueError:
            raise InvalidParams(f"game: players and ranks must be integers in {text!r}") from None
        return (kind, n, r)
    raise InvalidParams(f"game: unknown source {kind!r} (use kuhn:n:r, leduc:n:r or file:path)")


def parse_mode(text: str) -> tuple[str, float]:
    if text == "exact":
        return ("exact", 0.0)
    kind, _, val = text.partition(":")
    if kind not in ("epsilon", "epsilon-normalized") or not val:
        raise InvalidParams(f"mode: expected exact, epsilon:<x> or epsilon-normalized:<x>, got {text!r}")
    try:
        eps = float(val)
    except ValueError:
        raise InvalidParams(f"mode: epsilon {val!r} is not a number") from None
    if not eps >= 0:
        raise InvalidParams(f"mode: epsilon must be >= 0, got {eps}")
    return (kind, eps)


def load_game(text: str) -> GameTree:
    src = parse_game_spec(text)
    if src[0] == "kuhn":
        return build_kuhn(src[1], src[2])
    if src[0] == "leduc":
        return build_leduc(src[1], src[2])
    path = Path(src[1])
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise InvalidParams(f"game: cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidParams(f"game: {path} is not valid JSON ({exc})") from exc
    return game_from_dict(doc)


def _run_doc(spec: RunSpec) -> dict:
    doc = asdict(spec)
    doc.pop("output")
    return doc


def cmd_solve(spec: RunSpec, timings: bool = False, backend=None) -> tuple[int, dict]:
    """Run CMB for ``spec``; returns (exit code, result document)."""
    g = load_game(spec.game)
    try:
        res = run_cmb(g, spec.config(g, backend))
        code = 0
    except DidNotConverge as exc:
        res = exc.result
        code = 2
    doc = io.result_to_dict(g, res, _run_doc(spec), timings=timings)
    if spec.output:
        io.write_result(spec.output, doc)
    return code, doc


def bench_row(spec: RunSpec, backend=None) -> dict:
    g = load_game(spec.game)
    try:
        res = run_cmb(g, spec.config(g, backend))
    except DidNotConverge as exc:
        res = exc.result
    t = res.wall_times
    return {
        "game": spec.game, "|L|": g.n_leaves, "|Σ_i|": g.n_sequences(0), "mode": spec.mode,
        "value": "%.17g" % res.value, "iterations": res.iterations, "support": res.support_size,
        "oracle time": "%.3f" % t.get("oracle", 0.0), "master time": "%.3f" % t.get("master", 0.0),
        "total time": "%.3f" % t.get("total", 0.0),
    }


def cmd_bench(specs, backend=None) -> str:
    """CSV table with one row per spec, in the given order."""
    buf = _io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for spec in specs:
        writer.writerow(bench_row(spec, backend))
    return buf.getvalue()


def cmd_certify(result_path, game: str | None = None, oracle: str = "art", backend=None):
    doc = io.load_result(result_path)
    game = game or doc["run"].get("game")
    if not game:
        raise InvalidParams("game: not given and not recorded in the result file")
    g = load_game(game)
    columns, weights, plan = io.columns_from_dict(g, doc)
    return certify(g, columns, weights, plan, backend=backend, oracle=oracle)


# -- click ---------------------------------------------------------------------

def _mode_from(mode: str, epsilon: float | None) -> str:
    if epsilon is None:
        return mode
    if mode == "exact":
        return f"epsilon:{epsilon!r}"
    if mode in ("epsilon", "epsilon-normalized"):
        return f"{mode}:{epsilon!r}"
    raise click.UsageError("--epsilon conflicts with a value already given in --mode")


def _fail(exc: Exception):
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


game_opt = click.option("--game", "games", multiple=True, help="kuhn:n:r, leduc:n:r or file:path.")
common = [
    click.option("--mode", default="exact", show_default=True,
                 help="exact, epsilon:<x> or epsilon-normalized:<x> (x times the utility range)."),
    click.option("--epsilon", type=float, default=None, help="Shorthand for the epsilon in --mode."),
    click.option("--oracle", type=click.Choice(["art", "c18"]), default="art", show_default=True),
    click.option("--seed", type=int, default=0, show_default=True),
    click.option("--max-iter", type=int, default=500, show_default=True),
    click.option("--node-limit", type=int, default=100_000, show_default=True),
    click.option("--time-limit", type=float, default=None, help="Seconds, checked between iterations."),
]


def _with(options):
    def deco(f):
        for opt in reversed(options):
            f = opt(f)
        return f
    return deco


@click.group()
@click.option("-v", "--verbose", count=True)
def main(verbose):
    """Team-maxmin equilibria with a coordination device for extensive-form games."""
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2), format="%(name)s: %(message)s")


@main.command()
@game_opt
@_with(common)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Result file (default: stdout).")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True)
@click.option("--timings/--no-timings", default=False, help="Include wall-clock timings in the JSON.")
def solve(games, mode, epsilon, oracle, seed, max_iter, node_limit, time_limit, out, fmt, timings):
    """Solve one game; exit code 2 means the iteration or time limit was hit."""
    if len(games) != 1:
        raise click.UsageError("solve takes exactly one --game")
    try:
        spec = RunSpec(games[0], _mode_from(mode, epsilon), oracle, seed, max_iter, node_limit, time_limit,
                       out if fmt == "json" else None)
        if fmt == "csv":
            text = cmd_bench([spec])
            code = 0
        else:
            code, doc = cmd_solve(spec, timings=timings)
            text = io.dumps(doc)
    except (TMECorError, OSError) as exc:
        _fail(exc)
    if fmt == "json" and out:
        click.echo(f"value {doc['value']!r} after {doc['iterations']} iterations -> {out}", err=True)
    elif fmt == "csv" and out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)
    sys.exit(code)


@main.command()
@game_opt
@_with(common)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="csv", show_default=True)
def bench(games, mode, epsilon, oracle, seed, max_iter, node_limit, time_limit, out, fmt):
    """Benchmark table over every --game given (possibly none)."""
    try:
        specs = [RunSpec(gm, _mode_from(mode, epsilon), oracle, seed, max_iter, node_limit, time_limit)
                 for gm in games]
        if fmt == "csv":
            text = cmd_bench(specs)
        else:
            text = io.dumps([bench_row(s) for s in specs])
    except (TMECorError, OSError) as exc:
        _fail(exc)
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


@main.command("certify")
@click.argument("result", type=click.Path(exists=True, dir_okay=False))
@click.option("--game", default=None, help="Game source; defaults to the one recorded in RESULT.")
@click.option("--oracle", type=click.Choice(["art", "c18"]), default="art", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def certify_cmd(result, game, oracle, out):
    """Recompute both best responses for a saved result and report the certified epsilon."""
    try:
        report = cmd_certify(result, game, oracle)
    except (TMECorError, OSError) as exc:
        _fail(exc)
    text = io.dumps(report.to_dict())
    if out:
        Path(out).write_text(text)
    click.echo(text, nl=False)


if __name__ == "__main__":
    main()
