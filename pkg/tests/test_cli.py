import csv
import io as _io
import json

import pytest
from click.testing import CliRunner

from tmecor import game_to_dict, io
from tmecor.cli import BENCH_COLUMNS, RunSpec, cmd_bench, cmd_certify, cmd_solve, main, parse_game_spec, parse_mode
from tmecor.exceptions import InvalidParams

from toys import K3_VALUE, toy12


@pytest.fixture
def runner():
    return CliRunner()


def test_solve_writes_result(runner, tmp_path):
    out = tmp_path / "r.json"
    res = runner.invoke(main, ["solve", "--game", "kuhn:3:3", "--out", str(out)])
    assert res.exit_code == 0, res.output
    doc = io.load_result(out)
    assert doc["converged"]
    assert doc["value"] == pytest.approx(K3_VALUE, abs=1e-6)
    assert doc["game"]["delta_u"] == 6.0


def test_solve_is_byte_identical(runner, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert runner.invoke(main, ["solve", "--game", "kuhn:3:3", "--seed", "3", "--out", str(path)]).exit_code == 0
    assert a.read_bytes() == b.read_bytes()


def test_json_roundtrip_fixpoint(runner, tmp_path):
    out = tmp_path / "r.json"
    runner.invoke(main, ["solve", "--game", "kuhn:3:3", "--out", str(out)])
    text = out.read_text()
    doc = io.loads(text)
    assert io.dumps(doc) == text
    assert io.loads(io.dumps(doc)) == doc


def test_float_format():
    text = io.dumps({"a": 0.1, "b": 1.0, "c": [1e-20, -2.5], "d": float("inf")})
    assert '"a": 0.10000000000000001' in text
    assert '"b": 1.0' in text
    assert json.loads(text)["c"] == [1e-20, -2.5]


def test_truncated_run_exit_code_and_certify(runner, tmp_path):
    out = tmp_path / "r.json"
    res = runner.invoke(main, ["solve", "--game", "kuhn:3:3", "--max-iter", "1", "--out", str(out)])
    assert res.exit_code == 2
    doc = io.load_result(out)
    assert not doc["converged"]
    res = runner.invoke(main, ["certify", str(out)])
    assert res.exit_code == 0
    assert json.loads(res.output)["certified_epsilon"] > 0


def test_certify_exact_result(runner, tmp_path):
    out = tmp_path / "r.json"
    runner.invoke(main, ["solve", "--game", "kuhn:3:3", "--out", str(out)])
    res = runner.invoke(main, ["certify", str(out), "--game", "kuhn:3:3"])
    assert res.exit_code == 0
    report = json.loads(res.output)
    assert report["certified_epsilon"] <= 1e-6
    assert report["team_gain"] >= -1e-7 and report["adversary_gain"] >= -1e-7


def test_certify_wrong_game(runner, tmp_path):
    out = tmp_path / "r.json"
    runner.invoke(main, ["solve", "--game", "kuhn:3:3", "--out", str(out)])
    res = runner.invoke(main, ["certify", str(out), "--game", "kuhn:3:4"])
    assert res.exit_code == 1
    assert "game" in res.output


def test_epsilon_normalized_mode(tmp_path):
    spec = RunSpec("kuhn:3:3", mode="epsilon-normalized:0.1", output=str(tmp_path / "r.json"))
    code, doc = cmd_solve(spec)
    assert code == 0
    report = cmd_certify(tmp_path / "r.json")
    assert report.certified_epsilon <= 0.6


def test_epsilon_flag_combines_with_mode(runner):
    res = runner.invoke(main, ["solve", "--game", "kuhn:3:3", "--mode", "epsilon-normalized", "--epsilon", "0.1"])
    assert res.exit_code == 0
    assert json.loads(res.output)["run"]["mode"] == "epsilon-normalized:0.1"


def test_bench_empty_is_header_only(runner):
    res = runner.invoke(main, ["bench"])
    assert res.exit_code == 0
    assert res.output.strip().split("\n") == [",".join(BENCH_COLUMNS)]
    assert cmd_bench([]) == ",".join(BENCH_COLUMNS) + "\n"


def test_bench_rows(runner):
    res = runner.invoke(main, ["bench", "--game", "kuhn:3:3", "--game", "kuhn:3:4"])
    assert res.exit_code == 0, res.output
    rows = list(csv.DictReader(_io.StringIO(res.output)))
    assert [r["game"] for r in rows] == ["kuhn:3:3", "kuhn:3:4"]
    assert (rows[1]["|L|"], rows[1]["|Σ_i|"]) == ("312", "33")


def test_solve_csv_format(runner):
    res = runner.invoke(main, ["solve", "--game", "kuhn:3:3", "--format", "csv"])
    assert res.exit_code == 0
    assert res.output.startswith("game,")


def test_file_game(runner, tmp_path):
    path = tmp_path / "toy.json"
    path.write_text(json.dumps(game_to_dict(toy12())))
    res = runner.invoke(main, ["solve", "--game", f"file:{path}"])
    assert res.exit_code == 0
    assert json.loads(res.output)["value"] == pytest.approx(1.1, abs=1e-7)


@pytest.mark.parametrize("args,field", [
    (["--game", "poker:3:3"], "game"),
    (["--game", "kuhn:3"], "game"),
    (["--game", "kuhn:3:3", "--mode", "epsilon:abc"], "mode"),
    (["--game", "kuhn:3:3", "--mode", "epsilon:-1"], "mode"),
    (["--game", "file:/nonexistent/x.json"], "game"),
])
def test_bad_inputs_name_the_field(runner, args, field):
    res = runner.invoke(main, ["solve"] + args)
    assert res.exit_code == 1
    assert f"error: {field}:" in res.output


def test_bad_result_file(runner, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema": "nope"}')
    res = runner.invoke(main, ["certify", str(bad)])
    assert res.exit_code == 1
    assert "schema" in res.output


def test_parsers():
    assert parse_game_spec("kuhn:3:4") == ("kuhn", 3, 4)
    assert parse_game_spec("file:a:b.json") == ("file", "a:b.json")
    assert parse_mode("epsilon:0.5") == ("epsilon", 0.5)
    with pytest.raises(InvalidParams):
        RunSpec("kuhn:3:3", oracle="f18")
