import json
from pathlib import Path

import pytest

from sparse_ilac.cli import execute, parse_arch
from sparse_ilac.geometry import Nested

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_parse_arch():
    assert parse_arch("nested:3,3") == Nested(3, 3)


def test_unknown_subcommand(capsys):
    assert execute(["warp-drive"]) != 0
    assert "usage" in capsys.readouterr().err


def test_bad_arch_exit_code(capsys):
    assert execute(["beampattern", "--arch", "coprime:2,4"]) == 2


def test_missing_config(tmp_path):
    assert execute(["simulate", "--config", str(tmp_path / "nope.json")]) == 2


def test_beampattern_json(capsys):
    assert execute(["beampattern", "--arch", "nested:8,8", "--points", "101"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["positions"][:9] == [0, 1, 2, 3, 4, 5, 6, 7, 8]
    assert out["flmp"] == pytest.approx(0.0213058168, abs=1e-8)
    assert "config_hash" in out["metadata"]


def test_coarray(capsys):
    assert execute(["coarray", "--arch", "coprime:2,3"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["holes"] == [-8, 8] and out["M_svir"] == 15


def test_simulate_byte_identical(tmp_path):
    args = ["simulate", "--config", str(CONFIGS / "hotspot.json"), "--seed", "7", "--trials", "3"]
    assert execute(args + ["--out", str(tmp_path / "a")]) == 0
    assert execute(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("simulate.json", "simulate.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_pareto_outputs(tmp_path):
    out = tmp_path / "p"
    assert execute(["pareto", "--m", "8", "--trials", "2", "--snapshots", "50", "--out", str(out)]) == 0
    front = json.loads((out / "pareto_front.json").read_text())["frontier"]
    assert front
    rows = (out / "pareto_table.csv").read_text().splitlines()
    assert rows[0].startswith("#")
    assert len(rows) == 1 + 1 + 1 + 7 + 2  # metadata, header, ULA, nested, co-prime
