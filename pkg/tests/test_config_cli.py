"""Config dialect and command-line behaviour."""

import os

import pytest

from artifact.cli import EXIT_CONFIG, EXIT_FAILS, EXIT_OK, run
from artifact.config import build_model, build_triple, dump_config, load_config
from artifact.core import ConfigError
from artifact.nonlinearity import PowerLaw

CONFIGS = os.path.join(os.path.dirname(__file__), "..", "configs")


def cfg_path(name):
    return os.path.join(CONFIGS, name)


GOOD = """\
triple:
  phi: {family: power, p: 3}
  f: {family: power, omega: 0.5}
  l: {family: phi_quotient, chi: 1}
model: {family: hyperbolic, m: 3, kappa: 2}
"""


def test_load_and_build():
    cfg = load_config(GOOD)
    tri = build_triple(cfg)
    assert isinstance(tri.phi, PowerLaw) and tri.phi.p == 3
    M = build_model(cfg.section("model"))
    assert M.m == 3


def test_round_trip():
    cfg = load_config(GOOD)
    assert load_config(dump_config(cfg.data)).data == cfg.data


def test_unknown_key_reports_location():
    text = GOOD + "bvp:\n  T: 1\n  wrong: 2\n"
    with pytest.raises(ConfigError) as e:
        load_config(text).section("bvp").check({"T"})
    assert e.value.line == 8 and e.value.column == 3
    assert "(line 8, column 3)" in str(e.value)
    with pytest.raises(ConfigError) as e:
        load_config("nonsense: 1\n")
    assert e.value.line == 1 and e.value.column == 1


def test_duplicate_key_and_bad_type():
    with pytest.raises(ConfigError) as e:
        load_config("grid: {N: 3}\ngrid: {N: 4}\n")
    assert e.value.line == 2
    with pytest.raises(ConfigError):
        build_triple(load_config(GOOD.replace("p: 3", "p: three")))
    with pytest.raises(ConfigError):
        build_triple(load_config(GOOD.replace("family: power, p: 3", "family: cubic")))


def test_ko_exit_codes(capsys):
    assert run(["ko", "--p", "2", "--chi", "1", "--omega", "0.5"]) == EXIT_OK
    assert run(["ko", "--p", "2", "--chi", "1", "--omega", "2"]) == EXIT_FAILS
    assert "ko: Fails" in capsys.readouterr().out


def test_usage_errors_are_config_errors(capsys):
    assert run(["frobnicate"]) == EXIT_CONFIG
    assert run(["bvp"]) == EXIT_CONFIG


def test_bad_config_file_exit(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text(GOOD + "bvp:\n  T: 1\n  eta: 1\n  bogus: 3\n")
    assert run(["bvp", "--config", str(p)]) == EXIT_CONFIG
    assert "(line 9, column 3)" in capsys.readouterr().err


def test_environment_grid_override(monkeypatch, tmp_path):
    monkeypatch.setenv("ARTIFACT_GRID", "many")
    assert run(["bvp", "--config", cfg_path("bvp_sinh.yaml")]) == EXIT_CONFIG
    monkeypatch.setenv("ARTIFACT_GRID", "64")
    out = tmp_path / "w.csv"
    assert run(["bvp", "--config", cfg_path("bvp_sinh.yaml"), "--out", str(out)]) == EXIT_OK
    assert len(out.read_text().splitlines()) == 65


def test_bvp_csv_is_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(["bvp", "--config", cfg_path("bvp_sinh.yaml"), "--out", str(a)]) == EXIT_OK
    assert run(["bvp", "--config", cfg_path("bvp_sinh.yaml"), "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "t,w,wprime"


def test_construct_and_verify_commands(tmp_path, capsys):
    out = tmp_path / "k.csv"
    assert run(["construct", "--config", cfg_path("khasminskii.yaml"), "--out", str(out)]) == EXIT_OK
    assert out.read_text().startswith("r,")
    assert run(["verify", "counterexample", "--config", cfg_path("counterexample.yaml")]) == EXIT_OK
    assert run(["verify", "residual", "--config", cfg_path("residual.yaml")]) == EXIT_OK
    assert run(["theorems", "--config", cfg_path("theorems.yaml")]) == EXIT_OK
    assert run(["model", "--config", cfg_path("model.yaml"), "--green-p", "2", "--out", "-"]) == EXIT_OK
    assert "ConsistentWithPaper" in capsys.readouterr().out
