import json
import os

import numpy as np
import pytest

from conftest import cli_scenarios, tree_digest
from dcmm import __version__
from dcmm.cli import main
from dcmm.io import read_adjacency

SCENARIOS = ["generate", "sample", "estimate", "experiment-p", "experiment-theta",
             "lowerbound-verify"]
EXPECTED = {
    "generate": {"params.txt"},
    "sample": {"adjacency.csv"},
    "estimate": {"p_hat.csv", "theta_hat.csv", "pi_hat.csv"},
    "experiment-p": {"experiment1.csv", "experiment1_summary.csv", "fits.csv"},
    "experiment-theta": {"experiment2.csv", "fits.csv"},
    "lowerbound-verify": {"lowerbounds.csv"},
}


@pytest.fixture(scope="module")
def scenarios(tmp_path_factory):
    return cli_scenarios(str(tmp_path_factory.mktemp("inputs")))


@pytest.mark.parametrize("name", SCENARIOS)
def test_outputs_manifest_and_digest(name, scenarios, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(scenarios[name] + ["--out", str(a)]) == 0
    assert main(scenarios[name] + ["--out", str(b)]) == 0
    assert set(os.listdir(a)) == EXPECTED[name] | {"manifest.json"}
    assert tree_digest(a) == tree_digest(b)
    manifest = json.loads((a / "manifest.json").read_text())
    assert manifest["command"] == name and manifest["version"] == __version__
    assert set(manifest["outputs"]) == EXPECTED[name]
    assert "config" in manifest and "seed" in manifest


def test_seed_changes_output(scenarios, tmp_path):
    main(["generate", "--n", "50", "--out", str(tmp_path / "a")])
    main(["generate", "--n", "50", "--seed", "43", "--out", str(tmp_path / "b")])
    assert tree_digest(tmp_path / "a") != tree_digest(tmp_path / "b")
    assert json.loads((tmp_path / "a" / "manifest.json").read_text())["seed"] == 42


def test_config_seed_used_when_flag_absent(scenarios, tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("n_list = [300, 400]\nreplicates = 1\nmaster_seed = 9\n")
    assert main(["experiment-p", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert json.loads((tmp_path / "o" / "manifest.json").read_text())["seed"] == 9


def test_env_output_dir(monkeypatch, tmp_path):
    monkeypatch.setenv("DCMM_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["generate", "--n", "20"]) == 0
    assert (tmp_path / "env" / "params.txt").exists()


def test_usage_error_writes_nothing(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["estimate", "--input", "x.csv", "--k", "0", "--out", str(out)]) == 64
    assert not out.exists()
    assert main(["frobnicate"]) == 64
    assert main([]) == 64


def test_invalid_input_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("0,1\n1\n")
    out = tmp_path / "o"
    assert main(["estimate", "--input", str(bad), "--k", "2", "--out", str(out)]) == 1
    assert main(["estimate", "--input", str(tmp_path / "missing.csv"), "--k", "2",
                 "--out", str(out)]) == 1
    assert "invalid input" in capsys.readouterr().err
    assert not out.exists()


def test_strict_flag(tmp_path):
    g = tmp_path / "g.csv"
    g.write_text("1,1,0\n0,1,1\n0,1,1\n")
    assert main(["estimate", "--input", str(g), "--k", "2", "--strict",
                 "--out", str(tmp_path / "o")]) == 1


def test_pipeline_error_exit_2_no_partial_output(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("0,0,0\n0,0,0\n0,0,0\n")
    out = tmp_path / "o"
    assert main(["estimate", "--input", str(empty), "--k", "2", "--out", str(out)]) == 2
    err = capsys.readouterr().err
    assert "[spectral]" in err
    assert not out.exists()
    assert not [p for p in os.listdir(tmp_path) if p.startswith(".dcmm-staging")]


def test_existing_outputs_survive_failure(tmp_path):
    out = tmp_path / "o"
    assert main(["generate", "--n", "20", "--out", str(out)]) == 0
    before = tree_digest(out)
    empty = tmp_path / "empty.csv"
    empty.write_text("0,0\n0,0\n")
    assert main(["estimate", "--input", str(empty), "--k", "2", "--out", str(out)]) == 2
    assert tree_digest(out) == before


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("n_list = [300]\nbogus = 1\n")
    assert main(["experiment-p", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_sample_edges_round_trip(scenarios, tmp_path):
    args = scenarios["sample"]
    assert main(args + ["--format", "edges", "--out", str(tmp_path / "e")]) == 0
    assert main(args + ["--out", str(tmp_path / "c")]) == 0
    np.testing.assert_array_equal(read_adjacency(tmp_path / "e" / "edges.txt", n=60).x,
                                  read_adjacency(tmp_path / "c" / "adjacency.csv").x)
