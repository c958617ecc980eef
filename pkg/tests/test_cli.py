import csv
import json

import pytest

from monopulse_lab.cli import run
from monopulse_lab.touchstone import read_touchstone


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_component_then_sim(tmp_path):
    assert run(["component", "gen", "pt-coupler", "--out", str(tmp_path)]) == 0
    net = tmp_path / "pt-coupler.net"
    assert net.is_file()
    out = tmp_path / "sim"
    assert run(["netlist", "sim", str(net), "--out", str(out), "--points", "11"]) == 0
    s = read_touchstone(out / "pt-coupler.s4p")
    assert s.port_names == ("Pa", "Pb", "Pc", "Pd")
    assert len(s.freqs) == 11
    man = json.loads((out / "manifest.json").read_text())
    assert man["inputs"] == [str(net)]
    assert man["config"]["points"] == 11
    assert man["version"]


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["component", "gen", "widget"],
        ["doa", "estimate", "--az", "1"],
        ["doa", "dataset"],                          # seed is mandatory
        ["doa", "dataset", "--seed", "1", "--impairments", "severe"],
        ["netlist", "sim", "does-not-exist.net"],
        ["dnn", "eval", "--model", "nope.mlp", "--dataset", "nope.csv"],
    ],
)
def test_usage_errors_exit_1(argv, tmp_path, capsys):
    assert run(argv + ["--out", str(tmp_path)] if argv else argv) == 1
    assert "error" in capsys.readouterr().err


def test_bad_netlist_exits_1(tmp_path, capsys):
    bad = tmp_path / "bad.net"
    bad.write_text("node a\nwidget X a\n")
    assert run(["netlist", "sim", str(bad), "--out", str(tmp_path)]) == 1
    assert "line 2" in capsys.readouterr().err


def test_singular_network_exits_2(tmp_path, capsys):
    assert run(["component", "gen", "crossover", "--zx", "35", "--out", str(tmp_path)]) == 0
    code = run(["netlist", "sim", str(tmp_path / "crossover.net"), "--points", "5", "--out", str(tmp_path / "s")])
    assert code == 2
    assert "computation failed" in capsys.readouterr().err


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep\npoints = 7\nf0 = 1e9\nseed=4\n")
    out = tmp_path / "o"
    assert run(["comparator", "report", "--config", str(cfg), "--points", "9", "--out", str(out)]) == 0
    conf = json.loads((out / "manifest.json").read_text())["config"]
    assert conf["points"] == 9                  # flag wins
    assert conf["f0"] == 1e9                    # config beats default
    assert len(_rows(out / "metrics.csv")) == 9


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("colour = red\n")
    assert run(["comparator", "report", "--config", str(cfg), "--out", str(tmp_path)]) == 1


def test_estimate_ideal(tmp_path, capsys):
    out = tmp_path / "e"
    assert run(["doa", "estimate", "--az", "4", "--el", "-2", "--impairments", "ideal", "--out", str(out)]) == 0
    row = _rows(out / "estimate.csv")[0]
    assert float(row["theta_az_est_deg"]) == pytest.approx(4.0, abs=1e-9)
    assert float(row["theta_el_est_deg"]) == pytest.approx(-2.0, abs=1e-9)


def test_dataset_train_eval(tmp_path):
    d = tmp_path / "d"
    assert run(["doa", "dataset", "--seed", "2", "--out", str(d)]) == 0
    assert len(_rows(d / "dataset.csv")) == 145
    m = tmp_path / "m"
    assert run(["dnn", "train", "--dataset", str(d / "dataset.csv"), "--seed", "2", "--iters", "50",
                "--out", str(m)]) == 0
    assert len(_rows(m / "loss_history.csv")) == 50
    e = tmp_path / "e"
    assert run(["dnn", "eval", "--model", str(m / "model.mlp"), "--dataset", str(d / "dataset.csv"),
                "--out", str(e)]) == 0
    assert "rms error" in (e / "eval_summary.txt").read_text()


def test_crossover_solve_files(tmp_path):
    assert run(["crossover", "solve", "--out", str(tmp_path)]) == 0
    assert _rows(tmp_path / "candidates.csv")
    assert "candidates found" in (tmp_path / "summary.txt").read_text()


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        run(["--version"])
    assert info.value.code == 0
    assert "monopulse-lab" in capsys.readouterr().out
