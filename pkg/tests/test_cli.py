import csv
import json

import numpy as np
import pytest

from scatterlab import checks, cli, io
from scatterlab.filterbank import ConvergenceError


def read_json(path):
    return json.loads(path.read_text())


@pytest.fixture
def signal_file(tmp_path):
    x = np.random.default_rng(0).standard_normal(256)
    path = tmp_path / "x.csv"
    io.save_signal(path, x)
    return path, x


def test_filters_run_layout(tmp_path):
    out = tmp_path / "run"
    assert cli.main(["filters", "--n", "1024", "--J", "6", "--out", str(out)]) == 0
    for name in ("manifest.json", "CHECKS", "run_info.json", "alpha.json",
                 "littlewood_paley.json", "filters/manifest.json", "filters/phi.f64"):
        assert (out / name).exists(), name
    man = read_json(out / "manifest.json")
    assert man["checks_passed"] is True
    assert man["config"]["n"] == 1024 and man["config"]["completion"] is True
    lines = (out / "CHECKS").read_text().splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)
    assert not [p for p in tmp_path.iterdir() if p.name != "run"]


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_filters_export_formats(tmp_path, fmt):
    out = tmp_path / fmt
    assert cli.main(["filters", "--n", "1024", "--J", "6", "--format", fmt, "--out", str(out)]) == 0
    back = io.load_filter_bank_arrays(out / "filters")
    assert back["phi"].shape == (1024,)


def test_filters_without_completion(tmp_path):
    out = tmp_path / "off"
    code = cli.main(["filters", "--n", "4096", "--J", "8", "--completion", "off", "--out", str(out)])
    assert code == 0
    assert read_json(out / "filters" / "manifest.json")["completion"] is False


@pytest.mark.parametrize("fmt", ["json", "csv", "bin"])
def test_scatter_formats(tmp_path, signal_file, fmt):
    path, x = signal_file
    out = tmp_path / "s"
    assert cli.main(["scatter", str(path), "--J", "4", "--m-max", "2", "--format", fmt,
                     "--out", str(out)]) == 0
    doc = read_json(out / "scatter.json")
    assert doc["n"] == 256 and doc["m_max"] == 2
    if fmt == "json":
        assert len(doc["paths"][0]["signal"]) == 256
    elif fmt == "bin":
        shape = doc["signals_file"]["shape"]
        assert io.read_f64(out / "signals.f64").size == shape[0] * shape[1]
    else:
        rows = list(csv.DictReader(open(out / "coefficients.csv")))
        assert len(rows) == len(doc["paths"])
    energy = read_json(out / "energy.json")
    assert energy["max_violation"] <= 1e-8
    assert (out / "curve.csv").exists()


def test_scatter_binary_input(tmp_path, signal_file):
    _, x = signal_file
    path = tmp_path / "x.f64"
    io.write_f64(path, x)
    out = tmp_path / "s"
    assert cli.main(["scatter", str(path), "--out", str(out)]) == 0
    assert read_json(out / "scatter.json")["input_norm_sq"] == pytest.approx(np.sum(x ** 2))


def test_scatter_frequency_decreasing(tmp_path):
    d = np.zeros(1024)
    d[0] = 1.0
    path = tmp_path / "d.csv"
    io.save_signal(path, d)
    out = tmp_path / "dec"
    assert cli.main(["scatter", str(path), "--J", "8", "--policy", "dec", "--out", str(out)]) == 0
    assert read_json(out / "energy.json")["captured_fraction_vs_all"] >= 0.995


def test_scatter_is_deterministic(tmp_path, signal_file):
    path, _ = signal_file
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["scatter", str(path), "--out", str(a)]) == 0
    assert cli.main(["scatter", str(path), "--out", str(b)]) == 0
    for name in ("report.json", "scatter.json", "curve.csv", "CHECKS"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_rerun_replaces_previous_run(tmp_path, signal_file):
    path, _ = signal_file
    out = tmp_path / "r"
    assert cli.main(["scatter", str(path), "--m-max", "1", "--out", str(out)]) == 0
    assert cli.main(["scatter", str(path), "--m-max", "2", "--out", str(out)]) == 0
    assert read_json(out / "scatter.json")["m_max"] == 2


@pytest.mark.parametrize("extra", [
    ["--n", "300"],
    ["--J", "1"],
    ["--J", "20"],
    ["--m-max", "-1"],
    ["--seed", "-3"],
    ["--realizations", "0"],
])
def test_bad_parameters_exit_2(tmp_path, extra):
    assert cli.main(["filters", *extra, "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()


def test_bad_inputs_exit_2(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("1\n2\n3\n")
    assert cli.main(["scatter", str(bad), "--out", str(tmp_path / "o1")]) == 2
    assert cli.main(["scatter", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "o2")]) == 2
    nan = tmp_path / "nan.csv"
    nan.write_text("1\nnan\n2\n3\n")
    assert cli.main(["scatter", str(nan), "--out", str(tmp_path / "o3")]) == 2
    ok = tmp_path / "ok.csv"
    io.save_signal(ok, np.ones(64))
    assert cli.main(["scatter", str(ok), "--n", "128", "--out", str(tmp_path / "o4")]) == 2


def test_output_location_checks(tmp_path):
    assert cli.main(["filters", "--out", str(tmp_path / "no" / "such")]) == 2
    busy = tmp_path / "busy"
    busy.mkdir()
    (busy / "keep.txt").write_text("mine")
    assert cli.main(["filters", "--n", "1024", "--J", "6", "--out", str(busy)]) == 2
    assert (busy / "keep.txt").read_text() == "mine"


def test_argparse_errors_exit_2(tmp_path):
    for argv in (["filters"], ["rotation", "nonsense", "--out", str(tmp_path / "x")],
                 ["filters", "--policy", "odd", "--out", str(tmp_path / "y")]):
        with pytest.raises(SystemExit) as exc:
            cli.main(argv)
        assert exc.value.code == 2


def test_experiment_runs(tmp_path, capsys):
    out = tmp_path / "rot"
    assert cli.main(["rotation", "invariance", "--n", "64", "--m-max", "2", "--out", str(out)]) == 0
    assert "PASS" in capsys.readouterr().out
    assert read_json(out / "report.json")["max_deviation"] <= 1e-10


def _fake_registry(monkeypatch, fn):
    monkeypatch.setitem(checks.REGISTRY["rotation"], "invariance", fn)


def test_non_convergence_exits_3(tmp_path, monkeypatch):
    def boom(**kw):
        raise ConvergenceError("series did not settle")
    _fake_registry(monkeypatch, boom)
    out = tmp_path / "c"
    assert cli.main(["rotation", "invariance", "--out", str(out)]) == 3
    assert not out.exists()
    assert list(tmp_path.iterdir()) == []


def test_failed_check_exits_4(tmp_path, monkeypatch):
    def failing(**kw):
        res = checks.ExperimentResult("fake", {"value": 1.0})
        res.add("always_fails", 1.0, "<= 0", False)
        return res
    _fake_registry(monkeypatch, failing)
    out = tmp_path / "f"
    assert cli.main(["rotation", "invariance", "--out", str(out)]) == 4
    assert (out / "CHECKS").read_text().startswith("FAIL  always_fails")
    assert read_json(out / "manifest.json")["checks_passed"] is False


def test_unexpected_errors_clean_up(tmp_path, monkeypatch):
    def broken(**kw):
        raise RuntimeError("bug")
    _fake_registry(monkeypatch, broken)
    with pytest.raises(RuntimeError):
        cli.main(["rotation", "invariance", "--out", str(tmp_path / "u")])
    assert list(tmp_path.iterdir()) == []


def test_kwargs_only_pass_supported_options():
    cfg = cli.RunConfig("stochastic", "consistency", n=512, J=5, seed=3, realizations=4,
                        model="ma", out="x")
    kw = cli._kwargs_for(checks.consistency, cfg)
    assert kw == {"n": 512, "seed": 3, "realizations": 4, "model": "ma"}
