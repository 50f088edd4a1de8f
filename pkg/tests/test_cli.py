import csv
import itertools
import json

import pytest

from fracprop.cli import main
from fracprop.experiments import PRESETS, SCHEMA_VERSION, RunConfig, run


def _run(args, capsys):
    code = main(args)
    return code, capsys.readouterr()


def test_linear_free_run(tmp_path, capsys):
    code, out = _run(["run", "--preset", "linear-free", "--alpha", "0.5", "--N", "64", "--out", str(tmp_path)],
                     capsys)
    assert code == 0
    assert "status=completed" in out.out
    pdir = tmp_path / "linear-free" / "point_000"
    assert (pdir / "trajectory.csv").exists()
    diag = json.loads((pdir / "diagnostics.json").read_text())
    assert diag["schema_version"] == SCHEMA_VERSION and diag["data_norm"] == "graph"
    assert diag["config"]["alpha"] == 0.5 and diag["config"]["N"] == 64
    with open(tmp_path / "linear-free" / "summary.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0]["status"] == "completed"


def test_steady_state_table_decreases(tmp_path, capsys):
    code, out = _run(["run", "--preset", "steady-state", "--alpha", "0.7", "--out", str(tmp_path)], capsys)
    assert code == 0 and "decreasing=True" in out.out
    summary = json.loads((tmp_path / "steady-state" / "summary.json").read_text())
    errs = [r["error"] for r in summary["points"][0]["table"]]
    assert all(b < a for a, b in itertools.pairwise(errs))


def test_deterministic_csv(tmp_path):
    a = RunConfig.from_preset("linear-kappa", output=str(tmp_path / "a"))
    b = RunConfig.from_preset("linear-kappa", output=str(tmp_path / "b"))
    run(a)
    run(b)
    fa = (tmp_path / "a" / "linear-kappa" / "point_000" / "trajectory.csv").read_bytes()
    fb = (tmp_path / "b" / "linear-kappa" / "point_000" / "trajectory.csv").read_bytes()
    assert fa == fb and b"\r" not in fa


def test_config_round_trip(tmp_path, capsys):
    out1 = tmp_path / "one"
    assert main(["run", "--preset", "fnls", "--N", "8", "--horizon", "0.5", "--out", str(out1)]) == 0
    diag = out1 / "fnls" / "point_000" / "diagnostics.json"
    out2 = tmp_path / "two"
    assert main(["run", "--config", str(diag), "--out", str(out2)]) == 0
    capsys.readouterr()
    t1 = (out1 / "fnls" / "point_000" / "trajectory.csv").read_bytes()
    t2 = (out2 / "fnls" / "point_000" / "trajectory.csv").read_bytes()
    assert t1 == t2
    c1 = json.loads(diag.read_text())["config"]
    c2 = json.loads((out2 / "fnls" / "point_000" / "diagnostics.json").read_text())["config"]
    c1.pop("output")
    c2.pop("output")
    assert c1 == c2


def test_sweep_writes_one_row_per_point(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("FRACPROP_THREADS", "2")
    code, _ = _run(["run", "--preset", "scalar-cubic", "--amplitudes", "2,4", "--alphas", "0.6,0.8",
                      "--out", str(tmp_path)], capsys)
    assert code == 0
    with open(tmp_path / "scalar-cubic" / "summary.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    assert all(r["status"] == "blow_up" for r in rows)
    for a in ("0.6", "0.8"):
        t = [float(r["T_est"]) for r in rows if r["alpha"] == a]
        assert t[1] <= t[0]


def test_focusing_fnls_blows_up(tmp_path, capsys):
    code, out = _run(["run", "--preset", "fnls", "--lambda=-1j", "--x0", "large", "--out", str(tmp_path)], capsys)
    assert code == 0 and "status=blow_up" in out.out


def test_defocusing_fnls_completes(tmp_path, capsys):
    code, out = _run(["run", "--preset", "fnls", "--alpha", "0.6", "--p", "3", "--lambda", "1", "--x0", "large",
                      "--out", str(tmp_path)], capsys)
    assert code == 0 and "status=completed" in out.out


def test_unreachable_threshold_exits_nonzero(tmp_path, capsys):
    # double-precision time runs out before the norm reaches 1e9
    code, out = _run(["run", "--preset", "scalar-cubic", "--blowup-threshold", "1e9", "--out", str(tmp_path)],
                     capsys)
    assert code == 1 and "tolerance_failure" in out.out


def test_dispersive_presets_complete(tmp_path, capsys):
    for name in ("gkdv", "mbo", "saturating"):
        code, out = _run(["run", "--preset", name, "--out", str(tmp_path)], capsys)
        assert code == 0 and "status=completed" in out.out


def test_every_preset_builds():
    for name in PRESETS:
        cfg = RunConfig.from_preset(name)
        assert cfg.sweep_points()


def test_config_errors(tmp_path, capsys):
    with pytest.raises(ValueError):
        RunConfig.from_preset("nope")
    with pytest.raises(ValueError):
        RunConfig.from_dict({"preset": "linear-free", "colour": 1})
    with pytest.raises(ValueError):
        RunConfig.from_preset("linear-free", horizon=-1.0)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"alpha": 0.5}))
    code, out = _run(["run", "--config", str(bad)], capsys)
    assert code == 2 and "error" in out.err
    with pytest.raises(SystemExit):
        main(["run", "--preset", "not-a-preset"])


def test_ml_eval_command(capsys):
    code, out = _run(["ml-eval", "--alpha", "1", "--beta", "1", "--im", "5"], capsys)
    assert code == 0
    val = complex(out.out.splitlines()[0].split(":", 1)[1].strip())
    assert abs(val - complex(0.28366218546322625, -0.9589242746631385)) < 1e-15
    assert "branch: asymptotic" in out.out


def test_frac_commands(capsys):
    code, out = _run(["frac", "integral", "--alpha", "0.5", "--fn", "t", "--N", "4"], capsys)
    lines = out.out.splitlines()
    assert code == 0 and lines[0] == "t,re,im"
    t, v, im = map(float, lines[-1].split(","))
    assert t == 1.0 and abs(v - 0.7522527780636751) < 1e-14 and im == 0.0
    code, out = _run(["frac", "caputo", "--alpha", "0.5", "--fn", "t", "--N", "4"], capsys)
    t, v, _ = map(float, out.out.splitlines()[-1].split(","))
    assert abs(v - 1.1283791670955126) < 1e-14


def test_frac_csv_round_trip(tmp_path, capsys):
    src = tmp_path / "in.csv"
    t = [0.0, 0.25, 0.5, 1.0]
    src.write_text("t,re,im\n" + "".join(f"{x},{x},{-2 * x}\n" for x in t))
    dst = tmp_path / "out.csv"
    code, _ = _run(["frac", "integral", "--alpha", "0.5", "--input", str(src), "--output", str(dst)], capsys)
    assert code == 0
    with open(dst, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["t"]) for r in rows] == t
    # I^0.5 t = t^1.5 / Gamma(2.5), exact for piecewise-linear data
    last = complex(float(rows[-1]["re"]), float(rows[-1]["im"]))
    assert abs(last - (1 - 2j) * 0.7522527780636751) < 1e-14
    bad = tmp_path / "bad.csv"
    bad.write_text("time,value\n0,1\n")
    code, out = _run(["frac", "caputo", "--alpha", "0.5", "--input", str(bad)], capsys)
    assert code == 2 and "expected CSV columns" in out.err


def test_verify_ml(capsys):
    code, out = _run(["verify", "ml"], capsys)
    assert code == 0
    assert out.out.count("PASS") >= 3 and "FAIL" not in out.out
