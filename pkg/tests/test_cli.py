import json
import subprocess
import sys

import pytest

from optcurve._io import read_csv
from optcurve.cli import ExperimentConfig, dispatch, main


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def test_run_gd_square(tmp_path, capsys):
    assert run(tmp_path, "run-gd", "--fn", "square", "--x0", "3", "--eta", "0.1", "--steps", "20") == 0
    rows = read_csv(tmp_path / "trajectory.csv")
    assert [float(r["f"]) for r in rows[:3]] == pytest.approx([9, 5.76, 3.6864], abs=1e-13)
    assert len(rows) == 21
    side = json.loads((tmp_path / "trajectory.json").read_text())
    assert side["source"] == "GradientDescent" and side["eta"] == 0.1
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["convex"] and report["monotone_decreasing"]
    meta = json.loads((tmp_path / "metadata.json").read_text())
    assert meta["config"]["fn"] == "square" and meta["version"] and "tolerances" in meta
    assert "convex=True" in capsys.readouterr().out


def test_run_gd_nonsmooth_example(tmp_path):
    assert run(tmp_path, "run-gd", "--fn", "absrelu", "--x0", "-0.25", "--eta", "1", "--steps", "2") == 0
    rows = read_csv(tmp_path / "trajectory.csv")
    assert [float(r["f"]) for r in rows] == [0.25, 1.5, 1.25]
    report = json.loads((tmp_path / "report.json").read_text())
    assert not report["convex"] and not report["monotone_decreasing"]


def test_run_gd_divergence_is_reported(tmp_path, capsys):
    assert run(tmp_path, "run-gd", "--fn", "square", "--x0", "3", "--eta", "3", "--steps", "5000") == 0
    assert "diverged" in capsys.readouterr().out
    assert (tmp_path / "trajectory.csv").exists()


def test_counterexample(tmp_path):
    assert run(tmp_path, "counterexample", "--eta", "1.9") == 0
    rec = json.loads((tmp_path / "counterexample.json").read_text())
    assert rec["violated"] is True
    assert rec["f"] == pytest.approx([1.62, 1.12, 0.0392], abs=1e-12)


def test_counterexample_precondition(tmp_path, capsys):
    assert run(tmp_path, "counterexample", "--eta", "1.5") == 2
    assert "eta must lie in (1.75, 2)" in capsys.readouterr().err


def test_unknown_function(tmp_path, capsys):
    assert run(tmp_path, "run-gd", "--fn", "nope", "--x0", "1", "--eta", "0.1") == 2
    assert "unknown function" in capsys.readouterr().err


def test_missing_flag(tmp_path, capsys):
    assert run(tmp_path, "run-gd", "--fn", "square", "--x0", "1") == 2
    assert "--eta" in capsys.readouterr().err


def test_bad_flag_exits_2(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["scan", "--bogus"])
    assert exc.value.code == 2


def test_scan_counterexample(tmp_path, capsys):
    assert run(tmp_path, "scan", "--fn", "huber", "--x0", "-1.8", "--grid", "50", "--steps", "10") == 0
    summary = json.loads((tmp_path / "scan.json").read_text())
    assert summary["empirical_threshold"] == pytest.approx(1.75, abs=1e-6)
    assert read_csv(tmp_path / "scan.csv")[0]["convex"] == "true"


def test_scan_precondition(tmp_path):
    assert run(tmp_path, "scan", "--fn", "huber", "--x0", "-1.8", "--eta-min", "0.5", "--eta-max", "2.5") == 2


def test_run_flow(tmp_path, capsys):
    args = ("run-flow", "--fn", "quad_diag=1", "--x0", "1", "--horizon", "1", "--eta", "0.1", "--step-h", "0.001")
    assert run(tmp_path, *args) == 0
    summary = json.loads((tmp_path / "flow_summary.json").read_text())
    assert summary["euler_sup_error"] == pytest.approx(0.0192, abs=1e-4)
    assert summary["euler_error_bound"] == pytest.approx(0.3694528049, abs=1e-9)
    assert read_csv(tmp_path / "flow.csv")[-1]["t"] == "1.0"
    assert (tmp_path / "euler.csv").exists()


def test_run_flow_rejects_large_step(tmp_path):
    assert run(tmp_path, "run-flow", "--fn", "square", "--x0", "1", "--horizon", "1", "--step-h", "0.5") == 2


def test_verify_small(tmp_path, capsys):
    assert run(tmp_path, "verify", "--seed", "3", "--trials", "5") == 0
    assert "6/6 theorem checks passed" in capsys.readouterr().out
    data = json.loads((tmp_path / "verify.json").read_text())
    assert data["passed"] and data["counts"]["T3.1"] == 5


def test_verify_zero_trials(tmp_path):
    assert run(tmp_path, "verify", "--trials", "0") == 2


def test_fuzz(tmp_path):
    assert run(tmp_path, "fuzz", "--seed", "0", "--trials", "200", "--mode", "danger", "--family", "huber") == 0
    lines = (tmp_path / "violations.jsonl").read_text().splitlines()
    summary = json.loads((tmp_path / "fuzz_summary.json").read_text())
    assert summary["violating_trials"] == len(lines) > 0
    assert all(json.loads(line)["monotone"] for line in lines)


def test_fuzz_workers_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    common = ("fuzz", "--seed", "5", "--trials", "300", "--mode", "danger", "--family", "pq1d")
    assert main([*common, "--workers", "1", "--out", str(a)]) == 0
    assert main([*common, "--workers", "4", "--out", str(b)]) == 0
    for name in ("violations.jsonl", "fuzz_summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_config_file_and_override(tmp_path):
    conf = tmp_path / "run.cfg"
    conf.write_text("# square run\ncommand=run-gd\nfn=square\nx0=3\neta=0.3\nsteps=4\n")
    out = tmp_path / "o"
    assert main(["run-gd", "--config", str(conf), "--eta", "0.1", "--out", str(out)]) == 0
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["config"]["eta"] == 0.1 and meta["config"]["steps"] == 4
    again = ExperimentConfig.from_text((out / "config.txt").read_text())
    assert again.eta == 0.1 and again.x0 == (3.0,)


def test_config_round_trip():
    cfg = ExperimentConfig("scan", fn="lse_seed=0_m=4_n=2", x0=(0.1, -1 / 3), eta_min=0.01, eta_max=0.7,
                           steps=10, grid=7, out="x/y", tol=1e-12)
    assert ExperimentConfig.from_text(cfg.to_text()) == cfg


def test_config_rejects_unknown_key(tmp_path):
    conf = tmp_path / "bad.cfg"
    conf.write_text("command=verify\ncolour=blue\n")
    assert main(["verify", "--config", str(conf), "--out", str(tmp_path)]) == 2


def test_dispatch_direct(tmp_path):
    cfg = ExperimentConfig("counterexample", eta=1.8, out=str(tmp_path))
    assert dispatch(cfg) == 0
    assert json.loads((tmp_path / "counterexample.json").read_text())["f"][1] == pytest.approx(0.94)


def test_module_entry_point(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "optcurve", "counterexample", "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert res.returncode == 0
    assert "eta=1.9" in res.stdout
