import csv
import math

import pytest

from pinnacle_lab.cli import main
from pinnacle_lab.lattice import read_snapshot


def read_rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_simulate_writes_observable_csv_and_snapshots(tmp_path):
    out = tmp_path / "sim.csv"
    snaps = tmp_path / "snaps"
    rc = main(["simulate", "--L", "3", "--beta", "1", "--seed", "4",
               "--burnin", "20", "--sweeps", "10", "--out", str(out),
               "--snapshot-every", "5", "--snapshot-dir", str(snaps)])
    assert rc == 0
    rows = read_rows(out)
    assert rows[0] == ["sweep_index", "max_height", "mean_height", "center_height"]
    assert len(rows) == 11
    files = sorted(snaps.iterdir())
    assert len(files) == 2
    config, params = read_snapshot(files[0])
    assert config.L == 3 and params.beta == 1.0


def test_simulate_rsos(tmp_path):
    out = tmp_path / "sim.csv"
    rc = main(["simulate", "--L", "4", "--p", "inf", "--beta", "2",
               "--burnin", "10", "--sweeps", "5", "--out", str(out)])
    assert rc == 0
    assert len(read_rows(out)) == 6


def test_oracle_cli_single_site(tmp_path):
    out = tmp_path / "oracle.csv"
    rc = main(["oracle", "--L", "1", "--K", "1", "--beta", "1", "--out", str(out)])
    assert rc == 0
    rows = read_rows(out)
    configs = {r[1]: float(r[2]) for r in rows if r[0] == "config"}
    assert len(configs) == 3
    assert max(configs.values()) == pytest.approx(1 / (1 + 2 * math.exp(-4)),
                                                  rel=1e-12)
    tails = {int(r[1]): float(r[2]) for r in rows if r[0] == "marginal_tail_center"}
    assert tails[-1] == 1.0
    assert tails[2] == 0.0


def test_dirichlet_cli(tmp_path):
    out = tmp_path / "dir.csv"
    rc = main(["dirichlet", "--r", "5", "--h", "1", "--out", str(out)])
    assert rc == 0
    rows = read_rows(out)
    summary = {r[1]: float(r[2]) for r in rows if r[0] == "summary"}
    assert summary["I_r(h)"] == pytest.approx(summary["identity_value"], rel=1e-8)
    assert summary["exit_time"] >= 25.0


def test_kernel_cli(tmp_path):
    out = tmp_path / "kernel.csv"
    rc = main(["kernel", "--R", "8", "--out", str(out)])
    assert rc == 0
    rows = read_rows(out)
    table = {(int(r[0]), int(r[1])): float(r[2]) for r in rows[1:]}
    assert table[(0, 0)] == 0.0
    assert table[(1, 0)] == pytest.approx(1.0, abs=5e-3)


def test_pvar_cli(tmp_path):
    out = tmp_path / "pvar.csv"
    rc = main(["pvar", "--p", "2", "--R", "4", "--tol", "1e-8",
               "--out", str(out)])
    assert rc == 0
    rows = read_rows(out)
    summary = {r[1]: float(r[2]) for r in rows if r[0] == "summary"}
    assert summary["energy"] > 0
    assert summary["residual"] <= 1e-8


def test_nested_probe_cli(tmp_path):
    out = tmp_path / "probe.csv"
    rc = main(["nested-probe", "--h", "2", "--p", "3", "--budget", "200",
               "--out", str(out)])
    assert rc == 0
    rows = {r[0]: r[1] for r in read_rows(out)[1:]}
    assert float(rows["energy"]) == pytest.approx(16.0)


def test_asm_cli_modes(tmp_path):
    out = tmp_path / "asm.csv"
    for mode, expected in (("enumerate", 7), ("formula", 7), ("sixvertex", 7)):
        rc = main(["asm", "--h", "3", "--mode", mode, "--out", str(out)])
        assert rc == 0
        assert int(read_rows(out)[1][2]) == expected


def test_asm_dump_bijection(tmp_path):
    out = tmp_path / "bij"
    rc = main(["asm", "--h", "2", "--dump-bijection", str(out)])
    assert rc == 0
    files = sorted(out.iterdir())
    assert len(files) == 2
    text = files[0].read_text()
    assert "asm:" in text and "six-vertex" in text


def test_predict_cli(tmp_path):
    out = tmp_path / "pred.csv"
    rc = main(["predict", "--p", "2", "--beta", "1", "--L", "1e6", "1e9",
               "--out", str(out)])
    assert rc == 0
    rows = read_rows(out)
    assert rows[0][0] == "L"
    assert len(rows) == 3
    assert float(rows[1][4]) == pytest.approx(
        math.sqrt(math.log(1e6) * math.log(math.log(1e6)) / (2 * math.pi)))


def test_predict_cli_empirical_backend(tmp_path):
    tail_csv = tmp_path / "tail.csv"
    tail_csv.write_text("h,tail\n1,0.5\n2,0.01\n3,0.0001\n")
    out = tmp_path / "pred.csv"
    rc = main(["predict", "--p", "2", "--beta", "1", "--L", "100",
               "--backend", "empirical", "--tail-csv", str(tail_csv),
               "--out", str(out)])
    assert rc == 0
    rows = read_rows(out)
    # threshold log(100)^5/100^2 = 0.205: M = 1; 5/L = 0.05: H = 1
    assert rows[1][1] == "1" and rows[1][2] == "1"


def test_analyze_cli(tmp_path):
    sim_out = tmp_path / "sim.csv"
    snaps = tmp_path / "snaps"
    main(["simulate", "--L", "8", "--beta", "1", "--seed", "2", "--burnin",
          "50", "--sweeps", "4", "--out", str(sim_out),
          "--snapshot-every", "2", "--snapshot-dir", str(snaps)])
    snap = sorted(snaps.iterdir())[0]
    out = tmp_path / "analysis.csv"
    rc = main(["analyze", "--snapshot", str(snap), "--levels=-1:2",
               "--out", str(out)])
    assert rc == 0
    rows = read_rows(out)
    assert rows[0][0] == "h"
    assert len(rows) == 5


def test_experiment_cli(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("experiment = MAX_HEIGHT\nbeta = 1\nL = 8\ntrials = 2\n"
                   "seed = 1\nburnin = 30\nsamples = 10\n")
    rc = main(["experiment", "--config", str(cfg), "--out-dir",
               str(tmp_path / "results")])
    assert rc == 0
    assert (tmp_path / "results" / "max_height_rows.csv").exists()
    assert (tmp_path / "results" / "max_height_summary.csv").exists()


def test_exit_codes(tmp_path):
    # config error -> 2
    assert main(["simulate", "--L", "3", "--beta", "-1", "--out",
                 str(tmp_path / "x.csv")]) == 2
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("experiment = NOPE\nbeta = 1\nL = 8\n")
    assert main(["experiment", "--config", str(cfg)]) == 2
    # budget exceeded -> 4
    assert main(["oracle", "--L", "4", "--K", "4", "--beta", "1", "--out",
                 str(tmp_path / "y.csv")]) == 4
    assert main(["asm", "--h", "9", "--mode", "sixvertex"]) == 4
