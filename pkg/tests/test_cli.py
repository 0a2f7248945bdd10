import csv
import subprocess
import sys

import numpy as np
import pytest

from spikemon.cli import main
from spikemon.core import SymMatrix, read_matrix_stream, read_quantile_table, \
    write_matrix_stream
from spikemon.ingest import PanelSeries, read_panel, write_panel
from spikemon.synth import SignalSpec, WignerStreamSpec, gen_stream


def _streams(tmp_path, spike=None, seed=0, n=8, m=60, k=60):
    w = WignerStreamSpec(n=n, phi_seed=seed, noise_seed=seed + 1)
    mats = gen_stream(w, SignalSpec(), m, m + k)
    if spike is not None:
        x = np.ones(n) / np.sqrt(n)
        mats = mats[:m] + [SymMatrix.from_dense(a.dense() + spike * np.outer(x, x))
                           for a in mats[m:]]
    write_matrix_stream(mats[:m], tmp_path / "train.csv")
    write_matrix_stream(mats[m:], tmp_path / "stream.csv")
    return str(tmp_path / "train.csv"), str(tmp_path / "stream.csv")


def test_quantiles_deterministic_file(tmp_path, capsys):
    args = ["quantiles", "--m", "50", "--T", "50", "--reps", "500", "--alpha", "0.05,0.10",
            "--seed", "7"]
    assert main(args + ["--out", str(tmp_path / "a.csv")]) == 0
    assert main(args + ["--out", str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert len(read_quantile_table(tmp_path / "a.csv").rows) == 2
    assert capsys.readouterr().out.startswith("m,T,alpha,quantile,replications,seed\n")


def test_quantiles_reference_value(tmp_path):
    assert main(["quantiles", "--m", "500", "--T", "500", "--reps", "10000",
                 "--alpha", "0.05,0.10", "--seed", "7", "--out", str(tmp_path / "q.csv")]) == 0
    t = read_quantile_table(tmp_path / "q.csv")
    assert len(t.rows) == 2
    assert t.get(500, 500, 0.05) == pytest.approx(5.85, abs=0.15)


def test_usage_errors(capsys):
    assert main(["quantiles", "--m", "5", "--T", "5", "--reps", "10", "--alpha", "1.5"]) == 2
    assert "alpha" in capsys.readouterr().err
    assert main(["quantiles", "--m", "5"]) == 2
    assert main(["nonsense"]) == 2
    assert main(["quantiles", "--help"]) == 0


def test_monitor_no_alarm_and_alarm(tmp_path, capsys):
    train, stream = _streams(tmp_path)
    trace = tmp_path / "trace.csv"
    assert main(["monitor", "--train", train, "--stream", stream, "--threshold", "50",
                 "--trace", str(trace)]) == 0
    rows = list(csv.reader(trace.open()))
    assert rows[0] == ["k", "gamma"] and len(rows) == 61
    assert "no alarm" in capsys.readouterr().out

    train, stream = _streams(tmp_path, spike=1e3)
    assert main(["monitor", "--train", train, "--stream", stream, "--alpha", "0.05",
                 "--T", "60", "--reps", "2000"]) == 3
    out = capsys.readouterr().out
    assert "alarm at k=1 " in out


def test_monitor_subcritical_mostly_quiet(tmp_path):
    table = tmp_path / "q.csv"
    codes = []
    for seed in range(20):
        train, stream = _streams(tmp_path, seed=10 * seed)
        codes.append(main(["monitor", "--train", train, "--stream", stream, "--alpha", "0.05",
                           "--T", "60", "--reps", "2000", "--quantile-table", str(table)]))
    assert set(codes) <= {0, 3}
    assert codes.count(0) >= 16
    assert len(read_quantile_table(table).rows) == 1


def test_monitor_degenerate(tmp_path):
    const = [SymMatrix(2, [1.0, 0.0, 1.0])] * 5
    write_matrix_stream(const, tmp_path / "t.csv")
    write_matrix_stream(const[:2], tmp_path / "s.csv")
    assert main(["monitor", "--train", str(tmp_path / "t.csv"), "--stream",
                 str(tmp_path / "s.csv"), "--threshold", "5"]) == 4


def test_monitor_io_errors(tmp_path):
    (tmp_path / "bad.csv").write_text("t,i,j,value\n1,2,1,0\n")
    assert main(["monitor", "--train", str(tmp_path / "missing.csv"), "--stream",
                 str(tmp_path / "missing.csv"), "--threshold", "5"]) == 1
    assert main(["monitor", "--train", str(tmp_path / "bad.csv"), "--stream",
                 str(tmp_path / "bad.csv"), "--threshold", "5"]) == 1


def test_synth_file(tmp_path):
    out = tmp_path / "s.csv"
    args = ["synth", "--n", "25", "--m", "400", "--len", "1200", "--law", "uniform",
            "--regime", "super", "--delta", "0.5", "--kstar", "350", "--seed", "1",
            "--out", str(out)]
    assert main(args) == 0
    mats = read_matrix_stream(out)
    assert len(mats) == 1200 and mats[0].n == 25
    first = out.read_bytes()
    assert main(args) == 0
    assert out.read_bytes() == first
    assert main(["synth", "--n", "3", "--m", "4", "--len", "6", "--regime", "super",
                 "--out", str(out)]) == 2


def test_experiment_pfa(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["experiment", "pfa", "--m", "300", "--n", "10", "--alpha", "0.05",
                 "--law", "uniform", "--reps", "200", "--seed", "3", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 1
    assert 0.0 <= float(rows[0]["value"]) <= 0.15
    assert main(["experiment", "power", "--m", "30", "--n", "3", "--reps", "2",
                 "--out", str(out)]) == 2


def test_ingest_pipeline(tmp_path):
    import datetime as dt
    rng = np.random.default_rng(0)
    d0 = dt.date(2015, 1, 1)
    dates = [d0 + dt.timedelta(days=i) for i in range(3 * 365 + 1)]
    vals = 5 + np.sin(np.arange(len(dates))[:, None] / 58.0) + rng.normal(size=(len(dates), 3))
    write_panel(PanelSeries(["a", "b", "c"], dates, vals), tmp_path / "h.csv")
    series = PanelSeries(["a", "b", "c"], dates[-30:], vals[-30:])
    write_panel(series, tmp_path / "s.csv")
    assert main(["ingest", "deseasonalize", "--history", str(tmp_path / "h.csv"),
                 "--series", str(tmp_path / "s.csv"), "--window", "30",
                 "--out", str(tmp_path / "v.csv")]) == 0
    v = read_panel(tmp_path / "v.csv")
    assert v.locations == ("a", "b", "c") and len(v.dates) == 30
    assert np.all(np.abs(v.values) < 6)
    assert main(["ingest", "outer", "--series", str(tmp_path / "v.csv"),
                 "--out", str(tmp_path / "m.csv")]) == 0
    assert len(read_matrix_stream(tmp_path / "m.csv")) == 30
    assert main(["ingest", "center", "--stream", str(tmp_path / "m.csv"), "--baseline", "10",
                 "--out", str(tmp_path / "c.csv")]) == 0
    assert len(read_matrix_stream(tmp_path / "c.csv")) == 20


def test_env_precedence(tmp_path, monkeypatch):
    base = ["quantiles", "--m", "20", "--T", "20", "--reps", "50", "--alpha", "0.1"]
    monkeypatch.setenv("SPIKE_SEED", "9")
    assert main(base + ["--out", str(tmp_path / "env.csv")]) == 0
    assert main(base + ["--seed", "4", "--out", str(tmp_path / "flag.csv")]) == 0
    assert read_quantile_table(tmp_path / "env.csv").rows[0].seed == 9
    assert read_quantile_table(tmp_path / "flag.csv").rows[0].seed == 4
    monkeypatch.setenv("SPIKE_QTABLE", str(tmp_path / "cache.csv"))
    assert main(base) == 0
    assert (tmp_path / "cache.csv").exists()
    monkeypatch.setenv("SPIKE_SEED", "oops")
    assert main(base) == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "spikemon", "quantiles", "--m", "5", "--T", "5",
                        "--reps", "10", "--alpha", "2"], capture_output=True, text=True)
    assert r.returncode == 2
