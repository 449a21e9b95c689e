import json
import subprocess
import sys

import numpy as np
import pytest

from floquet_tomography.cli import main
from floquet_tomography.experiments import EXPERIMENTS
from floquet_tomography.io import csv_body, read_csv, read_trace_sequence, validate, write_matrix
from floquet_tomography.traces import TraceSequence, ordinary_ots
from floquet_tomography.io import write_trace_sequence


@pytest.fixture(scope="module")
def smoke(tmp_path_factory):
    root = tmp_path_factory.mktemp("runs")
    codes = {}
    for name in EXPERIMENTS:
        codes[name] = main(["experiment", name, "--grid-scale", "0.125", "--out", str(root / name)])
    return root, codes


@pytest.mark.parametrize("name", EXPERIMENTS)
def test_experiment_smoke(smoke, name):
    root, codes = smoke
    assert codes[name] == 0
    d = root / name
    rep = json.loads((d / "report.json").read_text())
    validate(rep, "experiment_report")
    assert rep["experiment"] == name and rep["grid_scale"] == 0.125
    for tname, meta in rep["tables"].items():
        path = d / meta["file"]
        first = path.read_text().splitlines()[0]
        assert first.startswith("# generated")
        rows = read_csv(path)
        assert len(rows) == meta["rows"] > 0
        assert list(rows[0].keys()) == meta["columns"]
        for r in rows:
            assert len(r) == len(meta["columns"])
    assert rep["figures"]
    for f in rep["figures"]:
        assert (d / f).stat().st_size > 0


def test_unknown_experiment_exits_2(tmp_path, capsys):
    assert main(["experiment", "no-such-thing", "--out", str(tmp_path)]) == 2
    assert "unknown experiment" in capsys.readouterr().err


def test_empty_grid_exits_2(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[grid]\nE1 = []\n")
    assert main(["experiment", "dtq3-recon", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_bad_flags_exit_2(tmp_path):
    assert main(["experiment", "dtq3-dobs", "--grid-scale", "0", "--out", str(tmp_path)]) == 2
    assert main(["experiment", "dtq3-dobs", "--seed", "-1", "--out", str(tmp_path)]) == 2


def test_experiment_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["experiment", "ssh-winding", "--grid-scale", "0.125", "--seed", "3", "--out", str(d)]) == 0
    for f in a.glob("*.csv"):
        assert csv_body(f) == csv_body(b / f.name)


def test_gen_ots_default(tmp_path, capsys):
    assert main(["gen-ots", "--out", str(tmp_path)]) == 0
    info = json.loads(capsys.readouterr().out)
    seq = read_trace_sequence(info["file"])
    assert len(seq.values) == 6 and seq.dim_hint == 3
    assert abs(seq.values[0] - 2) < 1e-12


def _seq_file(tmp_path, name, values, dim):
    p = tmp_path / f"{name}.csv"
    write_trace_sequence(p, TraceSequence(np.asarray(values, dtype=complex), "Ordinary", "X", None, 0.0, dim))
    return p


def test_reconstruct_examples(tmp_path, capsys):
    p = _seq_file(tmp_path, "d235", ordinary_ots(np.eye(3), np.diag([2.0, 3.0, 5.0]), 11).values, 3)
    assert main(["reconstruct", str(p)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["order"] == 3
    e = [complex(x["re"], x["im"]) for x in rep["e"]]
    assert np.allclose(e, [1, 10, 31, 30], atol=1e-8)
    lam = sorted(x["re"] for x in rep["lambda"])
    assert np.allclose(lam, [2, 3, 5], atol=1e-8)

    z = _seq_file(tmp_path, "zero", np.zeros(9), 3)
    assert main(["reconstruct", str(z)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["order"] == 0 and rep["lambda"] == []

    dp = _seq_file(tmp_path, "dp", ordinary_ots(np.eye(3), np.diag([2.0, 2.0, 5.0]), 11).values, 3)
    assert main(["reconstruct", str(dp)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["order"] == 2 and "warning" in rep


def test_gen_then_reconstruct_short_record(tmp_path, capsys):
    assert main(["gen-ots", "--out", str(tmp_path)]) == 0
    f = json.loads(capsys.readouterr().out)["file"]
    assert main(["reconstruct", f]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["order"] == 3 and rep["order_audit"]["source"] == "dim_hint"


def test_gen_ots_matrix_model(tmp_path, capsys):
    m = tmp_path / "m.json"
    write_matrix(m, np.diag([2.0, 3.0]))
    assert main(["gen-ots", "--model", "matrix", "--file", str(m), "--n-max", "4", "--out", str(tmp_path)]) == 0
    seq = read_trace_sequence(json.loads(capsys.readouterr().out)["file"])
    assert np.allclose(seq.values, [2, 5, 13, 35, 97])


def test_reconstruct_missing_file_exits_2(tmp_path):
    assert main(["reconstruct", str(tmp_path / "absent.csv")]) == 2


def test_deficiency_report(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('[ssh]\nboundary = "OBC"\n[deficiency]\nobservables = ["O_0"]\nQ = 8\n')
    assert main(["deficiency", "--config", str(cfg)]) == 0
    rep = json.loads(capsys.readouterr().out)
    validate(rep, "deficiency_report")
    labels = [c["label"] for c in rep["candidates"]]
    assert labels == ["Q_parity", "Q_chiral"]


def test_plot_scripts(smoke, tmp_path, capsys):
    root, _ = smoke
    d = root / "dtq3-recon"
    assert main(["plot-scripts", str(d)]) == 0
    first = json.loads(capsys.readouterr().out)["scripts"]
    assert first
    before = {f: (d / f).read_text() for f in first}
    assert main(["plot-scripts", str(d)]) == 0
    again = json.loads(capsys.readouterr().out)["scripts"]
    assert again == first and all((d / f).read_text() == before[f] for f in first)
    script = d / first[0]
    subprocess.run([sys.executable, str(script)], cwd=d, check=True)


def test_plot_scripts_missing_csv(tmp_path, capsys):
    assert main(["plot-scripts", str(tmp_path), "--experiment", "dtq3-recon"]) == 2
    assert "recon.csv" in capsys.readouterr().err
    assert main(["plot-scripts", str(tmp_path)]) == 2


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "floquet_tomography.cli", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip()
