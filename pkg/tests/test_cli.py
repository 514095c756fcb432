import csv
import json

import numpy as np
import pytest

from gatespeed.cli import main
from gatespeed.model import load_schedule


def run(args):
    return main([str(a) for a in args])


def write_matrix(path, matrix):
    pairs = np.stack([matrix.real, matrix.imag], axis=-1).tolist()
    with open(path, "w") as f:
        json.dump(pairs, f)


def test_kak_cnot(capsys):
    assert run(["kak", "CNOT"]) == 0
    out = capsys.readouterr().out
    assert "71.4" in out


def test_kak_swap_json(capsys):
    assert run(["kak", "SWAP", "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert abs(report["t_min_ns"] - 214.3) < 2.0
    assert report["reconstruction_error"] < 1e-8


def test_kak_identity_matrix_file(tmp_path, capsys):
    path = tmp_path / "identity.json"
    write_matrix(path, np.eye(4, dtype=complex))
    assert run(["kak", "--matrix", path, "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert np.allclose(report["lambda"], 0.0, atol=1e-10)
    assert abs(report["t_min_ns"]) < 1e-9


def test_kak_rejects_bad_gate(capsys):
    assert run(["kak", "XNOT"]) == 2


def test_optimize_native_gate(tmp_path, capsys):
    # the gate H0 realizes natively at pi/(4g) needs no drive at all
    native_cz = tmp_path / "native_cz.json"
    write_matrix(native_cz, np.diag([-1, 1, 1, 1]).astype(complex))
    out = tmp_path / "pulse.json"
    code = run(["optimize", "--matrix", native_cz, "--t-ns", 71.43,
                "--omega-max-mhz", 0, "--segments", 2, "--restarts", 1,
                "--max-iterations", 5, "--out", out])
    assert code == 0
    assert "best fidelity: 1.0" in capsys.readouterr().out
    sched = load_schedule(out)
    assert np.all(sched.amplitudes == 0.0)
    with open(str(out) + ".manifest.json") as f:
        manifest = json.load(f)
    assert manifest["best_fidelity"] > 1 - 1e-9


def test_optimize_non_convergence_exit_code(tmp_path):
    out = tmp_path / "pulse.json"
    code = run(["optimize", "--gate", "SWAP", "--t-ns", 30.0,
                "--omega-max-mhz", 1.0, "--segments", 2, "--restarts", 1,
                "--max-iterations", 10, "--out", out])
    assert code == 3
    assert out.exists()   # partial output still written


def test_sweep_csv(tmp_path):
    out = tmp_path / "sweep.csv"
    code = run(["sweep", "--gate", "CNOT", "--points", 2, "--t-max-ns", 60,
                "--segments", 2, "--restarts", 1, "--max-iterations", 20,
                "--out", out])
    assert code == 0
    with open(out) as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 2
    assert {"t_ns", "best_fidelity", "converged", "best_seed", "wall_ms"} <= set(rows[0])
    assert float(rows[0]["t_ns"]) == 30.0


def test_qpt_simulate_and_reconstruct(tmp_path, capsys):
    counts = tmp_path / "counts.json"
    assert run(["qpt", "simulate", "--gate", "CNOT", "--shots", 200,
                "--seed", 7, "--ideal-readout", "--out", counts]) == 0
    report_path = tmp_path / "report.json"
    assert run(["qpt", "reconstruct", "--counts", counts, "--gate", "CNOT",
                "--ideal-readout", "--out", report_path]) == 0
    report = json.loads(report_path.read_text())
    assert report["fidelity"] > 0.99
    assert report["converged"]
    assert np.asarray(report["ptm"]).shape == (16, 16)


def test_qpt_simulate_deterministic(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    for path in (a, b):
        run(["qpt", "simulate", "--gate", "CZ", "--shots", 100, "--seed", 3,
             "--out", path])
    assert json.loads(a.read_text())["n"] == json.loads(b.read_text())["n"]


def test_robustness_command(tmp_path, capsys):
    pulse = tmp_path / "pulse.json"
    run(["optimize", "--gate", "CNOT", "--t-ns", 93.7, "--segments", 4,
         "--restarts", 2, "--max-iterations", 150, "--out", pulse])
    out = tmp_path / "robust.json"
    assert run(["robustness", "--pulse", pulse, "--gate", "CNOT",
                "--sigma", 0.0, "--trials", 3, "--out", out]) == 0
    payload = json.loads(out.read_text())
    assert payload["std_infidelity"] == 0.0
    with open(str(out) + ".manifest.json") as f:
        assert json.load(f)["seed"] == 0


def test_leakage_command(tmp_path, capsys):
    pulse = tmp_path / "pulse.json"
    run(["optimize", "--gate", "CNOT", "--t-ns", 20.0, "--segments", 2,
         "--restarts", 1, "--max-iterations", 5, "--out", pulse])
    out = tmp_path / "leak.json"
    assert run(["leakage", "--pulse", pulse, "--out", out]) == 0
    payload = json.loads(out.read_text())
    assert 0.0 <= payload["leakage_probability"] <= 1.0
    assert payload["j_coupling_mhz"] > 0


def test_missing_input_file(tmp_path):
    assert run(["robustness", "--pulse", tmp_path / "nope.json",
                "--gate", "CNOT"]) == 2
