import json

import numpy as np
import pytest

from sfpa import SeedSpec, gen_spike_model, write_matrix_csv
from sfpa.cli import main


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def spike_csv(tmp_path):
    # theta=3 spike, gamma=0.6 at desk scale: above the detection threshold
    # since the top value concentrates near sqrt((1+9)(0.6+9))/3 = 3.266
    x, _, _ = gen_spike_model(SeedSpec(42), 120, 72, strengths=[3.0])
    path = tmp_path / "spike.csv"
    write_matrix_csv(x, path)
    return path


def test_select_spike_fixture(spike_csv, tmp_path, capsys):
    out_path = tmp_path / "report.json"
    code, out, _ = run_cli(
        ["select", "--input", str(spike_csv), "--seed", "42", "--output", str(out_path)],
        capsys,
    )
    assert code == 0
    assert out.strip() == "1"
    payload = json.loads(out_path.read_text())
    assert payload["results"]["k_hat"] == 1
    assert payload["seed"]["master_seed"] == 42
    assert payload["config"]["trials"] == 10


def test_select_csv_format(spike_csv, tmp_path, capsys):
    out_path = tmp_path / "report.csv"
    code, out, _ = run_cli(
        [
            "select", "--input", str(spike_csv), "--seed", "1",
            "--output", str(out_path), "--format", "csv",
        ],
        capsys,
    )
    assert code == 0
    lines = out_path.read_text().splitlines()
    assert lines[0] == "k,data_sv,threshold,above,k_hat,capped"
    assert len(lines) > 2


def test_select_trials_zero_is_usage_error(spike_csv, capsys):
    code, _, err = run_cli(
        ["select", "--input", str(spike_csv), "--trials", "0"], capsys
    )
    assert code == 2
    assert "trials" in err


def test_select_missing_input_is_io_error(tmp_path, capsys):
    code, _, _ = run_cli(["select", "--input", str(tmp_path / "nope.csv")], capsys)
    assert code == 3


def test_select_parse_error_is_io_error(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3\n")
    code, _, err = run_cli(["select", "--input", str(bad)], capsys)
    assert code == 3
    assert "line 2" in err


def test_select_deterministic_bytes(spike_csv, tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for path in paths:
        code, _, _ = run_cli(
            ["select", "--input", str(spike_csv), "--seed", "7", "--output", str(path)],
            capsys,
        )
        assert code == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_select_preprocess_flag(tmp_path, capsys):
    x = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 7.0]])
    path = tmp_path / "m.csv"
    write_matrix_csv(x, path)
    code, out, _ = run_cli(
        [
            "select", "--input", str(path),
            "--preprocess", "center_columns", "--trials", "3",
        ],
        capsys,
    )
    assert code == 0
    assert out.strip().isdigit()


def test_simulate_smoke_and_determinism(tmp_path, capsys):
    args = [
        "simulate", "--experiment", "homogeneous", "--runs", "2",
        "--theta-grid", "0:3:2", "--seed", "5",
    ]
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    for out_dir in (out_a, out_b):
        code, _, _ = run_cli(args + ["--out-dir", str(out_dir)], capsys)
        assert code == 0
    for name in ("sweep.csv", "sweep.json", "run_config.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
    header = (out_a / "sweep.csv").read_text().splitlines()[0]
    assert header.startswith("theta,method,rule,mean_k,freq_0")


def test_simulate_noise_sv(tmp_path, capsys):
    out_dir = tmp_path / "nsv"
    code, _, _ = run_cli(
        [
            "simulate", "--experiment", "noise-sv", "--runs", "12",
            "--seed", "4", "--out-dir", str(out_dir),
        ],
        capsys,
    )
    assert code == 0
    lines = (out_dir / "noise_sv.csv").read_text().splitlines()
    assert lines[0] == "draw,original,permuted,signflipped"
    assert len(lines) == 13
    payload = json.loads((out_dir / "noise_sv.json").read_text())
    assert len(payload["original"]) == 12


def test_simulate_noise_sv_too_few_draws(tmp_path, capsys):
    code, _, _ = run_cli(
        [
            "simulate", "--experiment", "noise-sv", "--runs", "5",
            "--seed", "4", "--out-dir", str(tmp_path / "x"),
        ],
        capsys,
    )
    assert code == 2


def test_simulate_unknown_experiment(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--experiment", "volcano", "--out-dir", str(tmp_path)])
    assert exc.value.code == 2


def test_simulate_unwritable_out_dir(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, _ = run_cli(
        [
            "simulate", "--experiment", "homogeneous", "--runs", "1",
            "--theta-grid", "0:1:2", "--out-dir", str(blocker / "sub"),
        ],
        capsys,
    )
    assert code == 3


def test_law_row_mp_edge(tmp_path, capsys):
    out = tmp_path / "law.json"
    code, stdout, _ = run_cli(
        [
            "law", "--law", "row", "--gamma", "1", "--atoms", "1:1",
            "--grid", "0.0001:4.8:400", "--output", str(out),
        ],
        capsys,
    )
    assert code == 0
    assert abs(float(stdout.strip()) - 4.0) <= 0.02
    payload = json.loads(out.read_text())
    assert abs(payload["results"]["upper_edge"] - 4.0) <= 0.02
    assert (tmp_path / "law.csv").exists()


def test_law_permuted_scaled_edge(capsys):
    code, stdout, _ = run_cli(
        [
            "law", "--law", "permuted", "--gamma", "0.6", "--atoms", "0.5:1",
            "--grid", "0.0001:2.5:300",
        ],
        capsys,
    )
    assert code == 0
    assert abs(float(stdout.strip()) - 0.5 * (1 + np.sqrt(0.6)) ** 2) <= 0.02


def test_law_bad_weights(capsys):
    code, _, err = run_cli(
        ["law", "--law", "row", "--gamma", "1", "--atoms", "1:0.5"], capsys
    )
    assert code == 2
    assert "weights" in err


def test_diagnose_identity(tmp_path, capsys):
    path = tmp_path / "eye.csv"
    write_matrix_csv(np.eye(8), path)
    out = tmp_path / "diag.json"
    code, _, _ = run_cli(
        ["diagnose", "--input", str(path), "--output", str(out)], capsys
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["results"]["rho_inf"] == pytest.approx(1.6651, abs=1e-4)
    assert payload["results"]["rank"] == 8


def test_diagnose_zero_matrix(tmp_path, capsys):
    path = tmp_path / "zero.csv"
    write_matrix_csv(np.zeros((4, 4)), path)
    out = tmp_path / "diag.json"
    code, _, _ = run_cli(
        ["diagnose", "--input", str(path), "--output", str(out)], capsys
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["results"]["rho_inf"] == 0.0
    assert payload["results"]["two_inf"] == 0.0
    assert payload["results"]["upper_bound_op"] == 0.0


def test_diagnose_flip_trials_one_is_usage_error(tmp_path, capsys):
    path = tmp_path / "m.csv"
    write_matrix_csv(np.eye(3), path)
    code, _, _ = run_cli(
        ["diagnose", "--input", str(path), "--flip-trials", "1"], capsys
    )
    assert code == 2


def test_diagnose_rate_exponents(tmp_path, capsys):
    path = tmp_path / "m.csv"
    write_matrix_csv(np.eye(3), path)
    out = tmp_path / "diag.json"
    code, _, _ = run_cli(
        [
            "diagnose", "--input", str(path),
            "--rate-exponents", "0.3:0:0.2:0:0:0", "--output", str(out),
        ],
        capsys,
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["results"]["rate_regime"]["verdict_l1"] == "converges"
    code, _, _ = run_cli(
        ["diagnose", "--input", str(path), "--rate-exponents", "0.3:0.2"], capsys
    )
    assert code == 2


def test_diagnose_flip_trials(tmp_path, capsys):
    path = tmp_path / "m.csv"
    write_matrix_csv(2.0 * np.eye(5), path)
    out = tmp_path / "diag.json"
    code, _, _ = run_cli(
        [
            "diagnose", "--input", str(path), "--flip-trials", "4",
            "--seed", "3", "--output", str(out),
        ],
        capsys,
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["results"]["flip_norm"]["mean"] == pytest.approx(2.0)
    assert payload["results"]["flip_norm"]["stderr"] == pytest.approx(0.0, abs=1e-12)


def test_console_script_entry_point():
    import subprocess

    proc = subprocess.run(
        ["sfpa", "--help"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    assert "select" in proc.stdout and "diagnose" in proc.stdout


def test_binary_input_round_trip(tmp_path, capsys):
    from sfpa import write_matrix_binary

    x, _, _ = gen_spike_model(SeedSpec(50), 40, 24, strengths=[6.0])
    path = tmp_path / "m.sfpa"
    write_matrix_binary(x, path)
    code, out, _ = run_cli(
        ["select", "--input", str(path), "--seed", "2", "--trials", "5"], capsys
    )
    assert code == 0
    assert out.strip() == "1"
