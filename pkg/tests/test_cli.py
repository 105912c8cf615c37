import csv
import json

import pytest

from hwqaoa.cli import EXIT_BUDGET, EXIT_FAILED, EXIT_INPUT, EXIT_OK, main
from hwqaoa.graphs import Graph, ProblemInstance, save_instances


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def k4_file(tmp_path, k4):
    path = tmp_path / "k4.json"
    save_instances(path, ProblemInstance(k4, "densest", 2))
    return str(path)


def test_run_k4_ratio_one(capsys, k4_file):
    code, out, _ = run(capsys, "run", "--instance", k4_file, "--variant", "Clique-Obj",
                       "--angles", '{"betas": [0.3], "gammas": [0.7]}')
    assert code == EXIT_OK
    assert json.loads(out)["approx_ratio"] == pytest.approx(1.0)


def test_run_missing_threshold(capsys, k4_file):
    code, _, err = run(capsys, "run", "--instance", k4_file, "--variant", "Grover-Th",
                       "--angles", '{"betas": [3.14], "gammas": [3.14]}')
    assert code == EXIT_INPUT and "--threshold" in err


def test_run_p0_dicke_metrics(capsys):
    code, out, _ = run(capsys, "run", "--n", "8", "--seed", "3", "--p", "0")
    res = json.loads(out)
    assert code == EXIT_OK and res["p"] == 0 and len(res["per_round_ratios"]) == 1


def test_run_state_dump(capsys, tmp_path, k4_file):
    dump = tmp_path / "state.csv"
    code, _, _ = run(capsys, "run", "--instance", k4_file, "--variant", "Ring-Th",
                     "--threshold", "0", "--angles", '{"betas": [0.5], "gammas": [1.0]}',
                     "--state-csv", str(dump))
    rows = list(csv.DictReader(dump.open()))
    assert code == EXIT_OK and len(rows) == 6
    assert rows[0]["bitstring"] == "0011"
    assert sum(float(r["probability"]) for r in rows) == pytest.approx(1.0, abs=1e-12)


def test_budget_exit_code(capsys):
    assert run(capsys, "run", "--n", "40", "--p", "0")[0] == EXIT_BUDGET
    code, _, err = run(capsys, "run", "--n", "16", "--variant", "Clique-Obj",
                       "--angles", '{"betas": [0.1], "gammas": [0.1]}')
    assert code == EXIT_BUDGET and "budget" in err


@pytest.mark.parametrize("argv", [
    ("run", "--n", "6", "--variant", "Line-Obj", "--p", "0"),
    ("run", "--n", "6", "--angles", "{not json"),
    ("run", "--n", "6", "--angles", '{"betas": [1, 2], "gammas": [1]}'),
    ("run", "--instance", "/nonexistent.json", "--p", "0"),
    ("run", "--n", "5", "--kind", "bisection", "--k", "2", "--p", "0"),
    ("experiment", "--n", "4", "--target", "1.5"),
])
def test_malformed_input(capsys, tmp_path, argv):
    assert main(list(argv) + ["--out-dir", str(tmp_path)]) == EXIT_INPUT


def test_config_file_and_env_override(capsys, tmp_path, monkeypatch):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 6, "kind": "cover", "p": 0}))
    code, out, _ = run(capsys, "run", "--config", str(cfg))
    assert json.loads(out)["kind"] == "cover" and json.loads(out)["n"] == 6
    monkeypatch.setenv("HWQAOA_N", "8")
    code, out, _ = run(capsys, "run", "--config", str(cfg))
    assert json.loads(out)["n"] == 8
    code, out, _ = run(capsys, "run", "--config", str(cfg), "--n", "4")
    assert json.loads(out)["n"] == 4


def test_gen_instances(capsys, tmp_path):
    code, out, _ = run(capsys, "gen-instances", "--n", "6,8", "--count", "3", "--seed", "5",
                       "--kind", "cover", "--out-dir", str(tmp_path))
    files = json.loads(out)["written"]
    assert code == EXIT_OK and len(files) == 2
    data = json.loads(open(files[1]).read())
    assert len(data) == 3 and data[0]["n"] == 8 and data[0]["kind"] == "cover"


def test_tune(capsys):
    code, out, _ = run(capsys, "tune", "--n", "6", "--variant", "Grover-Th", "--target", "0.95")
    res = json.loads(out)
    assert code == EXIT_OK and res["strategy"] == "pi" and "0.95" in res["rounds_to_target"]


def test_experiment_fit_plot_data(capsys, tmp_path):
    out_dir = str(tmp_path / "exp")
    args = ("experiment", "--n", "4,6,8,10", "--variant", "Grover-Th", "--instances", "4",
            "--target", "0.95", "--p-max", "100", "--out-dir", out_dir, "--jobs", "1")
    code, out, _ = run(capsys, *args)
    assert code == EXIT_OK and json.loads(out)["records"] == 64 + 12
    summary_before = (tmp_path / "exp" / "summary.csv").read_text()
    code, out, err = run(capsys, *args)
    assert code == EXIT_OK and err == ""
    assert (tmp_path / "exp" / "summary.csv").read_text() == summary_before

    code, out, _ = run(capsys, "fit", "--out-dir", out_dir, "--ansatz", "power")
    fits = json.loads(out)
    assert code == EXIT_OK and fits[0]["variant"] == "Grover-Th" and fits[0]["dof"] == 1
    code, _, err = run(capsys, "fit", "--out-dir", out_dir, "--expect-hash", "0" * 16)
    assert code == EXIT_INPUT and "does not match" in err

    code, out, _ = run(capsys, "plot-data", "--out-dir", out_dir, "--ansatz", "monomial",
                       "--samples", "7")
    rows = list(csv.DictReader(open(json.loads(out)["tidy"])))
    assert {"n", "variant", "mean", "stddev", "fit_curve_value"} <= set(rows[0])
    assert [int(r["n"]) for r in rows] == [4, 6, 8, 10]
    curve = list(csv.DictReader(open(json.loads(out)["curves"])))
    assert len(curve) == 7 and curve[0]["config_hash"] == rows[0]["config_hash"]


def test_fit_refuses_mixed_summaries(capsys, tmp_path):
    for seed in (0, 1):
        run(capsys, "experiment", "--n", "4,6", "--variant", "Grover-Th", "--instances", "2",
            "--seed", str(seed), "--out-dir", str(tmp_path / f"s{seed}"), "--jobs", "1")
    code, _, err = run(capsys, "fit", "--summary", str(tmp_path / "s0" / "summary.csv"),
                       "--summary", str(tmp_path / "s1" / "summary.csv"))
    assert code == EXIT_INPUT and "different configs" in err


def test_experiment_refuses_other_config_in_out_dir(capsys, tmp_path):
    base = ("experiment", "--n", "6", "--variant", "Grover-Th", "--instances", "2",
            "--out-dir", str(tmp_path), "--jobs", "1")
    assert run(capsys, *base)[0] == EXIT_OK
    assert run(capsys, *base, "--seed", "3")[0] == EXIT_INPUT
    assert run(capsys, *base, "--seed", "3", "--fresh")[0] == EXIT_OK


def test_validate_pass_and_negative_control(capsys):
    code, out, _ = run(capsys, "validate", "--n", "4,6", "--draws", "2")
    assert code == EXIT_OK and out.count("PASS") == 6
    code, out, _ = run(capsys, "validate", "--n", "4,6", "--draws", "2", "--corrupt-mixer",
                       "grover")
    assert code == EXIT_FAILED
    failed = {line.split()[0] for line in out.splitlines() if line.endswith("FAIL")}
    assert failed == {"Grover-Obj", "Grover-Th"}
