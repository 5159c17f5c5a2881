import csv
import io
import json
import subprocess
import sys

import pytest

from gspoisson.cli import ExperimentConfig, UsageError, main, run_experiment, run_trial
from gspoisson.instances import CoverageInstance, random_coverage


def _generate(tmp_path, name, *args):
    out = tmp_path / name
    assert main(["generate", *args, "--out", str(out)]) == 0
    return out


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_generate_is_deterministic(tmp_path):
    a = _generate(tmp_path, "a.json", "--kind", "coverage", "--n", "12", "--k", "3", "--seed", "7")
    b = _generate(tmp_path, "b.json", "--kind", "coverage", "--n", "12", "--k", "3", "--seed", "7")
    assert a.read_bytes() == b.read_bytes()
    data = json.loads(a.read_text())
    assert [e["id"] for e in data["elements"]] == list(range(12))
    assert sorted(e for p in data["parts"] for e in p) == list(range(12))


def test_welfare_shape(tmp_path):
    path = _generate(tmp_path, "w.json", "--kind", "welfare", "--players", "2", "--items", "3")
    inst = CoverageInstance.from_json(json.loads(path.read_text()))
    assert inst.n == 6
    assert len(inst.parts) == 3 and all(len(p) == 2 for p in inst.parts)


def test_gap_shape(tmp_path):
    path = _generate(tmp_path, "g.json", "--kind", "gap", "--bins", "2", "--n", "3")
    data = json.loads(path.read_text())
    assert data["bins"] == 2 and data["items"] == 3
    assert len(data["values"]) == 2 and all(len(r) == 3 for r in data["values"])
    assert len(data["sizes"]) == 2 and all(len(r) == 3 for r in data["sizes"])


def test_coverage_json_round_trip():
    inst = random_coverage(8, 3, 2, bound=2)
    back = CoverageInstance.from_json(inst.to_json())
    assert back.covers == inst.covers and back.parts == inst.parts and back.bounds == inst.bounds


@pytest.mark.parametrize("algo", ["gsp-F", "gsp-bandit", "rrg", "greedy-baseline"])
def test_solve_is_byte_identical_without_timing(tmp_path, capsys, algo):
    inst = _generate(tmp_path, "c.json", "--kind", "coverage", "--n", "8", "--k", "3", "--seed", "1")
    outputs = []
    for name in ("x.csv", "y.csv"):
        out = tmp_path / name
        assert main(["solve", "--instance", str(inst), "--algo", algo, "--trials", "2",
                     "--epsilon", "0.2", "--seed", "3", "--no-timing", "--out", str(out)]) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_summary_row(tmp_path, capsys):
    inst = _generate(tmp_path, "c.json", "--kind", "coverage", "--n", "8", "--k", "3", "--seed", "2")
    assert main(["solve", "--instance", str(inst), "--algo", "gsp-F", "--trials", "5",
                 "--epsilon", "0.1"]) == 0
    rows = _rows(capsys.readouterr().out)
    data, summary = rows[:-1], rows[-1]
    assert [r["seed"] for r in data] == ["0", "1", "2", "3", "4"]
    assert summary["seed"] == "summary"
    mean = sum(float(r["value"]) for r in data) / len(data)
    assert float(summary["value"]) == pytest.approx(mean)
    assert float(summary["threshold"]) > 0 and summary["guarantee"]


def test_single_trial_reproduces_its_row():
    data = random_coverage(8, 3, 5).to_json()
    config = ExperimentConfig("gsp-F", data, 0.1, trials=4, seed=10, timing=False)
    rows, _ = run_experiment(config)
    alone = ExperimentConfig("gsp-F", data, 0.1, trials=1, seed=12, timing=False)
    assert run_trial(alone, 0) == rows[2]


def test_gap_solve(tmp_path, capsys):
    inst = _generate(tmp_path, "g.json", "--kind", "gap", "--bins", "2", "--n", "3")
    assert main(["solve", "--instance", str(inst), "--algo", "sap", "--trials", "3"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert len(rows) == 4 and float(rows[-1]["threshold"]) > 0


def test_bench(tmp_path, capsys):
    inst = _generate(tmp_path, "c.json", "--kind", "coverage", "--n", "8", "--k", "3")
    assert main(["bench", "--instance", str(inst), "--trials", "2"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [r["algo"] for r in rows] == ["gsp-F", "rrg", "greedy-baseline"]


def test_verify_exact_pass(tmp_path, capsys):
    inst = _generate(tmp_path, "c.json", "--kind", "coverage", "--n", "6", "--k", "2")
    assert main(["verify", "--instance", str(inst), "--algo", "gsp-F"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["passed"] and report["estimate"] == "exact"


def test_verify_generalized(tmp_path, capsys):
    inst = _generate(tmp_path, "c.json", "--kind", "coverage", "--n", "5", "--k", "2",
                     "--bound", "2")
    assert main(["verify", "--instance", str(inst), "--algo", "gsp-genF", "--trials", "200",
                 "--t-grid", "0.3,0.7"]) == 0
    assert json.loads(capsys.readouterr().out)["estimate"] == "monte_carlo"


def test_usage_errors_exit_2(tmp_path, capsys):
    assert main(["solve", "--instance", str(tmp_path / "missing.json"), "--algo", "rrg"]) == 2
    inst = _generate(tmp_path, "c.json", "--kind", "coverage", "--n", "6", "--k", "2")
    assert main(["solve", "--instance", str(inst), "--algo", "rrg", "--trials", "0"]) == 2
    assert main(["solve", "--instance", str(inst), "--algo", "sap"]) == 2
    assert main(["solve", "--instance", str(inst), "--algo", "gsp-bandit",
                 "--epsilon", "0.3"]) == 2
    gen = _generate(tmp_path, "g.json", "--kind", "coverage", "--n", "6", "--k", "2",
                    "--bound", "2")
    assert main(["solve", "--instance", str(gen), "--algo", "gsp-F"]) == 2


def test_force_runs_out_of_range(tmp_path, capsys):
    inst = _generate(tmp_path, "c.json", "--kind", "coverage", "--n", "6", "--k", "2")
    assert main(["solve", "--instance", str(inst), "--algo", "gsp-bandit", "--epsilon", "0.3",
                 "--force"]) == 0


def test_config_rejects_bad_values():
    with pytest.raises(UsageError):
        ExperimentConfig("nope", {})
    with pytest.raises(UsageError):
        ExperimentConfig("rrg", {}, trials=0)


def test_parallel_workers_match_serial():
    data = random_coverage(8, 3, 5).to_json()
    config = ExperimentConfig("gsp-F", data, 0.1, trials=4, seed=0, timing=False)
    assert run_experiment(config, workers=2)[0] == run_experiment(config, workers=1)[0]


def test_module_entry_point(tmp_path):
    out = tmp_path / "c.json"
    proc = subprocess.run([sys.executable, "-m", "gspoisson", "generate", "--kind", "gap",
                           "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0 and out.exists()
