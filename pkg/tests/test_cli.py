import json

import numpy as np
import pytest

from mpfair.benchmarks import get_problem
from mpfair.cli import main
from mpfair.core import solution_set_to_json
from mpfair.harness import sweep_grid_from_csv


@pytest.fixture
def pop_file(tmp_path):
    problem, _ = get_problem("case2", density=40)
    pop = problem.solution_set(np.array([[3.0, 2.0], [2.5, 2.1]]))
    path = tmp_path / "pop.json"
    path.write_text(solution_set_to_json(pop))
    return path


class TestEvaluate:
    def test_report_to_stdout(self, pop_file, capsys):
        assert main(["evaluate", str(pop_file), "--problem", "case2", "--density", "40"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["psi_np"] > 0
        assert report["provenance"]["reference_density"] == 40

    def test_with_config_file(self, pop_file, tmp_path, capsys):
        cfg = tmp_path / "cfg.toml"
        cfg.write_text('gamma_hat = [0.5, 0.5]\nlambda = [5.0, 5.0]\nC = 100.0\n')
        out = tmp_path / "report.json"
        code = main(
            [
                "evaluate",
                str(pop_file),
                "--problem",
                "case2",
                "--density",
                "40",
                "--config",
                str(cfg),
                "--out",
                str(out),
            ]
        )
        assert code == 0
        report = json.loads(out.read_text())
        assert report["resolved_c"] == 100.0

    def test_unknown_problem_is_config_error(self, pop_file, capsys):
        assert main(["evaluate", str(pop_file), "--problem", "nope"]) == 2
        assert "configuration error" in capsys.readouterr().err


class TestRun:
    def test_plan_outputs(self, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv("MPFAIR_OUTPUT_DIR", raising=False)
        plan = tmp_path / "plan.toml"
        out_dir = tmp_path / "out"
        plan.write_text(
            f'problems = ["case2"]\nalgorithms = ["opt_all", "opt_mpnds"]\n'
            f'repetitions = 1\nmetrics = ["meanIGD", "psi_np"]\nmaster_seed = 2\n'
            f'density = 40\npopulation_size = 8\ngenerations = 2\noutput_dir = "{out_dir}"\n'
        )
        assert main(["run", str(plan)]) == 0
        assert (out_dir / "results.csv").exists()
        assert (out_dir / "summary.csv").exists()
        assert (out_dir / "summary.json").exists()
        assert "case2" in capsys.readouterr().out

    def test_missing_plan_is_config_error(self):
        assert main(["run", "/nonexistent/plan.toml"]) == 2


class TestSweep:
    def test_sweep_outputs_and_emit(self, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv("MPFAIR_OUTPUT_DIR", raising=False)
        sweep = tmp_path / "sweep.toml"
        out_dir = tmp_path / "sweepout"
        sweep.write_text(
            f'problem = "case2"\ndensity = 40.0\n'
            f'gamma = {{start = 0.0, stop = 1.0, num = 5}}\n'
            f'gamma_hat = {{start = 0.0, stop = 1.0, num = 5}}\n'
            f'output_dir = "{out_dir}"\n'
        )
        assert main(["sweep", str(sweep)]) == 0
        csv_text = (out_dir / "sweep.csv").read_text()
        grid = sweep_grid_from_csv(csv_text)
        assert grid.scores.shape == (5, 5)
        capsys.readouterr()
        assert main(["emit", str(out_dir / "sweep.json"), "--format", "csv"]) == 0
        emitted = capsys.readouterr().out
        assert emitted == csv_text


class TestAxioms:
    def test_pass_exit_zero(self, capsys):
        assert main(["axioms", "--trials", "30", "--seed", "1"]) == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 4

    def test_zero_trials_exit_two(self, capsys):
        assert main(["axioms", "--trials", "0"]) == 2

    def test_report_written(self, tmp_path):
        out = tmp_path / "axioms.json"
        assert main(["axioms", "--trials", "10", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["passed"] is True


class TestEmit:
    def test_experiment_summary_emission(self, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv("MPFAIR_OUTPUT_DIR", raising=False)
        plan = tmp_path / "plan.toml"
        out_dir = tmp_path / "out"
        plan.write_text(
            f'problems = ["case1"]\nalgorithms = ["opt_all"]\nrepetitions = 1\n'
            f'metrics = ["meanIGD"]\nmaster_seed = 2\ndensity = 40\n'
            f'population_size = 8\ngenerations = 2\noutput_dir = "{out_dir}"\n'
        )
        main(["run", str(plan)])
        capsys.readouterr()
        assert main(["emit", str(out_dir / "summary.json"), "--format", "csv"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "problem,case,algorithm,metric,statistic,value"
        assert len(lines) > 1

    def test_unrecognized_payload_exit_two(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"foo": 1}))
        assert main(["emit", str(bad)]) == 2
