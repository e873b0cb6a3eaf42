import json

import numpy as np
import pytest

from mpfair.core import ConfigError
from mpfair.fairness import ConcessionConfig, ConcessionContext, nash_scores
from mpfair.harness import (
    BandPopulationGenerator,
    ExperimentPlan,
    InvariantViolation,
    SweepGrid,
    cell_seed,
    check_sweep_invariants,
    emit_plot_data,
    load_sweep_file,
    permute_reference,
    permute_solution_set,
    run_asymmetric_sweep,
    run_axiom_suite,
    run_experiment,
    run_sweep,
    sweep_grid_from_csv,
)


@pytest.fixture
def tiny_plan(tmp_path):
    return ExperimentPlan(
        problems=("case2",),
        algorithms=("opt_all", "opt_mpnds"),
        repetitions=2,
        metrics=("meanIGD", "psi_np"),
        output_dir=str(tmp_path / "out"),
        master_seed=7,
        density=60,
        population_size=16,
        generations=8,
    )


class TestPlan:
    def test_validation(self):
        with pytest.raises(ConfigError):
            ExperimentPlan(problems=("case1",), repetitions=0)
        with pytest.raises(ConfigError):
            ExperimentPlan(problems=("case1",), metrics=("bogus",))
        with pytest.raises(ConfigError):
            ExperimentPlan(problems=("case1",), algorithms=("nsga3",))

    def test_from_toml(self, tmp_path):
        path = tmp_path / "plan.toml"
        path.write_text(
            'problems = ["case1"]\nalgorithms = ["opt_all"]\nrepetitions = 3\n'
            'metrics = ["meanIGD"]\nmaster_seed = 5\npopulation_size = 8\ngenerations = 2\n'
            "[concession]\ngamma_hat = [0.5, 0.5]\nlambda = [2.0, 2.0]\nC = \"auto\"\n"
        )
        plan = ExperimentPlan.from_file(path)
        assert plan.repetitions == 3
        assert plan.gamma_hat == (0.5, 0.5)
        assert plan.lambdas == (2.0, 2.0)

    def test_cell_seed_stable_and_distinct(self):
        s = cell_seed(42, 0, 1, 3)
        assert s == cell_seed(42, 0, 1, 3)
        assert s != cell_seed(42, 0, 1, 4)
        assert s != cell_seed(43, 0, 1, 3)


class TestRunExperiment:
    def test_shape_contract(self, tiny_plan):
        result = run_experiment(tiny_plan)
        psi_rows = [r for r in result.summary_rows if r["metric"] == "psi_np"]
        assert len(psi_rows) == 2  # one per algorithm
        for row in psi_rows:
            assert set(row) == {"problem", "case", "metric", "algorithm", "mean", "std", "runs", "winner"}
            assert row["runs"] == 2
        assert sum(r["winner"] for r in psi_rows) == 1

    def test_single_repetition_reports_zero_std(self, tmp_path):
        plan = ExperimentPlan(
            problems=("case1",),
            algorithms=("opt_all",),
            repetitions=1,
            metrics=("meanIGD",),
            master_seed=1,
            density=40,
            population_size=8,
            generations=2,
        )
        result = run_experiment(plan)
        rows = [r for r in result.summary_rows if r["metric"] == "meanIGD"]
        assert rows and all(r["std"] == 0.0 for r in rows)

    def test_aggregation_matches_naive_recomputation(self, tiny_plan):
        result = run_experiment(tiny_plan)
        for row in result.summary_rows:
            vals = [
                r["value"]
                for r in result.run_rows
                if r["problem"] == row["problem"]
                and r["case"] == row["case"]
                and r["metric"] == row["metric"]
                and r["scope"] == "aggregate"
                and r["algorithm"] == row["algorithm"]
            ]
            assert row["mean"] == pytest.approx(np.mean(vals))
            assert row["std"] == pytest.approx(np.std(vals))

    def test_outputs_byte_identical_across_runs(self, tiny_plan, tmp_path):
        result1 = run_experiment(tiny_plan)
        first = (result1.output_dir / "results.csv").read_bytes()
        summary1 = (result1.output_dir / "summary.csv").read_bytes()
        result2 = run_experiment(tiny_plan)
        assert (result2.output_dir / "results.csv").read_bytes() == first
        assert (result2.output_dir / "summary.csv").read_bytes() == summary1

    def test_workers_do_not_change_bytes(self, tiny_plan):
        seq = run_experiment(tiny_plan, workers=1)
        seq_bytes = (seq.output_dir / "results.csv").read_bytes()
        par = run_experiment(tiny_plan, workers=2)
        assert (par.output_dir / "results.csv").read_bytes() == seq_bytes

    def test_concession_grid_adds_cases(self, tmp_path):
        plan = ExperimentPlan(
            problems=("case2",),
            algorithms=("opt_all",),
            repetitions=1,
            metrics=("psi_np",),
            concession_grid=((0.0, 0.0), (0.5, 0.5)),
            master_seed=3,
            density=40,
            population_size=8,
            generations=2,
        )
        result = run_experiment(plan)
        assert {r["case"] for r in result.summary_rows} == {"gh0", "gh1"}

    def test_comparative_metric_rows(self, tmp_path):
        plan = ExperimentPlan(
            problems=("case2",),
            algorithms=("opt_all", "opt_mpnds"),
            repetitions=2,
            metrics=("comparative",),
            master_seed=9,
            density=40,
            population_size=8,
            generations=2,
        )
        result = run_experiment(plan)
        rows = [r for r in result.run_rows if r["metric"] == "comparative"]
        assert len(rows) == 4
        assert all(0.0 < r["value"] <= 1.0 for r in rows)
        # a set that wins every party's column within its repetition scores 1
        by_rep = {}
        for r in rows:
            by_rep.setdefault(r["run"], []).append(r["value"])
        for vals in by_rep.values():
            assert max(vals) > 0.5

    def test_env_overrides(self, tiny_plan, tmp_path, monkeypatch):
        override = tmp_path / "env-out"
        monkeypatch.setenv("MPFAIR_OUTPUT_DIR", str(override))
        result = run_experiment(tiny_plan)
        assert result.output_dir == override
        assert (override / "summary.json").exists()

    def test_worker_count_env_override(self, tiny_plan, tmp_path, monkeypatch):
        baseline = run_experiment(tiny_plan, workers=1)
        expected = (baseline.output_dir / "results.csv").read_bytes()
        monkeypatch.setenv("MPFAIR_WORKERS", "2")
        result = run_experiment(tiny_plan)  # workers=None picks up the env var
        assert (result.output_dir / "results.csv").read_bytes() == expected

    def test_unknown_problem_recorded_not_raised(self, tmp_path):
        plan = ExperimentPlan(
            problems=("case1", "missing-problem"),
            algorithms=("opt_all",),
            repetitions=1,
            metrics=("meanIGD",),
            master_seed=1,
            density=40,
            population_size=8,
            generations=2,
        )
        result = run_experiment(plan)
        assert any("missing-problem" == e["problem"] for e in result.errors)
        assert any(r["problem"] == "case1" for r in result.summary_rows)


class TestBandGenerator:
    def test_populations_respect_requested_level(self, case2):
        problem, ref = case2
        gen = BandPopulationGenerator(problem, ref)
        ctx = ConcessionContext(ref)
        for gamma in (0.0, 0.3, 0.8):
            pop = gen(gamma)
            assert pop is not None
            assert ctx.rates(pop).max() <= gamma + 1e-12

    def test_zero_level_contains_common_solution(self, case2):
        problem, ref = case2
        pop = BandPopulationGenerator(problem, ref)(0.0)
        X = pop.decision_matrix()
        assert np.min(np.linalg.norm(X - np.array([3.0, 2.0]), axis=1)) < 1e-9

    def test_empty_band_on_disjoint_problem(self, case1):
        problem, ref = case1
        gen = BandPopulationGenerator(problem, ref)
        assert gen(0.0) is None
        assert gen(1.0) is not None

    def test_coverage_grows_with_level(self, case2):
        problem, ref = case2
        gen = BandPopulationGenerator(problem, ref)
        sizes = [len(gen(g)) for g in (0.1, 0.5, 1.0)]
        assert sizes[0] < sizes[1] < sizes[2]


class TestSweep:
    @pytest.fixture(scope="class")
    @staticmethod
    def grids():
        axis = np.linspace(0.0, 1.0, 12)
        common = run_sweep("case2", gamma_axis=axis, gamma_hat_axis=axis, density=60)
        disjoint = run_sweep("case1", gamma_axis=axis, gamma_hat_axis=axis, density=60)
        return common, disjoint

    def test_constant_region_above_intrinsic_level(self, grids):
        common, _ = grids
        s = common.scores
        for i, g in enumerate(common.gamma_axis):
            cols = np.flatnonzero(common.gamma_hat_axis >= g)
            assert np.allclose(s[i, cols], s[i, cols[0]], rtol=0, atol=0)

    def test_rows_non_increasing_as_threshold_decreases(self, grids):
        for grid in grids:
            diffs = np.diff(grid.scores, axis=1)
            assert np.all(diffs >= -1e-9 * max(grid.scores.max(), 1.0))

    def test_zero_cells_only_in_disjoint_problem(self, grids):
        common, disjoint = grids
        assert not np.any(common.scores == 0.0)
        zero_rows = np.flatnonzero(np.all(disjoint.scores == 0.0, axis=1))
        assert zero_rows.size > 0
        assert np.all(zero_rows < 6), "zero rows should sit at small gamma"

    def test_validation_raises_on_corrupted_grid(self, grids):
        common, _ = grids
        corrupted = np.array(common.scores)
        corrupted[3, -1] = corrupted[3, -2] * 0.5  # break monotonicity at the tail
        bad = SweepGrid(
            problem="broken",
            gamma_axis=common.gamma_axis,
            gamma_hat_axis=common.gamma_hat_axis,
            scores=corrupted,
        )
        with pytest.raises(InvariantViolation):
            check_sweep_invariants(bad)

    def test_axes_validated(self):
        with pytest.raises(ConfigError):
            SweepGrid(
                problem="x",
                gamma_axis=np.array([0.0, 0.0]),
                gamma_hat_axis=np.array([0.0, 1.0]),
                scores=np.zeros((2, 2)),
            )

    def test_csv_round_trip(self, grids):
        common, _ = grids
        text = common.to_csv()
        assert text.splitlines()[0] == "gamma,gamma_hat,score"
        back = sweep_grid_from_csv(text, problem=common.problem)
        assert np.array_equal(back.scores, common.scores)
        assert np.array_equal(back.gamma_axis, common.gamma_axis)

    def test_asymmetric_sweep_monotone_per_party(self, case2):
        problem, ref = case2
        axis = np.linspace(0.0, 1.0, 6)
        scores = run_asymmetric_sweep(problem, 0.4, axis, axis, reference=ref)
        assert scores.shape == (6, 6)
        assert np.all(np.diff(scores, axis=0) >= -1e-9 * scores.max())
        assert np.all(np.diff(scores, axis=1) >= -1e-9 * scores.max())

    def test_load_sweep_file(self, tmp_path):
        path = tmp_path / "sweep.toml"
        path.write_text(
            'problem = "case2"\ndensity = 50.0\nlambda = 5.0\n'
            "gamma = {start = 0.0, stop = 1.0, num = 4}\ngamma_hat = [0.0, 0.5, 1.0]\n"
        )
        spec = load_sweep_file(path)
        assert spec["problem"] == "case2"
        assert len(spec["gamma_axis"]) == 4
        assert list(spec["gamma_hat_axis"]) == [0.0, 0.5, 1.0]


class TestAxiomSuite:
    def test_small_run_passes(self):
        report = run_axiom_suite(60, seed=3)
        assert report.passed
        assert [c.trials for c in report.checks] == [60] * 4

    def test_disabled_penalty_breaks_acceptability(self):
        report = run_axiom_suite(200, seed=3, a4_lambda_override=0.0)
        a4 = report.checks[3]
        assert a4.failures > 0
        assert a4.counterexample is not None
        assert "lambda" in a4.counterexample

    def test_zero_trials_rejected(self):
        with pytest.raises(ConfigError):
            run_axiom_suite(0)

    def test_report_json(self):
        report = run_axiom_suite(5, seed=1)
        data = json.loads(report.to_json())
        assert data["passed"] is True
        assert len(data["checks"]) == 4


class TestPermutationHelpers:
    def test_permuted_scores_match(self, case2, rng):
        problem, ref = case2
        lo, hi = problem.bounds[:, 0], problem.bounds[:, 1]
        pop = problem.solution_set(lo + rng.random((6, 2)) * (hi - lo))
        config = ConcessionConfig(gamma_hat=(0.2, 0.7), lambdas=(3.0, 8.0))
        base = nash_scores([pop], ref, config)[0]
        perm = [1, 0]
        permuted = nash_scores(
            [permute_solution_set(pop, perm)], permute_reference(ref, perm), config.permuted(perm)
        )[0]
        assert permuted.psi_np == pytest.approx(base.psi_np, rel=1e-12)
        assert permuted.losses == pytest.approx(base.losses[::-1])


class TestEmit:
    def test_sweep_emission_round_trip(self, tmp_path):
        axis = np.linspace(0.0, 1.0, 5)
        grid = run_sweep("case2", gamma_axis=axis, gamma_hat_axis=axis, density=40)
        text = emit_plot_data(grid, fmt="csv", path=tmp_path / "grid.csv")
        assert (tmp_path / "grid.csv").read_text() == text
        assert len(text.splitlines()) == 26  # header + 25 cells
        back = sweep_grid_from_csv(text)
        assert np.array_equal(back.scores, grid.scores)

    def test_experiment_emission_shape(self, tiny_plan):
        result = run_experiment(tiny_plan)
        text = emit_plot_data(result, fmt="csv")
        lines = text.splitlines()
        assert lines[0] == "problem,case,algorithm,metric,statistic,value"
        # one row per (problem, case, algorithm, metric, statistic)
        assert len(lines) == 1 + 2 * len(result.summary_rows)

    def test_unknown_format_rejected(self, tiny_plan):
        result = run_experiment(tiny_plan)
        with pytest.raises(ConfigError):
            emit_plot_data(result, fmt="parquet")
