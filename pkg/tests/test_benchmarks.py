import json
import math

import numpy as np
import pytest

import mpfair.benchmarks as bm
from mpfair.benchmarks import (
    ReferenceSet,
    available_problems,
    evaluate,
    get_problem,
    load_problem_file,
    make_mpdmp,
    mpdmp_case1,
    mpdmp_case2,
    reference_to_csv,
    register_external_problem,
    register_problem,
    sample_reference,
)
from mpfair.core import ConfigError, ContractError, DomainError


@pytest.fixture(autouse=True)
def clean_registry():
    yield
    bm._reset_registry()


class TestEvaluate:
    def test_case1_at_first_target(self):
        blocks = evaluate(mpdmp_case1(), (1.0, 1.0))
        assert blocks[0] == pytest.approx([0.0, math.sqrt(8.0)])

    def test_point_on_target_scores_zero(self):
        blocks = evaluate(mpdmp_case2(), (2.0, 3.0))
        assert blocks[1][0] == 0.0

    def test_case2_at_intersection(self):
        blocks = evaluate(mpdmp_case2(), (3.0, 2.0))
        assert blocks[0] == pytest.approx([math.sqrt(5.0)] * 2)
        assert blocks[1] == pytest.approx([math.sqrt(2.0)] * 2)

    def test_out_of_bounds_rejected(self):
        with pytest.raises(DomainError):
            evaluate(mpdmp_case1(), (11.0, 1.0))

    def test_spec_validation(self):
        with pytest.raises(ConfigError):
            make_mpdmp([[[1, 1]], [[3, 1], [5, 3]]])  # single target
        with pytest.raises(ConfigError):
            make_mpdmp([[[1, 1], [20, 20]], [[3, 1], [5, 3]]])  # outside bounds

    def test_batch_evaluator_shape_contract(self):
        problem = mpdmp_case1().to_problem()
        blocks = problem.evaluate_batch(np.array([[1.0, 1.0], [2.0, 2.0]]))
        assert [b.shape for b in blocks] == [(2, 2), (2, 2)]
        with pytest.raises(ContractError):
            problem.evaluate_batch(np.array([[1.0, 1.0, 1.0]]))


class TestSampleReference:
    def test_segment_contains_midpoint_parameter(self):
        ref = sample_reference(mpdmp_case2(), density=100)
        a = ref.parties[0].ps_samples
        assert np.min(np.linalg.norm(a - np.array([3.0, 2.0]), axis=1)) < 1e-12

    def test_density_refines_discretization(self):
        spec = mpdmp_case1()
        probe = np.array([1.0, 1.0]) + 0.37 * np.array([2.0, 2.0])
        gaps = []
        for density in (20, 320):
            ps = sample_reference(spec, density=density).parties[0].ps_samples
            gaps.append(np.min(np.linalg.norm(ps - probe, axis=1)))
        assert gaps[1] < gaps[0]
        assert gaps[1] < 5e-3  # half the sample spacing at density 320

    def test_case1_segments_disjoint(self):
        for density in (25, 150):
            ref = sample_reference(mpdmp_case1(), density=density)
            a, b = (p.ps_samples for p in ref.parties)
            d = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
            assert d.min() > 0.5

    def test_case2_segments_intersect_at_crossing(self):
        ref = sample_reference(mpdmp_case2(), density=150)
        a, b = (p.ps_samples for p in ref.parties)
        d = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
        i, j = np.unravel_index(np.argmin(d), d.shape)
        assert d[i, j] == 0.0
        assert a[i] == pytest.approx([3.0, 2.0])

    def test_f_bounds_are_corner_exact(self):
        ref = sample_reference(mpdmp_case1(), density=30)
        # farthest corner from (1,1) in [0,10]^2 is (10,10)
        assert ref.parties[0].f_max[0] == pytest.approx(math.hypot(9.0, 9.0))
        assert ref.parties[0].f_min == pytest.approx([0.0, 0.0])

    def test_ps_samples_party_nondominated(self):
        ref = sample_reference(mpdmp_case2(), density=40)
        assert ref.validate_nondominated()

    def test_three_target_hull_matches_dominance_oracle(self):
        spec = make_mpdmp(
            [[[2, 2], [4, 2], [3, 4]], [[6, 6], [7, 7]]], name="hull3"
        )
        ref = sample_reference(spec, density=8)
        images = ref.parties[0].pf_samples
        assert images.shape[1] == 3
        # brute-force double loop over the retained samples
        for i in range(images.shape[0]):
            dominated = np.all(images <= images[i], axis=1) & np.any(images < images[i], axis=1)
            assert not dominated.any()

    def test_collinear_targets_fall_back_to_segment(self):
        spec = make_mpdmp([[[1, 1], [2, 2], [3, 3]], [[5, 1], [6, 2]]], name="colli")
        ref = sample_reference(spec, density=10)
        ps = ref.parties[0].ps_samples
        assert np.allclose(ps[:, 0], ps[:, 1])
        assert ps[:, 0].min() == pytest.approx(1.0) and ps[:, 0].max() == pytest.approx(3.0)

    def test_degenerate_segment_rejected(self):
        spec = make_mpdmp([[[1, 1], [1, 1]], [[3, 1], [5, 3]]], name="degenerate")
        with pytest.raises(ConfigError):
            sample_reference(spec, density=10)

    def test_nonpositive_density_rejected(self):
        with pytest.raises(ConfigError):
            sample_reference(mpdmp_case1(), density=0)


class TestRegistry:
    def test_register_and_retrieve_by_name(self):
        spec = make_mpdmp([[[1, 1], [3, 3]], [[3, 1], [5, 3]]], name="case1-copy")
        register_problem(spec)
        problem, ref = get_problem("case1-copy", density=20)
        assert problem.name == "case1-copy"
        assert ref.num_parties == 2

    def test_duplicate_name_rejected(self):
        spec = make_mpdmp([[[1, 1], [3, 3]], [[3, 1], [5, 3]]], name="dup")
        register_problem(spec)
        with pytest.raises(ConfigError, match="already registered"):
            register_problem(spec)

    def test_builtins_present(self):
        assert {"case1", "case2"} <= set(available_problems())

    def test_unknown_problem(self):
        with pytest.raises(ConfigError):
            get_problem("nope")

    def test_external_registration_checks_structure(self):
        problem = mpdmp_case1().to_problem()
        ref = sample_reference(mpdmp_case2(), density=10)  # wrong geometry
        with pytest.raises(ConfigError):
            register_external_problem(problem, ref, name="bad-external")

    def test_external_registration_mismatched_objectives(self):
        three = make_mpdmp([[[2, 2], [4, 2], [3, 4]], [[6, 6], [7, 7]]], name="km")
        ref = sample_reference(three, density=5)
        with pytest.raises(ConfigError, match="objectives"):
            register_external_problem(mpdmp_case1().to_problem(), ref, name="bad-km")

    def test_external_registration_round_trip(self):
        spec = mpdmp_case2()
        problem = spec.to_problem()
        ref = sample_reference(spec, density=15)
        register_external_problem(problem, ref, name="external-ok")
        got_problem, got_ref = get_problem("external-ok")
        assert got_ref is ref and got_problem is problem


class TestLhsBoundsFallback:
    def test_external_reference_estimates_bounds(self):
        spec = mpdmp_case1()
        problem = spec.to_problem()
        ps = [p.ps_samples for p in sample_reference(spec, density=10).parties]
        ref = ReferenceSet.from_problem(problem, ps)
        assert ref.provenance["bounds_method"] == "latin-hypercube"
        exact = sample_reference(spec, density=10)
        for est, true in zip(ref.parties, exact.parties):
            assert est.f_max == pytest.approx(true.f_max, rel=0.02)
            assert np.all(est.f_min >= 0.0)


class TestFiles:
    def test_load_problem_file_toml(self, tmp_path):
        path = tmp_path / "prob.toml"
        path.write_text(
            'name = "filed"\ndensity = 25.0\n'
            "[[party]]\ntargets = [[1.0, 1.0], [3.0, 3.0]]\n"
            "[[party]]\ntargets = [[3.0, 1.0], [5.0, 3.0]]\n"
        )
        name = load_problem_file(path)
        assert name == "filed"
        _, ref = get_problem("filed")
        assert ref.density == 25.0

    def test_load_problem_file_json(self, tmp_path):
        path = tmp_path / "prob.json"
        path.write_text(
            json.dumps(
                {
                    "name": "filedjson",
                    "bounds": [[0, 6], [0, 6]],
                    "party": [{"targets": [[1, 1], [2, 2]]}, {"targets": [[3, 1], [5, 3]]}],
                }
            )
        )
        load_problem_file(path)
        problem, _ = get_problem("filedjson", density=5)
        assert problem.bounds[0, 1] == 6.0

    def test_malformed_file_rejected(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text('name = "x"\n')
        with pytest.raises(ConfigError):
            load_problem_file(path)

    def test_reference_csv_layout(self):
        ref = sample_reference(mpdmp_case1(), density=5)
        lines = reference_to_csv(ref).splitlines()
        assert lines[0] == "party,px,py,f1,f2"
        first = lines[1].split(",")
        assert first[0] == "1"
        assert float(first[1]) == pytest.approx(1.0)
