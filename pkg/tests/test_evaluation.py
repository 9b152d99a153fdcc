import json
import math

import numpy as np
import pytest

from maineffects.core import EffectCurve, ExperimentConfig, center_curve
from maineffects.evaluation import (
    aggregate_ormse,
    consistency_ratios,
    ormse,
    reports_to_csv,
    reports_to_json,
    run_benchmark_suite,
    run_consistency_experiment,
    run_variance_experiment,
)


def curve(values, d=0, centered=True, method="PD", grid=None):
    values = np.asarray(values, dtype=float)
    if grid is None:
        grid = np.arange(len(values), dtype=float)
    return EffectCurve(d=d, grid=grid, values=values, method=method, centered=centered)


class TestOrmse:
    def test_identical_curves_score_zero(self):
        est = [curve([0.5, -0.5]), curve([1.0, -1.0], d=1)]
        assert ormse(est, est).ormse == 0.0

    def test_hand_arithmetic(self):
        # sqrt(mean((0)^2, (1)^2)) = sqrt(0.5); pre-centered inputs accepted
        report = ormse([curve([1.0, 2.0])], [curve([1.0, 1.0])])
        assert report.ormse == pytest.approx(math.sqrt(0.5), rel=1e-12)

    def test_mean_over_variables(self):
        est = [curve([0.1, -0.1]), curve([0.3, -0.3], d=1)]
        ref = [curve([0.0, 0.0]), curve([0.0, 0.0], d=1)]
        report = ormse(est, ref)
        assert report.per_variable_rmse == pytest.approx((0.1, 0.3), rel=1e-12)
        assert report.ormse == pytest.approx(0.2, rel=1e-12)

    def test_report_invariant(self):
        est = [curve([0.2, -0.2]), curve([0.4, -0.4], d=1)]
        ref = [curve([0.0, 0.0]), curve([0.0, 0.0], d=1)]
        report = ormse(est, ref)
        assert report.ormse == pytest.approx(np.mean(report.per_variable_rmse), abs=0)

    def test_grid_mismatch(self):
        with pytest.raises(ValueError, match="grid"):
            ormse([curve([1.0, 2.0])], [curve([1.0, 2.0], grid=np.array([0.0, 2.0]))])

    def test_uncentered_rejected(self):
        with pytest.raises(ValueError, match="centered"):
            ormse([curve([1.0, 2.0], centered=False)], [curve([1.0, 1.0])])

    def test_translation_invariance_after_recentering(self):
        rng = np.random.default_rng(0)
        grid = np.sort(rng.uniform(0, 1, 30))
        values = rng.normal(size=30)
        ref = center_curve(EffectCurve(0, grid, rng.normal(size=30), "TRUTH"))
        base = center_curve(EffectCurve(0, grid, values, "PD"))
        shifted = center_curve(EffectCurve(0, grid, values + 17.3, "PD"))
        a = ormse([base], [ref]).ormse
        b = ormse([shifted], [ref]).ormse
        assert abs(a - b) <= 1e-12


class TestAggregate:
    def test_hand_computed_three_reports(self):
        reports = [ormse([curve([v, -v])], [curve([0.0, 0.0])], method="pd", rep=i)
                   for i, v in enumerate([1.0, 2.0, 4.0])]
        agg = aggregate_ormse(reports)["pd"]
        assert agg.mean == pytest.approx(7.0 / 3.0, rel=1e-12)
        # unbiased sd of [1,2,4] is sqrt(7/3); se = sd/sqrt(3)
        assert agg.se == pytest.approx(math.sqrt(7.0 / 3.0) / math.sqrt(3.0), rel=1e-12)
        assert agg.half_width == pytest.approx(1.96 * agg.se, rel=1e-12)
        assert agg.n == 3


class TestVarianceExperiment:
    @pytest.mark.parametrize("dim", [2, 3, 4])
    def test_lemma1_ale(self, dim):
        # the ALE increment variance is dimension-free
        report = run_variance_experiment("ale", dim=dim, sigma=0.1, count=50,
                                         width=0.025, delta=0.01, replicates=2000,
                                         seed=dim)
        assert report.theoretical == pytest.approx(4e-4, rel=1e-12)
        assert report.relative_error < 0.10

    def test_lemma2_half_width_delta(self):
        report = run_variance_experiment("a2d2e", dim=4, sigma=0.1, count=50,
                                         width=0.025, delta=0.0125, replicates=2000,
                                         seed=0)
        assert report.theoretical == pytest.approx(2e-4, rel=1e-12)
        assert report.relative_error < 0.10

    def test_zero_noise_is_exactly_deterministic(self):
        for kind in ("ale", "a2d2e"):
            report = run_variance_experiment(kind, dim=2, sigma=0.0, count=20,
                                             width=0.025, delta=0.01,
                                             replicates=500, seed=1)
            assert report.empirical == 0.0

    def test_requires_500_replicates(self):
        with pytest.raises(ValueError, match="500"):
            run_variance_experiment("ale", 2, 0.1, 50, 0.025, 0.01, replicates=100)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            run_variance_experiment("pd", 2, 0.1, 50, 0.025, 0.01, replicates=500)


class TestConsistencyExperiment:
    def test_std_halves_per_4x_count(self):
        rows = run_consistency_experiment([25, 100, 400], replicates=2000, seed=0)
        ratios = consistency_ratios(rows)
        assert len(ratios) == 2
        assert all(1.6 <= r <= 2.4 for r in ratios)

    def test_zero_noise_rows(self):
        rows = run_consistency_experiment([25, 100], replicates=500, seed=0, sigma=0.0)
        assert all(row.std == 0.0 for row in rows)

    def test_single_replicate_is_error_row(self):
        rows = run_consistency_experiment([25], replicates=1, seed=0)
        assert rows[0].std is None and "replicates" in rows[0].error

    def test_counts_must_increase(self):
        with pytest.raises(ValueError):
            run_consistency_experiment([100, 25], replicates=500)


class TestBenchmarkSuite:
    def test_oracle_budget_simple1(self):
        cfg = ExperimentConfig(function="simple-1", dependence="independent",
                               n=200, k=40, seed=3, repetitions=1)
        reports = run_benchmark_suite(cfg, ["ale", "a2d2e"], predictor_kind="oracle",
                                      mc_samples=50_000)
        for r in reports:
            assert r.ormse < 5e-3

    def test_zero_repetitions(self):
        cfg = ExperimentConfig(function="simple-1", repetitions=0)
        assert run_benchmark_suite(cfg, ["pd"]) == []

    def test_bit_reproducible(self):
        cfg = ExperimentConfig(function="simple-1", n=60, k=5, seed=9,
                               repetitions=2, grid_size=30)
        a = run_benchmark_suite(cfg, ["pd"], predictor_kind="oracle", mc_samples=2000)
        b = run_benchmark_suite(cfg, ["pd"], predictor_kind="oracle", mc_samples=2000)
        assert [r.ormse for r in a] == [r.ormse for r in b]
        assert [r.per_variable_rmse for r in a] == [r.per_variable_rmse for r in b]

    def test_query_accounting_in_reports(self):
        cfg = ExperimentConfig(function="simple-1", n=50, k=5, seed=2,
                               repetitions=1, grid_size=20)
        reports = run_benchmark_suite(cfg, ["pd", "ale", "a2d2e"],
                                      predictor_kind="oracle", mc_samples=2000)
        by_method = {r.method: r for r in reports}
        assert by_method["a2d2e"].queries == 50 * 4
        # N x grid per variable, minus the corner points the two variables
        # share (memoization counts distinct queries)
        assert 2 * 50 * 20 - 8 <= by_method["pd"].queries <= 2 * 50 * 20
        assert by_method["ale"].queries <= 2 * 50 * 5 * 2

    def test_unknown_function_or_method(self):
        with pytest.raises(ValueError):
            run_benchmark_suite(ExperimentConfig(function="nope", repetitions=1), ["pd"])
        with pytest.raises(ValueError):
            run_benchmark_suite(ExperimentConfig(function="simple-1", repetitions=1),
                                ["labels"])


class TestReportSerialization:
    def make_reports(self):
        cfg = ExperimentConfig(function="simple-1", n=40, k=4, seed=5,
                               repetitions=1, grid_size=12)
        return run_benchmark_suite(cfg, ["pd", "ale"], predictor_kind="oracle",
                                   mc_samples=1000)

    def test_csv_schema(self, tmp_path):
        reports = self.make_reports()
        path = tmp_path / "reports.csv"
        reports_to_csv(reports, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "function,dependence,method,rep,seed,ormse,queries,wall_ms"
        assert len(lines) == 1 + len(reports)
        assert lines[1].startswith("simple-1,independent,pd,0,5,")

    def test_json_embeds_config(self, tmp_path):
        reports = self.make_reports()
        path = tmp_path / "reports.json"
        reports_to_json(reports, path)
        data = json.loads(path.read_text())
        assert data[0]["config"]["function"] == "simple-1"
        assert data[0]["config"]["seed"] == 5
        assert len(data[0]["per_variable_rmse"]) == 2
