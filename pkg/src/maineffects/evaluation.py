"""Scoring and experiment drivers: ORMSE, variance/consistency checks, suite."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, replace

import numpy as np

from .benchmarks import DependenceSpec, get_function, ground_truth_main_effect, sample_inputs
from .binning import assign_bins
from .core import Dataset, EffectCurve, ExperimentConfig, Partition, fit_normalizer
from .estimators import (
    a2d2e_bin_increments,
    ale_bin_increments,
    bin_increment_variance,
    estimate_curves,
    slope_matrix,
)
from .predictors import (
    AnalyticPredictor,
    CountingPredictor,
    NNTrainConfig,
    NoisyPredictor,
    PredictorError,
    train_tiny_nn,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OrmseReport:
    """Score of one method run: per-variable RMSE and their mean (ORMSE)."""

    method: str
    per_variable_rmse: tuple
    ormse: float
    config: ExperimentConfig | None = None
    seed: int | None = None
    rep: int | None = None
    queries: int = 0
    wall_ms: float = 0.0


@dataclass(frozen=True)
class VarianceReport:
    kind: str
    dim: int
    sigma: float
    count: int
    width: float
    delta: float
    replicates: int
    empirical: float
    theoretical: float
    relative_error: float


@dataclass(frozen=True)
class ConsistencyRow:
    count: int
    std: float | None
    error: str | None = None


def ormse(estimated: list[EffectCurve], truth: list[EffectCurve], method: str | None = None,
          config: ExperimentConfig | None = None, seed: int | None = None,
          rep: int | None = None, queries: int = 0, wall_ms: float = 0.0) -> OrmseReport:
    """Mean over variables of the RMSE between centered curves on shared grids."""
    if len(estimated) != len(truth) or not estimated:
        raise ValueError("need one estimated curve per truth curve")
    rmses = []
    for est, ref in zip(estimated, truth):
        if not (est.centered and ref.centered):
            raise ValueError("curves must be centered before scoring")
        if est.d != ref.d or not np.array_equal(est.grid, ref.grid):
            raise ValueError(f"grid mismatch for variable {est.d}")
        rmses.append(float(np.sqrt(np.mean((est.values - ref.values) ** 2))))
    return OrmseReport(
        method=method or estimated[0].method,
        per_variable_rmse=tuple(rmses),
        ormse=float(np.mean(rmses)),
        config=config,
        seed=seed,
        rep=rep,
        queries=queries,
        wall_ms=wall_ms,
    )


# --------------------------------------------------------------------------
# Closed-form variance verification: one synthetic bin, linear response.
# --------------------------------------------------------------------------

_COEFFS = np.array([1.5, -0.7, 0.4, 1.1, -0.3, 0.9, 0.2, -1.2])


def _linear_scene(dim: int, count: int, width: float, rng):
    """A single bin [0.4, 0.4 + width] on variable 0 of a linear response."""
    coeffs = _COEFFS[np.arange(dim) % len(_COEFFS)]
    inputs = rng.uniform(0.0, 1.0, size=(count, dim))
    inputs[:, 0] = rng.uniform(0.4, 0.4 + width, size=count)
    predictor = AnalyticPredictor(lambda pts: 0.8 + pts @ coeffs, dim, name="linear")
    dataset = Dataset(inputs, 0.8 + inputs @ coeffs)
    partition = Partition(d=0, endpoints=np.array([0.4, 0.4 + width]))
    bins = assign_bins(dataset, partition)
    return dataset, predictor, partition, bins


def _increment_samples(kind: str, dim: int, sigma: float, count: int, width: float,
                       delta: float, replicates: int, seed) -> np.ndarray:
    """Monte-Carlo draws of one bin increment under fresh Assumption-1 noise."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    dataset, predictor, partition, bins = _linear_scene(dim, count, width, rng)
    noisy = NoisyPredictor(predictor, sigma, seed=rng)
    samples = np.empty(replicates)
    for r in range(replicates):
        if kind == "ale":
            inc = ale_bin_increments(dataset, noisy, partition, bins)[0]
        else:
            slopes = slope_matrix(dataset, noisy, delta)
            inc = a2d2e_bin_increments(partition, bins, slopes[:, 0])[0]
        samples[r] = inc.increment
    return samples


def _sample_variance(samples: np.ndarray) -> float:
    # identical draws (deterministic predictor) must score exactly zero;
    # np.var would leak the rounding error of the mean
    if np.ptp(samples) == 0.0:
        return 0.0
    return float(np.var(samples, ddof=1))


def run_variance_experiment(kind: str, dim: int, sigma: float, count: int, width: float,
                            delta: float, replicates: int, seed=0) -> VarianceReport:
    """Empirical variance of one bin increment against its closed form."""
    kind = kind.lower()
    if kind not in ("ale", "a2d2e"):
        raise ValueError(f"unknown increment kind {kind!r}")
    if replicates < 500:
        raise ValueError("need at least 500 replicates for a stable variance estimate")
    samples = _increment_samples(kind, dim, sigma, count, width, delta, replicates, seed)
    empirical = _sample_variance(samples)
    theoretical = bin_increment_variance(kind, sigma, count, width, delta, dim)
    rel = abs(empirical - theoretical) / theoretical if theoretical > 0 else abs(empirical)
    return VarianceReport(kind, dim, sigma, count, width, delta, replicates,
                          empirical, theoretical, rel)


def run_consistency_experiment(counts, replicates: int, seed=0, sigma: float = 0.1,
                               width: float = 0.025, delta: float = 0.01,
                               dim: int = 2) -> list[ConsistencyRow]:
    """Monte-Carlo std of the slope-based increment for growing bin occupancy."""
    if list(counts) != sorted(counts):
        raise ValueError("counts must be increasing")
    ss = np.random.SeedSequence(seed)
    rows = []
    for count, child in zip(counts, ss.spawn(len(counts))):
        if replicates < 2:
            rows.append(ConsistencyRow(count=count, std=None,
                                       error="std undefined for fewer than 2 replicates"))
            continue
        samples = _increment_samples("a2d2e", dim, sigma, count, width, delta,
                                     replicates, np.random.default_rng(child))
        rows.append(ConsistencyRow(count=count, std=math.sqrt(_sample_variance(samples))))
    return rows


def consistency_ratios(rows: list[ConsistencyRow]) -> list[float]:
    """std ratios between consecutive counts (expected ~2 for 4x occupancy)."""
    stds = [row.std for row in rows if row.std is not None]
    return [stds[i] / stds[i + 1] for i in range(len(stds) - 1)]


# --------------------------------------------------------------------------
# Benchmark suite: the full sample -> fit -> estimate -> score loop.
# --------------------------------------------------------------------------

def run_benchmark_suite(config: ExperimentConfig, methods, predictor_kind: str = "nn",
                        mc_samples: int = 100_000,
                        nn_config: NNTrainConfig | None = None) -> list[OrmseReport]:
    """One OrmseReport per (method, repetition), seeded and reproducible.

    Per repetition: sample inputs at the configured dependence level, add
    Gaussian noise with variance ``noise_fraction`` of the response variance,
    normalize, bind the predictor (analytic oracle or trained network),
    estimate every variable's curve per method, and score against the
    numerical truth. A failed predictor fit aborts only that repetition.
    """
    fn = get_function(config.function)
    spec = DependenceSpec.from_level(config.dependence)
    methods = [m.lower() for m in methods]
    reports: list[OrmseReport] = []
    children = config.seed_sequence().spawn(max(config.repetitions, 1))
    for rep in range(config.repetitions):
        rng = np.random.default_rng(children[rep])
        raw = sample_inputs(fn.dim, config.n, spec, rng)
        clean = fn.evaluate_unit(raw)
        responses = clean
        if config.noise_fraction > 0:
            sigma = math.sqrt(config.noise_fraction * float(np.var(clean, ddof=1)))
            responses = clean + rng.normal(0.0, sigma, size=len(clean))
        normalizer = fit_normalizer(Dataset(raw, responses))
        dataset = Dataset(normalizer.transform(raw), responses)

        if predictor_kind == "oracle":
            predictor = AnalyticPredictor(
                lambda pts, norm=normalizer: fn.evaluate_unit(norm.inverse(pts)),
                fn.dim, name=f"oracle:{fn.name}")
        elif predictor_kind == "nn":
            base = nn_config or NNTrainConfig(standardize_responses=False)
            try:
                predictor = train_tiny_nn(
                    dataset, replace(base, seed=int(rng.integers(2 ** 32))))
            except (PredictorError, ValueError) as exc:
                log.warning("repetition %d: predictor training failed (%s); skipped", rep, exc)
                continue
        else:
            raise ValueError(f"unknown predictor kind {predictor_kind!r}")

        grid_t = np.linspace(0.0, 1.0, config.grid_size)
        truths = []
        for d in range(fn.dim):
            grid_u = normalizer.inverse_column(grid_t, d)
            raw_truth = ground_truth_main_effect(fn.name, d, grid_u, spec, seed=rng,
                                                 mc_samples=mc_samples)
            truths.append(EffectCurve(d=d, grid=grid_t, values=raw_truth.values,
                                      method="TRUTH", centered=True))

        for method in methods:
            counter = CountingPredictor(predictor)
            start = time.perf_counter()
            curves = estimate_curves(dataset, counter, config, method)
            wall_ms = (time.perf_counter() - start) * 1e3
            reports.append(ormse(curves, truths, method=method, config=config,
                                 seed=config.seed, rep=rep, queries=counter.queries,
                                 wall_ms=wall_ms))
    return reports


@dataclass(frozen=True)
class Aggregate:
    mean: float
    se: float
    half_width: float  # 1.96 * se, the paper-style confidence half width
    n: int


def aggregate_ormse(reports: list[OrmseReport]) -> dict[str, Aggregate]:
    """Per-method mean +/- 1.96 SE over repetitions (unbiased SE of the mean)."""
    by_method: dict[str, list[float]] = {}
    for report in sorted(reports, key=lambda r: (r.method, r.rep if r.rep is not None else 0)):
        by_method.setdefault(report.method, []).append(report.ormse)
    out = {}
    for method, values in by_method.items():
        arr = np.array(values)
        se = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
        out[method] = Aggregate(mean=float(arr.mean()), se=se,
                                half_width=1.96 * se, n=len(arr))
    return out


def reports_to_csv(reports: list[OrmseReport], path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["function", "dependence", "method", "rep", "seed",
                         "ormse", "queries", "wall_ms"])
        for r in reports:
            writer.writerow([
                r.config.function if r.config else "",
                r.config.dependence if r.config else "",
                r.method, r.rep, r.seed, r.ormse, r.queries, r.wall_ms,
            ])


def report_to_dict(report: OrmseReport) -> dict:
    data = asdict(report)
    if report.config is not None:
        data["config"] = json.loads(report.config.to_json())
    data["per_variable_rmse"] = list(report.per_variable_rmse)
    return data


def reports_to_json(reports: list[OrmseReport], path):
    with open(path, "w") as fh:
        json.dump([report_to_dict(r) for r in reports], fh, indent=2)
        fh.write("\n")
