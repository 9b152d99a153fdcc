"""Main-effect estimators: PD, ALE, and slope-based accumulation (A2D2E).

The slope-based estimator fits, around every training point, a first-order
model on the 2^D vertices of a hypercube with edge length delta. That
two-level full factorial is D-optimal for a first-order fit and makes the
normal equations diagonal, so slopes reduce to a scaled sign-weighted sum
(the "fast path"). Bin increments are width x mean slope, accumulated over
quantile bins exactly like ALE.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from .binning import assign_bins, quantile_partition
from .core import BinIndexSets, Dataset, EffectCurve, ExperimentConfig, Partition, center_curve
from .predictors import MemoizedPredictor, Predictor

DESIGN_DIM_CAP = 16


@lru_cache(maxsize=32)
def sign_matrix(dim: int) -> np.ndarray:
    """All sign vectors in {-1,+1}^dim, lexicographic order, as a 2^dim x dim array."""
    s = np.array(list(product((-1.0, 1.0), repeat=dim)))
    s.setflags(write=False)
    return s


@dataclass(frozen=True)
class LocalDesign:
    """2^D hypercube vertices centered at one training point."""

    center: np.ndarray
    delta: float
    vertices: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.center)


@dataclass(frozen=True)
class SlopeVector:
    """Local first-order fit at one training point: intercept + D slopes."""

    intercept: float
    slopes: np.ndarray
    center: np.ndarray


@dataclass(frozen=True)
class BinIncrement:
    """One bin's contribution to an accumulated effect curve.

    The ALE variant stores the mean endpoint difference in the slope slot
    with width 1, so increment == width * mean_slope holds for both kinds.
    """

    k: int
    d: int
    width: float
    mean_slope: float
    count: int

    @property
    def increment(self) -> float:
        return self.width * self.mean_slope


def build_local_design(center, delta: float, cap: int = DESIGN_DIM_CAP) -> LocalDesign:
    """Vertices x + (delta/2) s for all s in {-1,+1}^D, lexicographic sign order."""
    center = np.asarray(center, dtype=float)
    if center.ndim != 1:
        raise ValueError("center must be a 1-D point")
    if not delta > 0:
        raise ValueError("delta must be positive")
    dim = len(center)
    if dim > cap:
        raise ValueError(
            f"design dimension {dim} exceeds cap {cap}: "
            f"a two-level full factorial needs 2^{dim} vertices"
        )
    vertices = center + (delta / 2.0) * sign_matrix(dim)
    return LocalDesign(center=center, delta=delta, vertices=vertices)


def local_slopes_fast(design: LocalDesign, values) -> SlopeVector:
    """Closed-form OLS via factorial orthogonality: 2^(2-D) delta^-2 Vt^T y.

    The centered vertex matrix Vt satisfies Vt^T Vt = 2^(D-2) delta^2 I, so
    the normal equations are diagonal and no solve is needed.
    """
    values = np.asarray(values, dtype=float)
    dim = design.dim
    if values.shape != (2 ** dim,):
        raise ValueError(f"expected {2 ** dim} values, got shape {values.shape}")
    s = sign_matrix(dim)
    slopes = (2.0 ** (1 - dim) / design.delta) * (values @ s)
    return SlopeVector(intercept=float(values.mean()), slopes=slopes, center=design.center)


def local_slopes_ols(design: LocalDesign, values) -> SlopeVector:
    """Reference normal-equations solve on the intercept-augmented centered design."""
    values = np.asarray(values, dtype=float)
    dim = design.dim
    if values.shape != (2 ** dim,):
        raise ValueError(f"expected {2 ** dim} values, got shape {values.shape}")
    centered = design.vertices - design.center
    x = np.column_stack([np.ones(len(centered)), centered])
    coef, _, rank, _ = np.linalg.lstsq(x, values, rcond=None)
    if rank != dim + 1:
        raise ValueError("singular design matrix (degenerate factorial)")
    return SlopeVector(intercept=float(coef[0]), slopes=coef[1:], center=design.center)


def slope_matrix(dataset: Dataset, predictor: Predictor, delta: float,
                 cap: int = DESIGN_DIM_CAP) -> np.ndarray:
    """All D slope components at every training point, one shared vertex batch.

    The design depends only on the point and delta, never on the target
    variable or bin, so the N x 2^D evaluations are computed once and reused
    for every variable's curve.
    """
    n, dim = dataset.inputs.shape
    if dim > cap:
        raise ValueError(
            f"design dimension {dim} exceeds cap {cap}: "
            f"a two-level full factorial needs 2^{dim} vertices"
        )
    s = sign_matrix(dim)
    offsets = (delta / 2.0) * s
    points = (dataset.inputs[:, None, :] + offsets[None, :, :]).reshape(-1, dim)
    values = predictor.predict_batch(points).reshape(n, 2 ** dim)
    return (2.0 ** (1 - dim) / delta) * (values @ s)


def evaluation_grid(dataset: Dataset, d: int, grid_size: int) -> np.ndarray:
    col = dataset.column(d)
    return np.linspace(col.min(), col.max(), grid_size)


def _accumulated_curve(partition: Partition, increments, grid, method: str) -> EffectCurve:
    """Accumulate increments at bin endpoints, interpolate linearly at the grid.

    The partial final bin is fractionally weighted, making the curve piecewise
    linear with each bin's slope (increment / width) inside the bin.
    """
    accumulated = np.concatenate([[0.0], np.cumsum([inc.increment for inc in increments])])
    values = np.interp(grid, partition.endpoints, accumulated)
    return center_curve(EffectCurve(d=partition.d, grid=np.asarray(grid, dtype=float),
                                    values=values, method=method))


def a2d2e_bin_increments(partition: Partition, bins: BinIndexSets,
                         slopes_d: np.ndarray) -> list[BinIncrement]:
    """Per-bin width x mean local slope for the partition's variable."""
    increments = []
    for k in range(partition.k):
        members = bins.sets[k]
        if len(members) == 0:
            raise ValueError(f"empty bin {k + 1}; quantile partitions cannot produce this")
        width = float(partition.endpoints[k + 1] - partition.endpoints[k])
        increments.append(BinIncrement(k=k + 1, d=partition.d, width=width,
                                       mean_slope=float(slopes_d[members].mean()),
                                       count=len(members)))
    return increments


def ale_bin_increments(dataset: Dataset, predictor: Predictor, partition: Partition,
                       bins: BinIndexSets) -> list[BinIncrement]:
    """Mean model difference between bin endpoints, exactly as ALE prescribes.

    Endpoint queries (z_k, x_n without d) may lie off-distribution; that is
    the behavior under study, so nothing is smoothed or clipped.
    """
    d = partition.d
    lows, highs = [], []
    for k in range(partition.k):
        rows = dataset.inputs[bins.sets[k]].copy()
        rows[:, d] = partition.endpoints[k]
        lows.append(rows)
        rows = rows.copy()
        rows[:, d] = partition.endpoints[k + 1]
        highs.append(rows)
    points = np.vstack(lows + highs)
    values = predictor.predict_batch(points)
    low_vals, high_vals = values[:dataset.n], values[dataset.n:]
    increments = []
    start = 0
    for k in range(partition.k):
        count = len(bins.sets[k])
        if count == 0:
            raise ValueError(f"empty bin {k + 1}; quantile partitions cannot produce this")
        diff = high_vals[start:start + count] - low_vals[start:start + count]
        increments.append(BinIncrement(k=k + 1, d=d, width=1.0,
                                       mean_slope=float(diff.mean()), count=count))
        start += count
    return increments


def estimate_a2d2e(dataset: Dataset, predictor: Predictor, d: int,
                   config: ExperimentConfig, slopes: np.ndarray | None = None,
                   grid: np.ndarray | None = None) -> EffectCurve:
    """Accumulated local-design estimate of variable d's main effect, centered.

    ``slopes`` may carry a precomputed N x D slope matrix so one vertex batch
    serves every variable.
    """
    partition = quantile_partition(dataset.column(d), config.k, d)
    bins = assign_bins(dataset, partition)
    if slopes is None:
        slopes = slope_matrix(dataset, predictor, config.delta)
    increments = a2d2e_bin_increments(partition, bins, slopes[:, d])
    if grid is None:
        grid = evaluation_grid(dataset, d, config.grid_size)
    return _accumulated_curve(partition, increments, grid, "A2D2E")


def estimate_ale(dataset: Dataset, predictor: Predictor, d: int,
                 config: ExperimentConfig, grid: np.ndarray | None = None) -> EffectCurve:
    """Accumulated-local-effects estimate of variable d's main effect, centered."""
    partition = quantile_partition(dataset.column(d), config.k, d)
    bins = assign_bins(dataset, partition)
    increments = ale_bin_increments(dataset, predictor, partition, bins)
    if grid is None:
        grid = evaluation_grid(dataset, d, config.grid_size)
    return _accumulated_curve(partition, increments, grid, "ALE")


def estimate_pd(dataset: Dataset, predictor: Predictor, d: int,
                config: ExperimentConfig, grid: np.ndarray | None = None) -> EffectCurve:
    """Partial-dependence estimate: average the model over the other columns."""
    if grid is None:
        grid = evaluation_grid(dataset, d, config.grid_size)
    else:
        grid = np.asarray(grid, dtype=float)
    n, g = dataset.n, len(grid)
    points = np.tile(dataset.inputs, (g, 1))
    points[:, d] = np.repeat(grid, n)
    values = predictor.predict_batch(points).reshape(g, n).mean(axis=1)
    return center_curve(EffectCurve(d=d, grid=grid, values=values, method="PD"))


METHODS = ("pd", "ale", "a2d2e")


def estimate_curves(dataset: Dataset, predictor: Predictor, config: ExperimentConfig,
                    method: str) -> list[EffectCurve]:
    """One centered curve per variable; deterministic predictors get memoized.

    A2D2E computes its slope matrix once: the vertex designs are shared by
    all variables, so the whole run costs N * 2^D distinct queries.
    """
    method = method.lower()
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if predictor.deterministic:
        predictor = MemoizedPredictor(predictor)
    if method == "a2d2e":
        slopes = slope_matrix(dataset, predictor, config.delta)
        return [estimate_a2d2e(dataset, predictor, d, config, slopes=slopes)
                for d in range(dataset.dim)]
    if method == "ale":
        return [estimate_ale(dataset, predictor, d, config) for d in range(dataset.dim)]
    return [estimate_pd(dataset, predictor, d, config) for d in range(dataset.dim)]


def bin_increment_variance(kind: str, sigma: float, count: int, width: float = 1.0,
                           delta: float = 1.0, dim: int = 1) -> float:
    """Sampling variance of one bin increment under additive query noise.

    ALE: 2 sigma^2 / count. Slope-based: width^2 sigma^2 / (count 2^(D-2) delta^2).
    """
    if sigma < 0 or count < 1 or width <= 0 or delta <= 0 or dim < 1:
        raise ValueError("arguments must be positive (sigma may be zero)")
    kind = kind.lower()
    if kind == "ale":
        return 2.0 * sigma ** 2 / count
    if kind == "a2d2e":
        return width ** 2 * sigma ** 2 / (count * 2.0 ** (dim - 2) * delta ** 2)
    raise ValueError(f"unknown increment kind {kind!r}")
