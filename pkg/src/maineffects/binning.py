"""Quantile partitioning of a variable's support and bin membership.

Boundary conventions, shared by every consumer:
  * bins are [z_k, z_{k+1}] with interior boundary values owned by the
    LOWER bin; the first bin is closed on both ends,
  * bin indices are 1-based (bin 1 .. bin K), matching the accumulation
    upper limit J(x) = number of bins up to and including x's bin.
"""

from __future__ import annotations

import warnings

import numpy as np

from .core import BinIndexSets, Dataset, Partition


def quantile_partition(values, k: int, d: int = 0) -> Partition:
    """Endpoints at empirical quantiles j/k, j = 0..k (linear interpolation).

    Duplicate endpoints produced by heavy ties are merged, reducing the bin
    count; the requested k is kept on the result. Ties can also leave a bin
    with distinct endpoints but no members (the mass sits just below its
    lower endpoint), so empty bins are merged into their left neighbor the
    same way.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or len(values) < 2:
        raise ValueError("need a 1-D vector with at least 2 values")
    if not np.all(np.isfinite(values)):
        raise ValueError("values contain non-finite entries")
    if k < 1:
        raise ValueError("bin count must be >= 1")
    if values.min() == values.max():
        raise ValueError("all values identical: zero-width support")
    n = len(values)
    if k > n:
        warnings.warn(f"bin count {k} exceeds sample count {n}; reduced to {n}")
        k = n
    # Type-7 quantiles at levels j/k with exact integer positions j*(n-1)/k:
    # np.quantile computes (n-1)*(j/k) in floats, which can round an exactly
    # integral position across an order statistic and skew the bin counts.
    ordered = np.sort(values)
    endpoints = np.empty(k + 1)
    for j in range(k + 1):
        whole, rem = divmod(j * (n - 1), k)
        endpoints[j] = ordered[whole]
        if rem:
            endpoints[j] += (rem / k) * (ordered[whole + 1] - ordered[whole])
    endpoints = np.unique(endpoints)  # merges ties, keeps order
    # Drop the left endpoint of any empty bin (the first bin, closed on both
    # ends, always holds the minimum and cannot be empty).
    assigned = np.clip(np.searchsorted(endpoints, ordered, side="left"),
                       1, len(endpoints) - 1)
    occupied = np.isin(np.arange(1, len(endpoints)), assigned)
    endpoints = endpoints[np.concatenate([[True], occupied[1:], [True]])]
    return Partition(d=d, endpoints=endpoints, requested_k=k)


def assign_bins(dataset: Dataset, partition: Partition) -> BinIndexSets:
    """Assign every training row to exactly one bin of its variable's partition."""
    col = dataset.column(partition.d)
    z = partition.endpoints
    if col.min() < z[0] or col.max() > z[-1]:
        raise ValueError(
            f"values outside partition range [{z[0]}, {z[-1]}] for variable {partition.d}"
        )
    # searchsorted(left): z[i-1] < v <= z[i]; the clip pulls v == z[0] into bin 1.
    bins = np.searchsorted(z, col, side="left")
    bins = np.clip(bins, 1, partition.k)
    sets = tuple(np.flatnonzero(bins == j + 1) for j in range(partition.k))
    return BinIndexSets(d=partition.d, sets=sets, n=dataset.n)


def locate(x: float, partition: Partition) -> tuple[int, bool]:
    """Return (1-based bin index J(x), clamped flag).

    Out-of-range x clamps to the nearest terminal bin and sets the flag.
    """
    z = partition.endpoints
    clamped = bool(x < z[0] or x > z[-1])
    j = int(np.searchsorted(z, x, side="left"))
    j = min(max(j, 1), partition.k)
    return j, clamped
