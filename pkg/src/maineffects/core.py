"""Shared domain types: datasets, normalization, partitions, curves, config."""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace

import numpy as np

DEPENDENCE_LEVELS = ("independent", "low", "high")


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    """Training data: an N x D input matrix and a length-N response vector."""

    inputs: np.ndarray
    responses: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "inputs", _frozen_array(self.inputs))
        object.__setattr__(self, "responses", _frozen_array(self.responses))
        if self.inputs.ndim != 2:
            raise ValueError(f"inputs must be 2-D, got shape {self.inputs.shape}")
        if self.responses.ndim != 1:
            raise ValueError("responses must be 1-D")
        n, d = self.inputs.shape
        if n < 1 or d < 1:
            raise ValueError(f"need N >= 1 and D >= 1, got N={n}, D={d}")
        if len(self.responses) != n:
            raise ValueError(
                f"responses length {len(self.responses)} != sample count {n}"
            )
        if not np.all(np.isfinite(self.inputs)):
            raise ValueError("inputs contain non-finite entries")
        if not np.all(np.isfinite(self.responses)):
            raise ValueError("responses contain non-finite entries")

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    def column(self, d: int) -> np.ndarray:
        return self.inputs[:, d]


@dataclass(frozen=True)
class Normalizer:
    """Per-dimension affine map onto [0, 1], fit from training inputs only."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mins", _frozen_array(self.mins))
        object.__setattr__(self, "maxs", _frozen_array(self.maxs))
        if self.mins.shape != self.maxs.shape or self.mins.ndim != 1:
            raise ValueError("mins/maxs must be 1-D vectors of equal length")
        bad = np.flatnonzero(self.maxs <= self.mins)
        if bad.size:
            raise ValueError(
                f"degenerate (constant) column at dimension {bad[0]}: "
                f"min == max == {self.mins[bad[0]]}"
            )

    @property
    def dim(self) -> int:
        return len(self.mins)

    def transform(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x - self.mins) / (self.maxs - self.mins)

    def inverse(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.mins + t * (self.maxs - self.mins)

    def transform_column(self, values, d: int) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        return (values - self.mins[d]) / (self.maxs[d] - self.mins[d])

    def inverse_column(self, values, d: int) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        return self.mins[d] + values * (self.maxs[d] - self.mins[d])


def fit_normalizer(dataset: Dataset) -> Normalizer:
    """Capture per-dimension (min, max) from the training inputs.

    Rejects constant columns: they carry no range to map onto [0, 1].
    """
    mins = dataset.inputs.min(axis=0)
    maxs = dataset.inputs.max(axis=0)
    return Normalizer(mins, maxs)


@dataclass(frozen=True)
class Partition:
    """Bin endpoints for one variable: K bins delimited by K+1 increasing values."""

    d: int
    endpoints: np.ndarray
    requested_k: int = 0

    def __post_init__(self):
        object.__setattr__(self, "endpoints", _frozen_array(self.endpoints))
        if self.endpoints.ndim != 1 or len(self.endpoints) < 2:
            raise ValueError("need at least 2 endpoints")
        if not np.all(np.diff(self.endpoints) > 0):
            raise ValueError("endpoints must be strictly increasing")
        if self.requested_k == 0:
            object.__setattr__(self, "requested_k", self.k)

    @property
    def k(self) -> int:
        return len(self.endpoints) - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.endpoints)


@dataclass(frozen=True)
class BinIndexSets:
    """Per-bin membership: sets[k] holds the row indices falling in bin k+1."""

    d: int
    sets: tuple
    n: int

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(_frozen_array(s, dtype=np.intp) for s in self.sets))
        total = sum(len(s) for s in self.sets)
        if total != self.n:
            raise ValueError(f"bin membership covers {total} rows, expected {self.n}")

    @property
    def k(self) -> int:
        return len(self.sets)

    def counts(self) -> np.ndarray:
        return np.array([len(s) for s in self.sets])


@dataclass(frozen=True)
class EffectCurve:
    """A main-effect function for one variable sampled on an ordered grid."""

    d: int
    grid: np.ndarray
    values: np.ndarray
    method: str
    centered: bool = False

    def __post_init__(self):
        object.__setattr__(self, "grid", _frozen_array(self.grid))
        object.__setattr__(self, "values", _frozen_array(self.values))
        if self.grid.ndim != 1 or self.grid.shape != self.values.shape:
            raise ValueError("grid and values must be 1-D and of equal length")
        if len(self.grid) > 1 and not np.all(np.diff(self.grid) > 0):
            raise ValueError("grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("curve values contain non-finite entries")


def center_curve(curve: EffectCurve) -> EffectCurve:
    """Subtract the mean over the evaluation grid; idempotent via the flag."""
    if curve.centered:
        return curve
    values = curve.values - curve.values.mean()
    return replace(curve, values=values, centered=True)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment bit-for-bit."""

    function: str
    dependence: str = "independent"
    n: int = 200
    k: int = 40
    delta: float = 0.01
    noise_fraction: float = 0.10
    seed: int = 0
    grid_size: int = 100
    repetitions: int = 10

    def __post_init__(self):
        if self.dependence not in DEPENDENCE_LEVELS:
            raise ValueError(f"dependence must be one of {DEPENDENCE_LEVELS}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not 0 <= self.noise_fraction < 1:
            raise ValueError("noise_fraction must lie in [0, 1)")
        if self.grid_size < 2:
            raise ValueError("grid_size must be >= 2")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.repetitions < 0:
            raise ValueError("repetitions must be >= 0")

    def to_json(self) -> str:
        return json.dumps({f.name: getattr(self, f.name) for f in fields(self)})

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        data = json.loads(text)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.seed)
