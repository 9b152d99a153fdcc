"""Benchmark response surfaces, dependence-controlled samplers, truth oracle.

Every function is registered with its native domain box and is also
evaluable in unit-box coordinates (an affine map onto the native box), which
is the space all experiments run in. Sampled inputs may exit [0, 1] under
dependence; the harness min-max normalizes afterwards instead of truncating,
so the Gaussian dependence structure is preserved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import EffectCurve, center_curve

DEPENDENCE_SIGMA = {"independent": 0.0, "low": 0.1, "high": 0.05}


@dataclass(frozen=True)
class DependenceSpec:
    """Input-correlation regime: trailing variables are x1 plus Gaussian noise."""

    level: str
    sigma: float

    def __post_init__(self):
        expected = DEPENDENCE_SIGMA.get(self.level)
        if expected is None:
            raise ValueError(f"unknown dependence level {self.level!r}")
        if self.sigma != expected:
            raise ValueError(f"sigma {self.sigma} does not match level {self.level!r}")

    @classmethod
    def from_level(cls, level: str) -> "DependenceSpec":
        return cls(level=level, sigma=DEPENDENCE_SIGMA.get(level, -1.0))


@dataclass(frozen=True)
class BenchmarkFunction:
    name: str
    dim: int
    lower: tuple
    upper: tuple
    _evaluate: object
    _unit_gradient: object = None  # hand-coded gradient in unit coords, optional

    def domain(self) -> np.ndarray:
        return np.array([self.lower, self.upper])

    def evaluate(self, x) -> np.ndarray:
        """Closed-form value at native-domain points (extrapolation permitted)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.dim:
            raise ValueError(f"{self.name} takes {self.dim}-dimensional points")
        return self._evaluate(x)

    def unit_to_native(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        lo = np.array(self.lower)
        hi = np.array(self.upper)
        return lo + u * (hi - lo)

    def evaluate_unit(self, u) -> np.ndarray:
        return self.evaluate(self.unit_to_native(np.atleast_2d(u)))

    def unit_gradient_component(self, u, d: int, step: float = 1e-5) -> np.ndarray:
        """d f_unit / d u_d, hand-coded where available else central differences."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        if self._unit_gradient is not None:
            return self._unit_gradient(u)[:, d]
        hi = u.copy()
        hi[:, d] += step
        lo = u.copy()
        lo[:, d] -= step
        return (self.evaluate_unit(hi) - self.evaluate_unit(lo)) / (2.0 * step)


def _franke(x):
    x1, x2 = x[:, 0], x[:, 1]
    t1 = 0.75 * np.exp(-((9 * x1 - 2) ** 2) / 4.0 - ((9 * x2 - 2) ** 2) / 4.0)
    t2 = 0.75 * np.exp(-((9 * x1 + 1) ** 2) / 49.0 - (9 * x2 + 1) / 10.0)
    t3 = 0.5 * np.exp(-((9 * x1 - 7) ** 2) / 4.0 - ((9 * x2 - 3) ** 2) / 4.0)
    t4 = -0.2 * np.exp(-((9 * x1 - 4) ** 2) - ((9 * x2 - 7) ** 2))
    return t1 + t2 + t3 + t4


def _branin(x):
    x1, x2 = x[:, 0], x[:, 1]
    b = 5.1 / (4.0 * math.pi ** 2)
    c = 5.0 / math.pi
    t = 1.0 / (8.0 * math.pi)
    return (x2 - b * x1 ** 2 + c * x1 - 6.0) ** 2 + 10.0 * (1.0 - t) * np.cos(x1) + 10.0


def _simple1(x):
    return x[:, 0] ** 2 + x[:, 1]


def _simple1_grad(u):
    g = np.empty_like(u)
    g[:, 0] = 2.0 * u[:, 0]
    g[:, 1] = 1.0
    return g


def _simple2(x):
    return x[:, 0] * x[:, 1] - x[:, 1] * x[:, 2] + x[:, 3] * x[:, 0]


def _simple2_grad(u):
    g = np.empty_like(u)
    g[:, 0] = u[:, 1] + u[:, 3]
    g[:, 1] = u[:, 0] - u[:, 2]
    g[:, 2] = -u[:, 1]
    g[:, 3] = u[:, 0]
    return g


def _levy(x):
    w = 1.0 + (x - 1.0) / 4.0
    head = np.sin(math.pi * w[:, 0]) ** 2
    mid = np.sum((w[:, :-1] - 1.0) ** 2
                 * (1.0 + 10.0 * np.sin(math.pi * w[:, :-1] + 1.0) ** 2), axis=1)
    tail = (w[:, -1] - 1.0) ** 2 * (1.0 + np.sin(2.0 * math.pi * w[:, -1]) ** 2)
    return head + mid + tail


def _ackley(x):
    d = x.shape[1]
    term1 = -20.0 * np.exp(-0.2 * np.sqrt(np.sum(x ** 2, axis=1) / d))
    term2 = -np.exp(np.sum(np.cos(2.0 * math.pi * x), axis=1) / d)
    return term1 + term2 + 20.0 + math.e


def _detpep108d(x):
    inner = np.cumsum(x, axis=1) - 0.5 * np.arange(1, x.shape[1] + 1)
    return np.sum(inner ** 2, axis=1)


REGISTRY = {
    "franke": BenchmarkFunction("franke", 2, (0, 0), (1, 1), _franke),
    "branin": BenchmarkFunction("branin", 2, (-5, 0), (10, 15), _branin),
    "simple-1": BenchmarkFunction("simple-1", 2, (0, 0), (1, 1), _simple1, _simple1_grad),
    "simple-2": BenchmarkFunction("simple-2", 4, (0,) * 4, (1,) * 4, _simple2, _simple2_grad),
    "levy": BenchmarkFunction("levy", 6, (-10,) * 6, (10,) * 6, _levy),
    "ackley": BenchmarkFunction("ackley", 6, (-32.768,) * 6, (32.768,) * 6, _ackley),
    "detpep108d": BenchmarkFunction("detpep108d", 8, (0,) * 8, (1,) * 8, _detpep108d),
}


def get_function(name: str) -> BenchmarkFunction:
    try:
        return REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown benchmark function {name!r}; "
                         f"known: {sorted(REGISTRY)}") from None


def evaluate_function(name: str, x) -> np.ndarray:
    return get_function(name).evaluate(x)


def sample_inputs(dim: int, n: int, spec: DependenceSpec, seed=0) -> np.ndarray:
    """Column 1 ~ Unif(0,1); the rest independent uniforms or x1 + Gaussian noise.

    Dependent draws are NOT truncated to [0, 1]; callers normalize afterwards.
    """
    if n < 1 or dim < 1:
        raise ValueError("need n >= 1 and dim >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x = np.empty((n, dim))
    x[:, 0] = rng.uniform(0.0, 1.0, size=n)
    if dim > 1:
        if spec.level == "independent":
            x[:, 1:] = rng.uniform(0.0, 1.0, size=(n, dim - 1))
        else:
            eps = rng.normal(0.0, spec.sigma, size=(n, dim - 1))
            x[:, 1:] = x[:, [0]] + eps
    return x


def _conditional_siblings(dim: int, d: int, z: float, spec: DependenceSpec,
                          block: np.ndarray) -> np.ndarray:
    """Points with coordinate d pinned to z, the rest drawn from X_{\\d} | X_d = z.

    The constructive form x_j = x_1 + eps_j makes the conditional law exact:
    conditioning on x_1 fixes the anchor; for d != 1 the anchor is recovered
    as x_1 = x_d - eps_d and the siblings regenerated from it.
    """
    m = len(block)
    pts = np.empty((m, dim))
    pts[:, d] = z
    if dim == 1:
        return pts
    others = [j for j in range(dim) if j != d]
    if spec.level == "independent":
        pts[:, others] = block[:, : len(others)]
        return pts
    if d == 0:
        for col, j in enumerate(others):
            pts[:, j] = z + block[:, col]
        return pts
    anchor = z - block[:, d - 1]
    pts[:, 0] = anchor
    for j in others:
        if j != 0:
            pts[:, j] = anchor + block[:, j - 1]
    return pts


def ground_truth_main_effect(name: str, d: int, grid, spec: DependenceSpec,
                             seed=0, mc_samples: int = 100_000,
                             gradient_step: float = 1e-5,
                             pd_proxy: bool = False) -> EffectCurve:
    """Reference main effect: accumulate the conditional mean partial derivative.

    At every grid location the derivative of the unit-coordinate response is
    averaged over Monte-Carlo draws of the complement variables (conditioned
    on the location under the sampler's constructive law), then integrated
    with the cumulative trapezoid rule and centered. One shared noise block
    is reused across grid locations so the integrand is smooth in the
    location. ``pd_proxy`` instead returns the PD curve of the true response
    on freshly sampled data.
    """
    fn = get_function(name)
    grid = np.asarray(grid, dtype=float)
    if not (0 <= d < fn.dim):
        raise ValueError(f"variable index {d} out of range for {name}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    if pd_proxy:
        data = sample_inputs(fn.dim, mc_samples, spec, rng)
        values = np.empty(len(grid))
        for i, z in enumerate(grid):
            pts = data.copy()
            pts[:, d] = z
            values[i] = fn.evaluate_unit(pts).mean()
        return center_curve(EffectCurve(d=d, grid=grid, values=values, method="TRUTH"))

    if spec.level == "independent":
        block = rng.uniform(0.0, 1.0, size=(mc_samples, max(fn.dim - 1, 1)))
    else:
        block = rng.normal(0.0, spec.sigma, size=(mc_samples, max(fn.dim - 1, 1)))
    mean_grad = np.empty(len(grid))
    for i, z in enumerate(grid):
        pts = _conditional_siblings(fn.dim, d, float(z), spec, block)
        g = fn.unit_gradient_component(pts, d, step=gradient_step)
        if not np.all(np.isfinite(g)):
            raise ValueError(f"non-finite derivative of {name} at grid location {z}")
        mean_grad[i] = g.mean()
    steps = np.diff(grid)
    accumulated = np.concatenate([[0.0], np.cumsum(steps * (mean_grad[1:] + mean_grad[:-1]) / 2.0)])
    return center_curve(EffectCurve(d=d, grid=grid, values=accumulated, method="TRUTH"))
