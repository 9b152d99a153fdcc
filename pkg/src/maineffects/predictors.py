"""Black-box prediction interfaces: analytic, noisy, trained NN, subprocess.

Every estimator sees only ``predict_batch``: a list of D-dimensional points
in, one value per point out, order preserved.
"""

from __future__ import annotations

import json
import math
import shlex
import subprocess
import threading
from dataclasses import dataclass

import numpy as np

from .core import Dataset


class PredictorError(RuntimeError):
    """Raised when a predictor cannot produce values (I/O, NaNs, divergence)."""


def _as_points(points, dim: int) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return pts.reshape(0, dim)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise PredictorError(
            f"expected points of dimension {dim}, got shape {pts.shape}"
        )
    if not np.all(np.isfinite(pts)):
        raise PredictorError("query points contain non-finite entries")
    return pts


def _check_outputs(values: np.ndarray, n: int, source: str) -> np.ndarray:
    values = np.asarray(values, dtype=float).reshape(-1)
    if len(values) != n:
        raise PredictorError(f"{source} returned {len(values)} values for {n} points")
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise PredictorError(f"{source} produced non-finite output at index {bad[0]}")
    return values


class Predictor:
    """Batched query interface; subclasses set ``dim`` and ``deterministic``."""

    dim: int
    deterministic: bool = True

    def predict_batch(self, points) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, points) -> np.ndarray:
        return self.predict_batch(points)


class AnalyticPredictor(Predictor):
    """Wraps a vectorized closed-form function of an (n, D) array."""

    def __init__(self, fn, dim: int, name: str = "analytic"):
        self.fn = fn
        self.dim = dim
        self.name = name

    def predict_batch(self, points) -> np.ndarray:
        pts = _as_points(points, self.dim)
        if len(pts) == 0:
            return np.empty(0)
        return _check_outputs(self.fn(pts), len(pts), self.name)


class NoisyPredictor(Predictor):
    """Inner predictor plus fresh zero-mean Gaussian noise on every query."""

    deterministic = False

    def __init__(self, inner: Predictor, sigma: float, seed=0):
        if sigma < 0:
            raise ValueError("sigma must be >= 0")
        self.inner = inner
        self.sigma = float(sigma)
        self.dim = inner.dim
        self.rng = np.random.default_rng(seed)
        self._lock = threading.Lock()  # draws stay sequential under concurrency
        if sigma == 0:
            self.deterministic = inner.deterministic

    def predict_batch(self, points) -> np.ndarray:
        values = self.inner.predict_batch(points)
        if self.sigma == 0 or len(values) == 0:
            return values
        with self._lock:
            noise = self.rng.normal(0.0, self.sigma, size=len(values))
        return values + noise


def wrap_with_noise(predictor: Predictor, sigma: float, seed=0) -> NoisyPredictor:
    return NoisyPredictor(predictor, sigma, seed)


def calibrate_noise_sigma(responses) -> float:
    """Noise std giving variance equal to 10% of the sample response variance."""
    responses = np.asarray(responses, dtype=float)
    if responses.ndim != 1 or len(responses) < 2:
        raise ValueError("need at least 2 responses to calibrate noise")
    return math.sqrt(0.1 * float(np.var(responses, ddof=1)))


class CountingPredictor(Predictor):
    """Pass-through wrapper that counts queried points."""

    def __init__(self, inner: Predictor):
        self.inner = inner
        self.dim = inner.dim
        self.deterministic = inner.deterministic
        self.queries = 0

    def predict_batch(self, points) -> np.ndarray:
        values = self.inner.predict_batch(points)
        self.queries += len(values)
        return values


class MemoizedPredictor(Predictor):
    """Within-run cache keyed on coordinates rounded to 15 significant digits.

    Only valid over deterministic predictors; Assumption-1 noise needs a
    fresh draw per evaluation, so noisy predictors are rejected.
    """

    def __init__(self, inner: Predictor):
        if not inner.deterministic:
            raise ValueError("memoization over a non-deterministic predictor")
        self.inner = inner
        self.dim = inner.dim
        self._cache: dict[tuple, float] = {}

    @staticmethod
    def _key(row: np.ndarray) -> tuple:
        return tuple(f"{v:.15g}" for v in row)

    def predict_batch(self, points) -> np.ndarray:
        pts = _as_points(points, self.dim)
        n = len(pts)
        if n == 0:
            return np.empty(0)
        keys = [self._key(row) for row in pts]
        miss: dict[tuple, int] = {}  # first row index per unseen key
        for i, k in enumerate(keys):
            if k not in self._cache and k not in miss:
                miss[k] = i
        if miss:
            rows = list(miss.values())
            fresh = self.inner.predict_batch(pts[rows])
            for k, v in zip(miss, fresh):
                self._cache[k] = float(v)
        return np.array([self._cache[k] for k in keys])


# --------------------------------------------------------------------------
# Tiny feedforward network: one hidden layer, linear output.
# --------------------------------------------------------------------------

_ACTIVATIONS = {
    "sigmoid": (
        lambda z: 1.0 / (1.0 + np.exp(-z)),
        lambda h: h * (1.0 - h),  # derivative in terms of the activation value
    ),
    "tanh": (np.tanh, lambda h: 1.0 - h * h),
}


@dataclass
class NNTrainConfig:
    hidden: int = 5
    max_iterations: int = 500
    initial_step: float = 0.0125  # per-weight resilient step size at start
    step_grow: float = 1.2
    step_shrink: float = 0.5
    seed: int = 0
    standardize_responses: bool = True
    activation: str = "sigmoid"
    stall_limit: int = 100  # stop after this many iterations without improvement


class TinyNN(Predictor):
    """Single-hidden-layer network with linear output activation."""

    def __init__(self, dim, w1, b1, w2, b2, activation="sigmoid",
                 y_mean=0.0, y_scale=1.0, loss_history=()):
        self.dim = dim
        self.w1 = np.asarray(w1, dtype=float)
        self.b1 = np.asarray(b1, dtype=float)
        self.w2 = np.asarray(w2, dtype=float)
        self.b2 = float(b2)
        self.activation = activation
        self.y_mean = float(y_mean)
        self.y_scale = float(y_scale)
        self.loss_history = tuple(loss_history)

    @property
    def hidden(self) -> int:
        return len(self.b1)

    def _forward(self, pts: np.ndarray) -> np.ndarray:
        act = _ACTIVATIONS[self.activation][0]
        h = act(pts @ self.w1 + self.b1)
        return h @ self.w2 + self.b2

    def predict_batch(self, points) -> np.ndarray:
        pts = _as_points(points, self.dim)
        if len(pts) == 0:
            return np.empty(0)
        out = self.y_mean + self.y_scale * self._forward(pts)
        return _check_outputs(out, len(pts), "TinyNN")

    def to_json(self) -> str:
        return json.dumps({
            "dim": self.dim,
            "w1": self.w1.tolist(),
            "b1": self.b1.tolist(),
            "w2": self.w2.tolist(),
            "b2": self.b2,
            "activation": self.activation,
            "y_mean": self.y_mean,
            "y_scale": self.y_scale,
        })

    @classmethod
    def from_json(cls, text: str) -> "TinyNN":
        return cls(**json.loads(text))


def train_tiny_nn(dataset: Dataset, config: NNTrainConfig | None = None) -> TinyNN:
    """Full-batch backpropagation with resilient per-weight steps (iRprop-).

    Each weight carries its own step size: grown by ``step_grow`` while the
    gradient sign persists, shrunk by ``step_shrink`` on a sign flip (whose
    step is skipped). The best parameters seen are kept, and the recorded
    loss checkpoints are the successive improvements, hence non-increasing.
    Plain fixed-step descent stalls at the best linear fit on these budgets;
    resilient steps reach the sigmoid curvature within the 500-iteration cap.
    """
    cfg = config or NNTrainConfig()
    if dataset.n < 10:
        raise ValueError("need at least 10 samples to train")
    act, dact = _ACTIVATIONS[cfg.activation]
    x = dataset.inputs
    y = dataset.responses.astype(float)
    y_mean, y_scale = 0.0, 1.0
    if cfg.standardize_responses:
        y_mean = float(y.mean())
        spread = float(y.std())
        y_scale = spread if spread > 1e-12 else 1.0
    t = (y - y_mean) / y_scale

    n, d = x.shape
    h = cfg.hidden
    rng = np.random.default_rng(cfg.seed)
    a1 = math.sqrt(6.0 / (d + h))
    a2 = math.sqrt(6.0 / (h + 1))
    params = [rng.uniform(-a1, a1, size=(d, h)), np.zeros(h),
              rng.uniform(-a2, a2, size=h), np.zeros(1)]

    if float(np.ptp(t)) == 0.0:
        # Degenerate constant target: the zero-output net is the exact optimum.
        return TinyNN(d, params[0], np.zeros(h), np.zeros(h), t[0],
                      cfg.activation, y_mean, y_scale, [0.0])

    def loss_and_grads(p):
        w1, b1, w2, b2 = p
        hid = act(x @ w1 + b1)
        err = hid @ w2 + b2[0] - t
        loss = float(np.mean(err * err))
        e = (2.0 / n) * err
        g_hid = np.outer(e, w2) * dact(hid)
        return loss, [x.T @ g_hid, g_hid.sum(axis=0), hid.T @ e, np.array([e.sum()])]

    steps = [np.full_like(p, cfg.initial_step) for p in params]
    prev = [np.zeros_like(p) for p in params]
    loss, grads = loss_and_grads(params)
    best_loss = loss
    best_params = [p.copy() for p in params]
    history = [loss]
    stalled = 0
    for it in range(1, cfg.max_iterations + 1):
        for i, g in enumerate(grads):
            flip = prev[i] * g
            steps[i] = np.where(flip > 0, np.minimum(steps[i] * cfg.step_grow, 50.0),
                                np.where(flip < 0,
                                         np.maximum(steps[i] * cfg.step_shrink, 1e-9),
                                         steps[i]))
            g = np.where(flip < 0, 0.0, g)
            params[i] = params[i] - np.sign(g) * steps[i]
            prev[i] = g
        loss, grads = loss_and_grads(params)
        if not math.isfinite(loss):
            raise PredictorError(f"TinyNN training diverged at iteration {it}")
        if loss < best_loss:
            best_loss = loss
            best_params = [p.copy() for p in params]
            history.append(loss)
            stalled = 0
        else:
            stalled += 1
        if best_loss < 1e-14 or stalled >= cfg.stall_limit:
            break
    w1, b1, w2, b2 = best_params
    return TinyNN(d, w1, b1, w2, b2[0], cfg.activation, y_mean, y_scale, history)


# --------------------------------------------------------------------------
# External predictor over newline-delimited JSON (stdin/stdout).
# --------------------------------------------------------------------------

class SubprocessPredictor(Predictor):
    """Speaks the predictor wire protocol with a child process.

    hello/ready handshake on start, predict/result pairs matched by strictly
    increasing ids, bye on close. Batches above ``batch_limit`` points are
    chunked transparently.
    """

    def __init__(self, command, dim: int, batch_limit: int = 1024,
                 deterministic: bool = True):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.dim = dim
        self.batch_limit = batch_limit
        self.deterministic = deterministic
        self._next_id = 0
        self.queries = 0
        self._lock = threading.Lock()  # one request/response pair at a time
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise PredictorError(f"cannot launch predictor command {self.command}: {exc}")
        self._send({"type": "hello", "dims": dim})
        reply = self._recv()
        if reply.get("type") != "ready":
            self._fail(f"expected ready handshake, got {reply!r}")

    def _fail(self, message: str):
        stderr = ""
        if self._proc.poll() is not None:
            try:
                stderr = self._proc.stderr.read()[-500:]
            except Exception:
                pass
        self.close(send_bye=False)
        detail = f"; stderr: {stderr.strip()}" if stderr.strip() else ""
        raise PredictorError(f"{' '.join(self.command)}: {message}{detail}")

    def _send(self, obj: dict):
        try:
            self._proc.stdin.write(json.dumps(obj) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError):
            self._fail("process closed its stdin")

    def _recv(self) -> dict:
        line = self._proc.stdout.readline()
        if line == "":
            self._fail(f"process exited (code {self._proc.poll()}) mid-session")
        try:
            return json.loads(line)
        except json.JSONDecodeError:
            self._fail(f"unparseable response line: {line!r}")

    def predict_batch(self, points) -> np.ndarray:
        pts = _as_points(points, self.dim)
        if len(pts) == 0:
            return np.empty(0)
        out = np.empty(len(pts))
        with self._lock:
            for start in range(0, len(pts), self.batch_limit):
                chunk = pts[start:start + self.batch_limit]
                req_id = self._next_id
                self._next_id += 1
                self._send({"type": "predict", "id": req_id, "points": chunk.tolist()})
                reply = self._recv()
                if reply.get("type") == "error":
                    self._fail(f"predictor error: {reply.get('message')}")
                if reply.get("type") != "result" or reply.get("id") != req_id:
                    self._fail(f"protocol violation, reply {reply!r} to request {req_id}")
                values = _check_outputs(np.array(reply.get("values", []), dtype=float),
                                        len(chunk), " ".join(self.command))
                out[start:start + len(chunk)] = values
                self.queries += len(chunk)
        return out

    def close(self, send_bye: bool = True):
        if getattr(self, "_proc", None) is None:
            return
        if send_bye and self._proc.poll() is None:
            try:
                self._proc.stdin.write(json.dumps({"type": "bye"}) + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError):
                pass
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()
        for stream in (self._proc.stdin, self._proc.stdout, self._proc.stderr):
            if stream is not None:
                try:
                    stream.close()
                except OSError:
                    pass  # closing a broken pipe flushes and re-raises
        self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __del__(self):
        try:
            self.close(send_bye=False)
        except Exception:
            pass
