"""Fixed-step, variable-metric, stochastic and L-BFGS scheme optimizers.

All methods are deterministic given (inputs, seed, config): plain single
threaded numpy, no hidden global state.  Trajectories record snapshots of the
unreduced frequency coordinates together with the cost value; stochastic
variants additionally record trailing-window coordinate means, matching the
convention of reporting stochastic runs averaged over the last W iterations.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .analysis import PsdProfile, average_psd
from .objective import (
    BackProjectionPool,
    ObjectiveSpec,
    cost,
    cost_gradient,
    cost_gradient_fd,
)
from .reconstruct import BACK_PROJECTION, Reconstructor

METHODS = ("gd", "var_metric_gd", "sgd", "var_metric_sgd", "lbfgs")

ARMIJO_C1 = 1e-4
MAX_HALVINGS = 50
CURVATURE_SKIP = 1e-12


class NumericsError(RuntimeError):
    """Raised when an optimizer meets a non-finite value; carries a diagnostic
    trajectory of everything recorded up to the failure."""

    def __init__(self, message: str, trajectory: "Trajectory"):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True)
class OptimizerConfig:
    method: str
    step: float  # mandatory: experiments must record the step they used
    iters: int
    beta: float = 1.0
    lbfgs_memory: int = 8
    seed: int = 0
    record_every: int = 100
    smooth_window: int = 10000
    use_fd_grad: bool = False
    fd_step: float = 1e-5

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.iters < 1 or self.record_every < 1:
            raise ValueError("iters and record_every must be >= 1")
        if not 1.0 <= self.beta <= 2.0:
            raise ValueError("beta must lie in [1, 2]")


@dataclass
class Trajectory:
    iterations: list = field(default_factory=list)
    schemes: list = field(default_factory=list)
    values: list = field(default_factory=list)
    smoothed: list | None = None  # trailing means at snapshot times (SGD only)
    final: np.ndarray | None = None
    smoothed_final: np.ndarray | None = None
    stalls: int = 0

    def record(self, iteration: int, scheme: np.ndarray, value: float, smoothed=None):
        self.iterations.append(iteration)
        self.schemes.append(scheme.copy())
        self.values.append(float(value))
        if smoothed is not None:
            if self.smoothed is None:
                self.smoothed = []
            self.smoothed.append(smoothed.copy())


@dataclass(frozen=True)
class MetricInterp:
    """Piecewise-linear spectral-density metric on a fine periodic grid.

    The density is floored at floor_frac * max before taking the -beta power,
    so the rescaled gradient is finite even at spectral zeros.
    """

    n_len: int
    grid: np.ndarray
    rho: np.ndarray
    floor_frac: float = 1e-8

    @classmethod
    def from_profile(cls, profile: PsdProfile, floor_frac: float = 1e-8):
        return cls(
            n_len=profile.n_len,
            grid=profile.grid,
            rho=profile.rho,
            floor_frac=floor_frac,
        )

    @classmethod
    def from_signals(cls, signals, grid_points: int = 20, floor_frac: float = 1e-8):
        return cls.from_profile(average_psd(signals, grid_points), floor_frac)

    def density_at(self, freqs) -> np.ndarray:
        return np.interp(
            np.asarray(freqs, dtype=float), self.grid, self.rho, period=self.n_len
        )

    def scale(self, freqs, beta: float) -> np.ndarray:
        rho = self.density_at(freqs)
        floor = self.floor_frac * float(self.rho.max())
        return np.clip(rho, floor, None) ** (-beta)


def _engines(spec: ObjectiveSpec, cfg: OptimizerConfig):
    """(value, gradient) callables for a fixed objective."""
    if cfg.use_fd_grad:
        return (
            lambda x: cost(spec, x).value,
            lambda x: cost_gradient_fd(spec, x, cfg.fd_step),
        )
    if spec.reconstructor.kind != BACK_PROJECTION:
        raise ValueError(
            "analytic gradients exist only for back_projection; set use_fd_grad"
        )
    if len(spec.signals) > 4:
        pool = BackProjectionPool(spec.signals, spec.sigma)
        return pool.value, lambda x: pool.value_and_grad(x)[1]
    return (
        lambda x: cost(spec, x).value,
        lambda x: cost_gradient(spec, x),
    )


def _check_finite(arr, what: str, traj: Trajectory):
    if not np.all(np.isfinite(arr)):
        raise NumericsError(f"non-finite {what} encountered", traj)


def _descend(spec, x0, cfg: OptimizerConfig, metric: MetricInterp | None) -> Trajectory:
    value, grad = _engines(spec, cfg)
    x = np.array(x0, dtype=float)
    traj = Trajectory()
    traj.record(0, x, value(x))
    for it in range(1, cfg.iters + 1):
        g = grad(x)
        if metric is not None:
            g = g * metric.scale(x, cfg.beta)
        _check_finite(g, "gradient", traj)
        x = x - cfg.step * g
        if it % cfg.record_every == 0 or it == cfg.iters:
            v = value(x)
            _check_finite(v, "cost", traj)
            traj.record(it, x, v)
    traj.final = x.copy()
    return traj


def run_gd(spec: ObjectiveSpec, x0, cfg: OptimizerConfig) -> Trajectory:
    """Fixed-step gradient descent: x <- x - step * grad."""
    if cfg.method != "gd":
        raise ValueError("config method must be 'gd'")
    return _descend(spec, x0, cfg, metric=None)


def run_var_metric(
    spec: ObjectiveSpec, x0, cfg: OptimizerConfig, metric: MetricInterp
) -> Trajectory:
    """Gradient descent with each coordinate rescaled by rho(xi_m)^-beta."""
    if cfg.method not in ("var_metric_gd", "var_metric_sgd"):
        raise ValueError("config method must be a var_metric variant")
    if cfg.method == "var_metric_sgd":
        raise ValueError("use run_sgd with a metric for the stochastic variant")
    return _descend(spec, x0, cfg, metric=metric)


def run_sgd(
    sampler,
    x0,
    cfg: OptimizerConfig,
    sigma: float = 0.0,
    metric: MetricInterp | None = None,
) -> Trajectory:
    """Single-sample stochastic gradient descent on the back-projection cost.

    ``sampler(rng) -> Signal`` draws one fresh signal per iteration from the
    generator seeded with cfg.seed; the stochastic gradient is the analytic
    gradient with respect to that signal only (batch size fixed at 1).
    Recorded cost values are the per-iteration single-signal costs, i.e.
    stochastic estimates.  Snapshot and final schemes come with trailing
    means over the last min(t, smooth_window) iterates.
    """
    if cfg.method not in ("sgd", "var_metric_sgd"):
        raise ValueError("config method must be an sgd variant")
    if cfg.method == "var_metric_sgd" and metric is None:
        raise ValueError("var_metric_sgd requires a metric")
    rng = np.random.default_rng(cfg.seed)
    rec = Reconstructor(BACK_PROJECTION)
    x = np.array(x0, dtype=float)
    m = x.size
    window = np.empty((cfg.smooth_window, m))
    traj = Trajectory()
    first = sampler(rng)
    traj.record(0, x, cost(ObjectiveSpec.single(first, rec, sigma), x).value, smoothed=x)
    for it in range(1, cfg.iters + 1):
        u = sampler(rng)
        spec = ObjectiveSpec.single(u, rec, sigma)
        g = cost_gradient(spec, x)
        if metric is not None:
            g = g * metric.scale(x, cfg.beta)
        _check_finite(g, "gradient", traj)
        x = x - cfg.step * g
        window[(it - 1) % cfg.smooth_window] = x
        if it % cfg.record_every == 0 or it == cfg.iters:
            filled = min(it, cfg.smooth_window)
            smoothed = window[:filled].mean(axis=0)
            v = cost(spec, x).value
            _check_finite(v, "cost", traj)
            traj.record(it, x, v, smoothed=smoothed)
    traj.final = x.copy()
    traj.smoothed_final = window[: min(cfg.iters, cfg.smooth_window)].mean(axis=0)
    return traj


def _two_loop(g, pairs, gamma):
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    q *= gamma
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return q


def run_lbfgs(spec: ObjectiveSpec, x0, cfg: OptimizerConfig) -> Trajectory:
    """L-BFGS with the two-loop recursion and a backtracking line search.

    The inverse Hessian seed is (s.y / y.y) Id from the latest pair, or
    cfg.step * Id before any curvature information exists; pairs with
    s.y <= 1e-12 are skipped.  The Armijo backtracking halves at most 50
    times; on failure the step is zero, the stall is recorded, and the run
    stops early (a deterministic objective cannot evolve further from an
    identical state).  With lbfgs_memory = 0 this degenerates to gradient
    descent with a line search.
    """
    if cfg.method != "lbfgs":
        raise ValueError("config method must be 'lbfgs'")
    value, grad = _engines(spec, cfg)
    return _lbfgs_loop(value, grad, x0, cfg)


def _lbfgs_loop(value, grad, x0, cfg: OptimizerConfig) -> Trajectory:
    x = np.array(x0, dtype=float)
    f = value(x)
    g = grad(x)
    pairs = deque(maxlen=max(cfg.lbfgs_memory, 0))
    traj = Trajectory()
    traj.record(0, x, f)
    _check_finite(g, "gradient", traj)
    for it in range(1, cfg.iters + 1):
        gamma = cfg.step
        if pairs:
            s, y, _ = pairs[-1]
            gamma = (s @ y) / (y @ y)
        d = -_two_loop(g, pairs, gamma)
        slope = g @ d
        if slope >= 0:  # non-descent direction, fall back to scaled steepest descent
            d = -gamma * g
            slope = g @ d
        t = 1.0
        ok = False
        for _ in range(MAX_HALVINGS):
            f_new = value(x + t * d)
            if np.isfinite(f_new) and f_new <= f + ARMIJO_C1 * t * slope:
                ok = True
                break
            t *= 0.5
        if not ok:
            traj.stalls += 1
            traj.record(it, x, f)
            break
        x_new = x + t * d
        g_new = grad(x_new)
        _check_finite(g_new, "gradient", traj)
        s_vec = x_new - x
        y_vec = g_new - g
        sy = s_vec @ y_vec
        if sy > CURVATURE_SKIP:
            pairs.append((s_vec, y_vec, 1.0 / sy))
        x, f, g = x_new, f_new, g_new
        if it % cfg.record_every == 0 or it == cfg.iters:
            traj.record(it, x, f)
    traj.final = x.copy()
    return traj


def evaluate_scheme(freqs, dataset, rec: Reconstructor, sigma: float = 0.0) -> float:
    """Average reconstruction cost of a fixed scheme over a dataset."""
    return cost(ObjectiveSpec(rec, tuple(dataset), sigma), freqs).value
