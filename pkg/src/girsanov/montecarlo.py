"""Exact-event path samplers and weighted Monte Carlo estimators.

Sampling is deterministic per path: every path index derives its own
generator from ``(seed, index)`` through a seed sequence spawn, so results
do not depend on batching or execution order.  Estimator aggregation uses
``np.sum`` (pairwise summation), which pins means to the last bit across
runs.

The estimators weight base-process paths by the transform's multiplicative
functional instead of simulating the transformed process directly; the
cemetery convention ``f(dead) = 0`` applies throughout.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ModelError, TransformError
from .model import (
    FiniteSymmetricModel,
    JumpDiffusionModel,
    stable_small_jump_variance,
    stable_tail_intensity,
)
from .paths import Path
from .transform import (
    GeneralMF,
    PureJumpPhi,
    RhoTransform,
    log_weight_fn,
    rho_transform_mf,
    stable_rate_table,
)

__all__ = [
    "RngSpec",
    "EstimatorResult",
    "sample_finite_path",
    "sample_jump_diffusion_path",
    "estimate_transformed_semigroup",
    "estimate_mass",
    "estimate_symmetry_gap",
    "estimate_quadratic_form",
    "quadratic_form_trend",
    "estimate_jump_intensity_ratio",
]


_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngSpec:
    """Reproducible random source: one independent stream per path index.

    Streams are counter-based (Philox keyed by ``(seed, index)``), so the
    path produced for a given index never depends on how many other paths
    ran, in what order, or on how work was batched.
    """

    seed: int

    def __post_init__(self):
        if int(self.seed) < 0:
            raise DomainError("seed must be a nonnegative integer")

    def stream(self, index: int) -> np.random.Generator:
        key = np.array([self.seed & _MASK64, index & _MASK64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


class _StreamPool:
    """Reusable generator that re-keys one Philox state per path.

    Produces draw-for-draw the same output as ``RngSpec.stream(index)`` at a
    fraction of the construction cost; estimator loops go through this.
    """

    def __init__(self, seed: int, offset: int = 0):
        key = np.array([seed & _MASK64, 0], dtype=np.uint64)
        self._bg = np.random.Philox(key=key)
        self.gen = np.random.Generator(self._bg)
        self._state = self._bg.state
        self._offset = offset

    def stream(self, index: int) -> np.random.Generator:
        st = self._state
        st["state"]["key"][1] = (self._offset + index) & _MASK64
        st["state"]["counter"][:] = 0
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        st["uinteger"] = 0
        self._bg.state = st
        return self.gen


def _pool_for(rng) -> _StreamPool:
    return _StreamPool(rng.seed, getattr(rng, "_offset", 0))


@dataclass(frozen=True)
class EstimatorResult:
    """Sample mean with its standard error and 95% interval."""

    mean: float
    stderr: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("estimators need at least two samples")

    @property
    def ci95(self):
        half = 1.96 * self.stderr
        return (self.mean - half, self.mean + half)

    def covers(self, value: float) -> bool:
        lo, hi = self.ci95
        return lo <= value <= hi

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "EstimatorResult":
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        mean = float(np.sum(samples) / n)
        centered = samples - mean
        var = float(np.sum(centered * centered) / (n - 1))
        return cls(mean=mean, stderr=float(np.sqrt(var / n)), n=n)


# ---------------------------------------------------------------------------
# samplers


class _FiniteSampler:
    """Event-driven chain sampler with per-row cumulative tables prebuilt.

    The inner loop runs on plain Python floats: holding times come from the
    inverse exponential CDF of one uniform draw, the move from a second
    uniform scanned against the row's cumulative rates (jump targets first,
    death last).
    """

    def __init__(self, model: FiniteSymmetricModel):
        self.model = model
        rows = []
        for x in range(model.n):
            cum = []
            targets = []
            acc = 0.0
            for y in range(model.n):
                r = float(model.q[x, y])
                if r > 0.0:
                    acc += r
                    cum.append(acc)
                    targets.append(y)
            total = acc + float(model.k[x])
            rows.append((tuple(cum), tuple(targets), acc, total))
        self.rows = rows

    def sample(self, x0: int, horizon: float, rng: np.random.Generator) -> Path:
        rows = self.rows
        rnd = rng.random
        t = 0.0
        x = x0
        events = []
        killed = None
        while True:
            cum, targets, jump_total, total = rows[x]
            if total <= 0.0:
                break
            u = rnd()
            while u == 0.0:
                u = rnd()
            t -= math.log(1.0 - u) / total
            if t > horizon:
                break
            v = rnd() * total
            if v >= jump_total:
                killed = t
                break
            for idx, edge in enumerate(cum):
                if v < edge:
                    x = targets[idx]
                    break
            events.append((t, x))
        return Path(x0=x0, events=tuple(events), horizon=horizon, killed_at=killed)


def sample_finite_path(model: FiniteSymmetricModel, x0: int, horizon: float,
                       rng: np.random.Generator) -> Path:
    """One chain path: exponential holding at the total exit rate of the
    current state, next state proportional to its jump rates, death
    proportional to its killing rate."""
    if not (0 <= int(x0) < model.n):
        raise DomainError(f"x0 = {x0} is not a state of the model")
    return _FiniteSampler(model).sample(int(x0), float(horizon), rng)


def sample_jump_diffusion_path(model: JumpDiffusionModel, x0, horizon: float,
                               dt: float, eps: float,
                               rng: np.random.Generator) -> Path:
    """Euler-grid path of the Brownian-plus-stable process.

    Jumps longer than ``eps`` are explicit compound-Poisson events with the
    power-law radial law; shorter ones are folded into the Gaussian step,
    whose per-coordinate variance becomes ``(1 + sigma2(eps)) dt``.  Within
    a step the jumps land first and the Gaussian move follows, so recorded
    pre/post jump states contain no partial Gaussian displacement.
    """
    if dt <= 0.0 or eps <= 0.0:
        raise DomainError("dt and eps must be positive")
    n_steps = int(round(horizon / dt))
    if n_steps < 1 or abs(n_steps * dt - horizon) > 1e-9 * max(1.0, horizon):
        raise DomainError("horizon must be a positive multiple of dt")
    lam = stable_tail_intensity(model, eps)
    if lam * horizon < 1e-6:
        warnings.warn(
            "truncation radius leaves essentially no explicit jumps "
            f"(intensity * horizon = {lam * horizon:.3g})",
            UserWarning,
        )
    d = model.d
    n_jumps = int(rng.poisson(lam * horizon))
    while True:
        jump_times = np.sort(rng.uniform(0.0, horizon, size=n_jumps))
        if n_jumps == 0 or (jump_times[0] > 0.0 and np.all(np.diff(jump_times) > 0.0)):
            break
    radii = eps * rng.random(n_jumps) ** (-1.0 / model.alpha)
    if d == 1:
        signs = np.where(rng.random(n_jumps) < 0.5, -1.0, 1.0)
        sizes = radii * signs
    else:
        dirs = rng.normal(size=(n_jumps, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        sizes = radii[:, None] * dirs
    std = np.sqrt((1.0 + stable_small_jump_variance(model, eps)) * dt)
    if d == 1:
        gauss = rng.normal(0.0, std, size=n_steps)
        grid = np.empty(n_steps + 1)
    else:
        gauss = rng.normal(0.0, std, size=(n_steps, d))
        grid = np.empty((n_steps + 1, d))
    x0_arr = float(x0) if d == 1 else np.asarray(x0, dtype=float)
    grid[0] = x0_arr
    steps = gauss.copy()
    step_of_jump = np.minimum(np.ceil(jump_times / dt - 1e-9).astype(int) - 1, n_steps - 1)
    events = []
    pres = []
    cur = grid[0]
    j = 0
    for step in range(n_steps):
        base = cur
        while j < n_jumps and step_of_jump[j] == step:
            pre = base if d == 1 else base.copy()
            post = pre + sizes[j]
            events.append((float(jump_times[j]), post if d == 1 else post.copy()))
            pres.append(pre)
            base = post
            j += 1
        cur = base + gauss[step]
        grid[step + 1] = cur
    return Path(
        x0=grid[0] if d == 1 else grid[0].copy(),
        events=tuple(events),
        horizon=float(horizon),
        grid=grid,
        dt=float(dt),
        jump_pre=tuple(pres),
        eps=float(eps),
    )


# ---------------------------------------------------------------------------
# shared estimator plumbing


def _check_chain_inputs(model, f):
    f = np.asarray(f, dtype=float)
    if f.shape != (model.n,):
        raise DomainError("f has the wrong length for this model")
    return f


def _tilted_weight_vector(model: FiniteSymmetricModel, transform) -> np.ndarray:
    """Reference measure of the transformed process on a finite model."""
    if isinstance(transform, RhoTransform):
        rho = np.asarray(transform.rho, dtype=float)
        return rho * rho * model.m
    if isinstance(transform, (PureJumpPhi, GeneralMF)):
        return model.m.copy()
    raise TransformError(f"unsupported transform: {type(transform).__name__}")


def estimate_transformed_semigroup(model: FiniteSymmetricModel, transform, f,
                                   x: int, t: float, n: int, rng: RngSpec) -> EstimatorResult:
    """Weighted estimate of the transformed semigroup at a point:
    mean of ``Z_t f(X_t)`` over paths from ``x``, zero after death."""
    f = _check_chain_inputs(model, f)
    sampler = _FiniteSampler(model)
    log_w = log_weight_fn(model, transform)
    pool = _pool_for(rng)
    samples = np.empty(n)
    for i in range(n):
        path = sampler.sample(int(x), t, pool.stream(i))
        if not path.alive_at(t):
            samples[i] = 0.0
        else:
            samples[i] = math.exp(log_w(path, t)) * f[path.state_at(t)]
    return EstimatorResult.from_samples(samples)


def estimate_mass(model: FiniteSymmetricModel, transform, x: int, t: float,
                  n: int, rng: RngSpec) -> EstimatorResult:
    """Weighted mass ``E_x[Z_t; alive]``; equals 1 for every rho tilt."""
    return estimate_transformed_semigroup(model, transform, np.ones(model.n), x, t, n, rng)


def _initial_cumulative(mu: np.ndarray):
    total = float(np.sum(mu))
    if total <= 0.0:
        raise ModelError("reference measure has no mass")
    return np.cumsum(mu) / total, total


def estimate_symmetry_gap(model: FiniteSymmetricModel, transform, f, g,
                          t: float, n: int, rng: RngSpec) -> EstimatorResult:
    """Antisymmetrized pairing gap of the transformed semigroup.

    Starts each path from the normalized transformed reference measure and
    averages ``|mu| Z_t (g(X_0) f(X_t) - f(X_0) g(X_t))``; both orderings
    share the path (common random numbers), and ``f = g`` short-circuits to
    an exact zero.
    """
    f = _check_chain_inputs(model, f)
    g = _check_chain_inputs(model, g)
    if np.array_equal(f, g):
        return EstimatorResult(0.0, 0.0, n)
    mu = _tilted_weight_vector(model, transform)
    cum, total = _initial_cumulative(mu)
    sampler = _FiniteSampler(model)
    log_w = log_weight_fn(model, transform)
    pool = _pool_for(rng)
    samples = np.empty(n)
    for i in range(n):
        stream = pool.stream(i)
        x0 = int(np.searchsorted(cum, stream.random(), side="right"))
        path = sampler.sample(x0, t, stream)
        if not path.alive_at(t):
            samples[i] = 0.0
            continue
        xt = path.state_at(t)
        w = total * math.exp(log_w(path, t))
        samples[i] = w * (g[x0] * f[xt] - f[x0] * g[xt])
    return EstimatorResult.from_samples(samples)


def _continuum_initial_table(rho, region, nodes: int = 4097):
    lo, hi = float(region[0]), float(region[1])
    xs = np.linspace(lo, hi, nodes)
    w = np.asarray(rho(xs), dtype=float) ** 2
    dx = xs[1] - xs[0]
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * dx)])
    total = float(cum[-1])
    return xs, cum / total, total


def estimate_quadratic_form(model, transform, f, t: float, n: int, rng: RngSpec,
                            *, region=None, dt: float = 1e-3, eps: float = 0.01,
                            rho_grad=None, compensator=None) -> EstimatorResult:
    """Small-time energy statistic ``(1/2t) E[(f(X_t) - f(X_0))^2 Z_t]``
    with the start drawn from the transformed reference measure.

    As ``t`` decreases this climbs toward the transformed form value.  Paths
    dead at ``t`` enter through the ``f = 0`` cemetery convention, so with a
    transformed killing present the limit is the form total minus half its
    killing part; the transforms exercised here have none or are
    conservative.  On the continuum model (``region`` required, d = 1) the
    start is drawn from ``rho^2`` restricted to the region and the weight is
    the truncated-sampler functional.
    """
    if isinstance(model, JumpDiffusionModel):
        if model.d != 1:
            raise DomainError("continuum estimators are one-dimensional")
        if region is None:
            raise DomainError("continuum estimators need a region")
        if not isinstance(transform, RhoTransform) or not callable(transform.rho):
            raise TransformError("continuum estimators need a callable rho tilt")
        rho = transform.rho
        if compensator is None:
            lo, hi = float(region[0]), float(region[1])
            compensator = stable_rate_table(
                model, lambda a, b: rho(b) / rho(a) - 1.0, eps, lo - 2.0, hi + 2.0
            )
        xs, cdf, scale = _continuum_initial_table(rho, region)
        pool = _pool_for(rng)
        samples = np.empty(n)
        for i in range(n):
            stream = pool.stream(i)
            x0 = float(np.interp(stream.random(), cdf, xs))
            path = sample_jump_diffusion_path(model, x0, t, dt, eps, stream)
            trace = rho_transform_mf(path, rho, model, t,
                                     rho_grad=rho_grad, compensator=compensator)
            diff = float(f(path.state_at(t))) - float(f(x0))
            samples[i] = scale * trace.end_value * diff * diff / (2.0 * t)
        return EstimatorResult.from_samples(samples)
    f = _check_chain_inputs(model, f)
    mu = _tilted_weight_vector(model, transform)
    cum, total = _initial_cumulative(mu)
    sampler = _FiniteSampler(model)
    log_w = log_weight_fn(model, transform)
    pool = _pool_for(rng)
    samples = np.empty(n)
    inv_2t = 1.0 / (2.0 * t)
    for i in range(n):
        stream = pool.stream(i)
        x0 = int(np.searchsorted(cum, stream.random(), side="right"))
        path = sampler.sample(x0, t, stream)
        w = total * math.exp(log_w(path, t))
        f_end = f[path.state_at(t)] if path.alive_at(t) else 0.0
        diff = f_end - f[x0]
        samples[i] = w * diff * diff * inv_2t
    return EstimatorResult.from_samples(samples)


def quadratic_form_trend(model, transform, f, ts, n: int, rng: RngSpec, **kw):
    """The energy statistic at several times, smallest-variance bookkeeping
    left to the caller; each time gets its own disjoint block of streams."""
    out = []
    for idx, t in enumerate(ts):
        block = RngSpec(seed=rng.seed)
        offset = idx * n
        shifted = _OffsetRng(block, offset)
        out.append((float(t), estimate_quadratic_form(model, transform, f, float(t), n, shifted, **kw)))
    return out


class _OffsetRng:
    """RngSpec view whose stream indices start at a fixed offset."""

    def __init__(self, base: RngSpec, offset: int):
        self._base = base
        self._offset = offset
        self.seed = base.seed

    def stream(self, index: int) -> np.random.Generator:
        return self._base.stream(self._offset + index)


def estimate_jump_intensity_ratio(model: FiniteSymmetricModel, transform, pair,
                                  horizon: float, n: int, rng: RngSpec) -> EstimatorResult:
    """Empirical tilted jump rate for one ordered pair.

    Weighted count of ``x -> y`` transitions over weighted occupation time
    at ``x``, both under the end-of-path weight; the ratio converges to the
    tilted kernel entry and its standard error comes from the delta method.
    """
    x, y = int(pair[0]), int(pair[1])
    if not (0 <= x < model.n and 0 <= y < model.n and x != y):
        raise DomainError("pair must name two distinct states")
    sampler = _FiniteSampler(model)
    log_w = log_weight_fn(model, transform)
    pool = _pool_for(rng)
    num = np.empty(n)
    den = np.empty(n)
    for i in range(n):
        path = sampler.sample(x, horizon, pool.stream(i))
        w = math.exp(log_w(path, horizon))
        count = 0
        occ = 0.0
        prev_t, prev_x = 0.0, path.x0
        for s, state in path.events:
            if prev_x == x:
                occ += s - prev_t
            if prev_x == x and state == y:
                count += 1
            prev_t, prev_x = s, state
        end = path.killed_at if path.killed_at is not None else horizon
        if prev_x == x:
            occ += end - prev_t
        num[i] = w * count
        den[i] = w * occ
    num_mean = float(np.sum(num) / n)
    den_mean = float(np.sum(den) / n)
    ratio = num_mean / den_mean
    dn = num - num_mean
    dd = den - den_mean
    var_num = float(np.sum(dn * dn) / (n - 1))
    var_den = float(np.sum(dd * dd) / (n - 1))
    cov = float(np.sum(dn * dd) / (n - 1))
    var_ratio = var_num - 2.0 * ratio * cov + ratio * ratio * var_den
    stderr = float(np.sqrt(max(var_ratio, 0.0) / n)) / den_mean
    return EstimatorResult(mean=ratio, stderr=stderr, n=n)
