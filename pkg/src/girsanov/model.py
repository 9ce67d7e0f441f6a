"""Reversible Markov models and their jump/killing structure.

Two model families are supported.  ``FiniteSymmetricModel`` is a
continuous-time chain on ``{0, ..., n-1}`` described by a symmetry measure
``m``, off-diagonal jump rates ``q`` and killing rates ``k``; reversibility
means detailed balance ``m[x] q[x, y] == m[y] q[y, x]``.
``JumpDiffusionModel`` is the d-dimensional process that superposes a
Brownian motion (generator one half of the Laplacian) with a rotationally
symmetric alpha-stable jump part whose jump-rate density is
``c / |x - y|**(d + alpha)``.

Both expose the same three structural objects used throughout the package:
the jump kernel (rate density of jumps), the jump measure ``J`` carrying the
one-half weight convention, and the killing measure ``kappa = k * m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, ModelError

__all__ = [
    "FiniteSymmetricModel",
    "JumpDiffusionModel",
    "LevySystemView",
    "SymmetryReport",
    "validate_symmetry",
    "jump_measure",
    "killing_measure",
    "stable_kernel_density",
    "stable_tail_intensity",
    "stable_small_jump_variance",
    "levy_system",
]


def _readonly(a, dtype=float):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FiniteSymmetricModel:
    """Finite-state reversible chain with killing.

    Parameters
    ----------
    m : array_like, shape (n,)
        Strictly positive state weights (the symmetry measure).
    q : array_like, shape (n, n)
        Nonnegative off-diagonal jump rates.  The diagonal is not part of the
        data and must be supplied as zero; the generator's diagonal is implied
        by the negative row sums and the killing rates.
    k : array_like, shape (n,), optional
        Nonnegative killing rates (defaults to no killing).

    Detailed balance is *not* enforced here; call :func:`validate_symmetry`
    to obtain a report, which downstream operations require to be clean.
    """

    m: np.ndarray
    q: np.ndarray
    k: np.ndarray = None

    def __post_init__(self):
        m = _readonly(self.m)
        q = _readonly(self.q)
        k = _readonly(np.zeros(m.shape[0]) if self.k is None else self.k)
        if m.ndim != 1 or m.shape[0] == 0:
            raise ModelError("m must be a nonempty 1-d array")
        n = m.shape[0]
        if q.shape != (n, n):
            raise ModelError(f"q must have shape ({n}, {n}), got {q.shape}")
        if k.shape != (n,):
            raise ModelError(f"k must have shape ({n},), got {k.shape}")
        if not np.all(np.isfinite(m)) or np.any(m <= 0.0):
            raise ModelError("state weights m must be finite and strictly positive")
        if not np.all(np.isfinite(q)) or np.any(q < 0.0):
            raise ModelError("jump rates q must be finite and nonnegative")
        if np.any(np.diagonal(q) != 0.0):
            raise ModelError("diagonal of q must be zero (no fictitious self-jumps)")
        if not np.all(np.isfinite(k)) or np.any(k < 0.0):
            raise ModelError("killing rates k must be finite and nonnegative")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "k", k)

    @property
    def n(self) -> int:
        return self.m.shape[0]

    def total_rates(self) -> np.ndarray:
        """Per-state total event rate: jumps plus killing."""
        return self.q.sum(axis=1) + self.k

    def generator(self) -> np.ndarray:
        """Generator matrix: off-diagonal ``q``, diagonal ``-row sum - k``."""
        Q = np.array(self.q, dtype=float)
        np.fill_diagonal(Q, -self.q.sum(axis=1) - self.k)
        return Q


@dataclass(frozen=True)
class SymmetryReport:
    """Outcome of a detailed-balance check.

    ``violations`` lists ``(x, y, residual)`` with
    ``residual = |m[x] q[x, y] - m[y] q[y, x]|``, sorted worst first; the
    report is clean iff the list is empty.
    """

    violations: tuple
    tol: float

    @property
    def ok(self) -> bool:
        return len(self.violations) == 0

    @property
    def max_residual(self) -> float:
        return self.violations[0][2] if self.violations else 0.0

    @property
    def worst(self):
        """Worst offending pair, or ``None`` when the report is clean."""
        return self.violations[0] if self.violations else None


def validate_symmetry(model: FiniteSymmetricModel, tol: float = 1e-12) -> SymmetryReport:
    """Check detailed balance ``m[x] q[x, y] == m[y] q[y, x]`` up to ``tol``.

    Returns a :class:`SymmetryReport`; the report is clean exactly when every
    pair's absolute residual is within ``tol``.
    """
    flux = model.m[:, None] * model.q
    res = np.abs(flux - flux.T)
    xs, ys = np.nonzero(np.triu(res, k=1) > tol)
    violations = sorted(
        ((int(x), int(y), float(res[x, y])) for x, y in zip(xs, ys)),
        key=lambda v: -v[2],
    )
    return SymmetryReport(violations=tuple(violations), tol=tol)


def jump_measure(model: FiniteSymmetricModel, tol: float = 1e-12) -> np.ndarray:
    """Jump measure on ordered pairs, ``J[x, y] = 0.5 * m[x] * q[x, y]``.

    The one-half weight makes the sum of ``J`` over *ordered* pairs equal the
    usual unordered-pair energy; every quadratic form in this package sums
    over ordered pairs against this ``J``.  Asymmetric input is rejected.
    The result at the default tolerance is cached on the (immutable) model,
    so repeated calls in estimator loops pay nothing.
    """
    if tol == 1e-12:
        cached = getattr(model, "_jump_measure_cache", None)
        if cached is not None:
            return cached
    report = validate_symmetry(model, tol=tol)
    if not report.ok:
        x, y, r = report.worst
        raise ModelError(
            f"detailed balance violated at pair ({x}, {y}): residual {r:.3e}"
        )
    J = 0.5 * model.m[:, None] * model.q
    if tol == 1e-12:
        J.setflags(write=False)
        object.__setattr__(model, "_jump_measure_cache", J)
    return J


def killing_measure(model: FiniteSymmetricModel) -> np.ndarray:
    """Killing measure ``kappa[x] = k[x] * m[x]``."""
    return model.k * model.m


@dataclass(frozen=True)
class JumpDiffusionModel:
    """Brownian motion plus rotationally symmetric alpha-stable jumps.

    The diffusion part is fixed at one half of the Laplacian (variance t per
    coordinate at time t); the jump part has rate density
    ``c / |x - y|**(d + alpha)`` with ``0 < alpha < 2`` and ``c > 0``.
    There is no killing.  The symmetry measure is Lebesgue.
    """

    d: int
    alpha: float
    c: float = 1.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ModelError("dimension d must be a positive integer")
        object.__setattr__(self, "d", int(self.d))
        if not (0.0 < self.alpha < 2.0):
            raise ModelError("stability index alpha must lie in (0, 2)")
        if not (self.c > 0.0 and math.isfinite(self.c)):
            raise ModelError("kernel constant c must be positive and finite")

    @property
    def sphere_surface(self) -> float:
        """Surface area of the unit sphere in R^d."""
        return 2.0 * math.pi ** (self.d / 2.0) / math.gamma(self.d / 2.0)


def stable_kernel_density(x, y, model: JumpDiffusionModel):
    """Jump-rate density ``c / |x - y|**(d + alpha)`` of the stable part.

    ``x`` and ``y`` are points of R^d (scalars are accepted when ``d == 1``).
    Coincident points are outside the domain: the kernel is singular on the
    diagonal.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if model.d == 1:
        r = np.abs(x - y)
    else:
        diff = x - y
        r = np.sqrt(np.sum(diff * diff, axis=-1))
    if np.any(r == 0.0):
        raise DomainError("stable kernel is singular at coincident points")
    return model.c / r ** (model.d + model.alpha)


def stable_tail_intensity(model: JumpDiffusionModel, eps: float) -> float:
    """Total rate of jumps longer than ``eps``.

    Closed form ``c * S_{d-1} * eps**(-alpha) / alpha`` with ``S_{d-1}`` the
    unit-sphere surface; this is the Poisson intensity of the explicit jumps
    a truncated sampler generates.
    """
    if not (eps > 0.0):
        raise DomainError("truncation radius must be positive")
    return model.c * model.sphere_surface * eps ** (-model.alpha) / model.alpha


def stable_small_jump_variance(model: JumpDiffusionModel, eps: float) -> float:
    """Per-coordinate variance rate of the jumps shorter than ``eps``.

    Closed form ``c * S_{d-1} * eps**(2-alpha) / (d * (2 - alpha))``; a
    truncated sampler folds this into the Gaussian step on top of the
    diffusion's own unit variance rate.
    """
    if not (eps > 0.0):
        raise DomainError("truncation radius must be positive")
    return (
        model.c
        * model.sphere_surface
        * eps ** (2.0 - model.alpha)
        / (model.d * (2.0 - model.alpha))
    )


@dataclass(frozen=True)
class LevySystemView:
    """Jump mechanism ``(kernel, clock)`` of a model.

    ``kernel(x, y)`` is the jump-rate density from ``x`` to ``y`` and the
    clock is always the deterministic time ``t`` itself (every model here
    jumps at ordinary speed), so only the kernel is carried.  On the diagonal
    the kernel evaluates to zero: single points carry no jump mass.
    """

    kernel: Callable

    clock = "identity"


def levy_system(model) -> LevySystemView:
    """The jump kernel of ``model`` packaged as a :class:`LevySystemView`."""
    if isinstance(model, FiniteSymmetricModel):
        q = model.q

        def kernel(x, y):
            return 0.0 if x == y else float(q[x, y])

        return LevySystemView(kernel=kernel)
    if isinstance(model, JumpDiffusionModel):

        def kernel(x, y):
            if np.array_equal(np.asarray(x, dtype=float), np.asarray(y, dtype=float)):
                return 0.0
            return float(stable_kernel_density(x, y, model))

        return LevySystemView(kernel=kernel)
    raise ModelError(f"unsupported model type: {type(model).__name__}")
