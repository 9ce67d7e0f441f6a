"""Energy forms of base and transformed models, exact and by quadrature.

Every quadratic form here decomposes into a local (gradient) part, a jump
part and a killing part.  On finite chains the local part vanishes and the
jump part is the double sum over ORDERED pairs weighted by the half-measure
``J = m q / 2`` — summing both orders with the half weight is equivalent to
summing unordered pairs with full weight, and mixing the two conventions is
the classic factor-of-two mistake; every routine in this module uses the
ordered-pair convention.

The module's master identity is form-generator duality: each form value
must match ``-(Q f, f)`` in the matching weighted inner product, with the
generator built by an independent route.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, TransformError
from .model import (
    FiniteSymmetricModel,
    JumpDiffusionModel,
    jump_measure,
    killing_measure,
)
from .transform import (
    GeneralMF,
    PureJumpPhi,
    RhoTransform,
    transformed_jump_measure,
    transformed_killing,
)

__all__ = [
    "FormValue",
    "base_form",
    "transformed_generator",
    "pure_jump_generator",
    "transformed_form_rho",
    "transformed_form_phi",
    "ConservativenessReport",
    "conservativeness_check",
    "QuadratureForm",
    "continuum_form_quadrature",
    "DomainReport",
    "domain_membership",
]


@dataclass(frozen=True)
class FormValue:
    """Beurling-Deny split of a quadratic form value; all parts nonnegative."""

    continuous_part: float
    jump_part: float
    killing_part: float

    @property
    def total(self) -> float:
        return self.continuous_part + self.jump_part + self.killing_part


def _pair_energy(J: np.ndarray, f: np.ndarray) -> float:
    diff = f[:, None] - f[None, :]
    return float(np.sum(J * diff * diff))


def base_form(model: FiniteSymmetricModel, f) -> FormValue:
    """Energy ``sum_{x,y} (f(x)-f(y))^2 J(x,y) + sum_x kappa(x) f(x)^2``.

    The jump sum runs over ordered pairs against the half-weighted measure.
    Equals ``-(Qf, f)_m`` for every ``f``.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (model.n,):
        raise DomainError("f has the wrong length for this model")
    jump = _pair_energy(jump_measure(model), f)
    kill = float(np.sum(killing_measure(model) * f * f))
    return FormValue(0.0, jump, kill)


def transformed_generator(model: FiniteSymmetricModel, rho) -> np.ndarray:
    """Generator of the rho-tilted process, column by column from its
    definition ``Qhat f = (Q(rho f) - f Q rho) / rho``.

    Built by applying the base generator to ``rho``-weighted basis vectors
    rather than from the tilted kernel, so the two routes can be compared.
    Row sums vanish identically (killing is absorbed by the tilt).
    """
    if isinstance(rho, RhoTransform):
        rho = rho.rho
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (model.n,):
        raise DomainError("rho has the wrong length for this model")
    if np.any(rho <= 0.0) or not np.all(np.isfinite(rho)):
        raise TransformError("rho must be finite and strictly positive")
    Q = model.generator()
    Qrho = Q @ rho
    n = model.n
    out = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        out[:, j] = (Q @ (rho * e) - e * Qrho) / rho
    return out


def pure_jump_generator(model: FiniteSymmetricModel, phi) -> np.ndarray:
    """Generator with jump rates ``(1 + phi) q`` and the base killing."""
    if isinstance(phi, PureJumpPhi):
        phi = phi.phi
    phi = np.asarray(phi, dtype=float)
    rates = (1.0 + phi) * model.q
    np.fill_diagonal(rates, 0.0)
    out = rates.copy()
    np.fill_diagonal(out, -(rates.sum(axis=1) + model.k))
    return out


def transformed_form_rho(model: FiniteSymmetricModel, rho, f) -> FormValue:
    """Energy of the rho-tilted process: jump measure ``rho(x)rho(y)J``,
    no killing part.  Equals ``-(Qhat f, f)`` weighted by ``rho^2 m``."""
    if isinstance(rho, RhoTransform):
        rho = rho.rho
    rho = np.asarray(rho, dtype=float)
    f = np.asarray(f, dtype=float)
    if f.shape != (model.n,):
        raise DomainError("f has the wrong length for this model")
    J_hat = transformed_jump_measure(model, RhoTransform(rho))
    return FormValue(0.0, _pair_energy(J_hat, f), 0.0)


def transformed_form_phi(model: FiniteSymmetricModel, phi, f) -> FormValue:
    """Energy of the jump-tilted process: measure ``(1 + phi)J``, killing kept."""
    if not isinstance(phi, PureJumpPhi):
        phi = PureJumpPhi(np.asarray(phi, dtype=float))
    f = np.asarray(f, dtype=float)
    if f.shape != (model.n,):
        raise DomainError("f has the wrong length for this model")
    J_y = transformed_jump_measure(model, phi)
    kappa_y = transformed_killing(model, phi)
    return FormValue(0.0, _pair_energy(J_y, f), float(np.sum(kappa_y * f * f)))


@dataclass(frozen=True)
class ConservativenessReport:
    """Evidence that the rho-tilted process conserves mass.

    ``row_sum_residual`` is ``max |Qhat 1|`` and ``unit_form_value`` the
    tilted energy of the constant-one vector; both vanish (to rounding) even
    when the base model kills, because the tilt absorbs killing.
    """

    row_sum_residual: float
    unit_form_value: float
    tol: float = 1e-12

    @property
    def ok(self) -> bool:
        return self.row_sum_residual <= self.tol and abs(self.unit_form_value) <= self.tol

    def __bool__(self) -> bool:
        return self.ok


def conservativeness_check(model: FiniteSymmetricModel, rho, tol: float = 1e-12) -> ConservativenessReport:
    q_hat = transformed_generator(model, rho)
    ones = np.ones(model.n)
    residual = float(np.max(np.abs(q_hat @ ones)))
    unit = transformed_form_rho(model, rho, ones).total
    return ConservativenessReport(residual, unit, tol)


# ---------------------------------------------------------------------------
# continuum quadrature


@dataclass(frozen=True)
class QuadratureForm:
    """Two-level quadrature value of a continuum form.

    ``error_estimate`` is the change between the coarse and fine mesh
    (Richardson-style); ``inconclusive`` is set when the two levels disagree
    so badly that the value should not be trusted.
    """

    continuous_part: float
    jump_part: float
    killing_part: float
    error_estimate: float
    mesh: int
    inconclusive: bool = False

    @property
    def total(self) -> float:
        return self.continuous_part + self.jump_part + self.killing_part


def _quad_level(rho, f, model: JumpDiffusionModel, lo: float, hi: float, n: int):
    """Midpoint-rule form value on one mesh level.

    Pairs closer than ``delta = 2h`` are removed from the double sum and
    replaced by the second-order substitution ``(f(y)-f(x))^2 ~ f'(x)^2
    (y-x)^2``, which integrates the near-diagonal kernel in closed form.
    """
    h = (hi - lo) / n
    x = lo + (np.arange(n) + 0.5) * h
    fx = np.asarray(f(x), dtype=float)
    rx = np.asarray(rho(x), dtype=float)
    df = (np.asarray(f(x + h), dtype=float) - np.asarray(f(x - h), dtype=float)) / (2.0 * h)
    cont = 0.5 * float(np.sum(rx * rx * df * df)) * h
    delta = 2.0 * h
    alpha = model.alpha
    dist = np.abs(x[:, None] - x[None, :])
    fbar = fx[:, None] - fx[None, :]
    weight = rx[:, None] * rx[None, :]
    with np.errstate(divide="ignore"):
        kern = (model.c / 2.0) * dist ** (-1.0 - alpha)
    kern[dist < delta] = 0.0
    far = float(np.sum(fbar * fbar * weight * kern)) * h * h
    near_factor = model.c * delta ** (2.0 - alpha) / (2.0 - alpha)
    near = float(np.sum(rx * rx * df * df)) * near_factor * h
    return cont, far + near


def continuum_form_quadrature(rho, f, model: JumpDiffusionModel, region, mesh: int) -> QuadratureForm:
    """Quadrature value of the tilted continuum energy over a box.

    ``region = (lo, hi)`` truncates both arguments of the jump double
    integral; ``f`` and ``rho`` should be smooth with ``f`` effectively
    supported inside the region.  The value is computed on ``mesh`` and
    ``2 * mesh`` cells and the fine value is returned together with the
    inter-level change as the error estimate.  One-dimensional models only.
    """
    if model.d != 1:
        raise DomainError("form quadrature is implemented for one-dimensional models")
    lo, hi = float(region[0]), float(region[1])
    if not hi > lo:
        raise DomainError("region must be a nonempty interval")
    if mesh < 8:
        raise DomainError("mesh too coarse")
    c_lo, j_lo = _quad_level(rho, f, model, lo, hi, mesh)
    c_hi, j_hi = _quad_level(rho, f, model, lo, hi, 2 * mesh)
    err = abs((c_hi + j_hi) - (c_lo + j_lo))
    total = c_hi + j_hi
    bad = not np.isfinite(total) or (abs(total) > 0 and err > 0.5 * abs(total))
    return QuadratureForm(c_hi, j_hi, 0.0, err, 2 * mesh, inconclusive=bad)


@dataclass(frozen=True)
class DomainReport:
    """Finiteness witnesses for membership in a transformed form domain.

    The three witnesses are the local energy against ``rho^2``, the jump
    energy against the tilted jump measure, and the squared norm against the
    tilted reference measure.  ``status`` is ``"ok"`` or ``"inconclusive"``
    (quadrature failed to settle).
    """

    in_domain: bool
    continuous_energy: float
    jump_energy: float
    squared_norm: float
    status: str = "ok"

    def __bool__(self) -> bool:
        return self.in_domain


def domain_membership(model, transform, f, region=None, mesh: int = 256) -> DomainReport:
    """Check the three finiteness witnesses of form-domain membership.

    On finite models every function qualifies and the witnesses are exact
    sums.  On the continuum model the witnesses are quadrature values over
    ``region`` and membership means all three are finite and the form
    quadrature converged.
    """
    if isinstance(model, FiniteSymmetricModel):
        f_arr = np.asarray(f, dtype=float)
        if isinstance(transform, RhoTransform):
            rho = np.asarray(transform.rho, dtype=float)
            fv = transformed_form_rho(model, rho, f_arr)
            sq = float(np.sum(f_arr * f_arr * rho * rho * model.m))
        elif isinstance(transform, PureJumpPhi):
            fv = transformed_form_phi(model, transform, f_arr)
            sq = float(np.sum(f_arr * f_arr * model.m))
        elif isinstance(transform, GeneralMF):
            J_y = (1.0 + np.asarray(transform.phi, dtype=float)) * jump_measure(model)
            fv = FormValue(0.0, _pair_energy(0.5 * (J_y + J_y.T), f_arr),
                           float(np.sum(transformed_killing(model, transform) * f_arr * f_arr)))
            sq = float(np.sum(f_arr * f_arr * model.m))
        else:
            raise TransformError(f"unsupported transform: {type(transform).__name__}")
        wits = (fv.continuous_part, fv.jump_part, sq)
        return DomainReport(all(np.isfinite(w) for w in wits), *wits)
    if not isinstance(model, JumpDiffusionModel):
        raise DomainError(f"unsupported model type: {type(model).__name__}")
    if region is None:
        raise DomainError("continuum membership checks need a region")
    if not isinstance(transform, RhoTransform) or not callable(transform.rho):
        raise TransformError("continuum membership checks need a callable rho tilt")
    rho = transform.rho
    try:
        qf = continuum_form_quadrature(rho, f, model, region, mesh)
        lo, hi = float(region[0]), float(region[1])
        h = (hi - lo) / (2 * mesh)
        xs = lo + (np.arange(2 * mesh) + 0.5) * h
        fx = np.asarray(f(xs), dtype=float)
        rx = np.asarray(rho(xs), dtype=float)
        sq = float(np.sum(fx * fx * rx * rx)) * h
    except Exception:
        return DomainReport(False, float("nan"), float("nan"), float("nan"), status="inconclusive")
    wits = (qf.continuous_part, qf.jump_part, sq)
    finite = all(np.isfinite(w) for w in wits)
    if qf.inconclusive:
        return DomainReport(False, *wits, status="inconclusive")
    return DomainReport(finite, *wits)
