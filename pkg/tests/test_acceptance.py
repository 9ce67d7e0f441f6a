"""End-to-end acceptance checks, one test per deliverable claim.

Each test verifies a documented identity or estimator guarantee at its stated
tolerance and asserts its own wall-clock budget, so a throughput regression
fails loudly instead of quietly stretching CI.  Exact identities are checked
against independently computed routes (definition vs tilted kernel, form value
vs generator pairing, closed-form vs quadrature); Monte Carlo checks compare
against matrix-exponential or quadrature oracles through 95% confidence
intervals, with a replicated calibration run guarding the interval coverage
itself.
"""

import math
import time

import numpy as np
import pytest
from scipy.linalg import expm

from conftest import CHAIN3_Q, make_consistent_pair, make_reversible, make_symmetric_phi
from girsanov import (
    FiniteSymmetricModel,
    JumpDiffusionModel,
    PureJumpPhi,
    RhoTransform,
    RngSpec,
    conservativeness_check,
    continuum_form_quadrature,
    estimate_mass,
    estimate_quadratic_form,
    estimate_symmetry_gap,
    estimate_transformed_semigroup,
    evenness_residual,
    jump_measure_density,
    inverse_transform,
    lyons_zheng_residual,
    pure_jump_generator,
    pure_jump_mf,
    quadratic_form_trend,
    reversal_identity_residual,
    sample_finite_path,
    sample_jump_diffusion_path,
    split_mf,
    stable_tail_intensity,
    transformed_form_phi,
    transformed_form_rho,
    transformed_generator,
    transformed_model,
)

F010 = np.array([0.0, 1.0, 0.0])


@pytest.fixture(scope="module")
def models50():
    """Fifty random reversible models, sizes 3..8; the second half killed.

    Paired with a random positive state tilt drawn once per model, shared by
    every exact-identity test below.
    """
    rng = np.random.default_rng(2026)
    out = []
    for i in range(50):
        n = int(rng.integers(3, 9))
        model = make_reversible(rng, n, with_killing=(i >= 25))
        rho = rng.uniform(0.3, 3.0, size=n)
        out.append((model, rho))
    return out


@pytest.fixture(scope="module")
def energy_trend():
    """Energy statistic at shrinking times, one million paths per time.

    Computed once and shared by the monotonicity and the interval test; the
    elapsed time is returned so the budget can be asserted alongside.
    """
    chain = FiniteSymmetricModel(m=np.ones(3), q=CHAIN3_Q.copy())
    rho = np.array([1.0, 2.0, 1.0])
    start = time.perf_counter()
    out = quadratic_form_trend(
        chain, RhoTransform(rho=rho), F010, (0.2, 0.1, 0.05), 1_000_000, RngSpec(seed=500)
    )
    elapsed = time.perf_counter() - start
    return out, elapsed


def test_generator_definition_matches_tilted_kernel_on_random_models(models50):
    # the generator assembled from its action on rho-weighted basis vectors
    # must agree off the diagonal with the directly tilted jump kernel
    start = time.perf_counter()
    worst = 0.0
    for model, rho in models50:
        by_definition = transformed_generator(model, rho)
        by_kernel = (rho[None, :] / rho[:, None]) * model.q
        off = ~np.eye(model.n, dtype=bool)
        resid = np.abs(by_definition[off] - by_kernel[off])
        scale = np.maximum(1.0, np.abs(by_kernel[off]))
        worst = max(worst, float(np.max(resid / scale)))
    elapsed = time.perf_counter() - start
    assert worst <= 1e-12, f"worst off-diagonal mismatch {worst:.3e}"
    assert elapsed < 1.0, f"took {elapsed:.2f}s"


def test_transformed_generator_is_symmetric_and_pairing_gap_vanishes(
    models50, chain3, rho121
):
    start = time.perf_counter()
    worst = 0.0
    for model, rho in models50:
        q_hat = transformed_generator(model, rho)
        mu_hat = rho * rho * model.m
        weighted = mu_hat[:, None] * q_hat
        scale = max(1.0, float(np.max(np.abs(weighted))))
        worst = max(worst, float(np.max(np.abs(weighted - weighted.T))) / scale)
    assert worst <= 1e-12, f"worst weighted-generator asymmetry {worst:.3e}"
    gap = estimate_symmetry_gap(
        chain3,
        RhoTransform(rho=rho121),
        F010,
        np.array([1.0, 0.0, 2.0]),
        0.5,
        100_000,
        RngSpec(seed=601),
    )
    assert gap.covers(0.0), f"pairing gap CI {gap.ci95} misses zero"
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0, f"took {elapsed:.2f}s"


def test_energy_form_equals_generator_pairing_with_exact_witness(
    models50, chain3, rho121
):
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for model, rho in models50:
        q_hat = transformed_generator(model, rho)
        mu_hat = rho * rho * model.m
        for _ in range(200):
            f = rng.standard_normal(model.n)
            energy = transformed_form_rho(model, rho, f).total
            pairing = -float((mu_hat * (q_hat @ f)) @ f)
            worst = max(worst, abs(energy - pairing) / max(1.0, abs(energy)))
    witness = transformed_form_rho(chain3, rho121, F010).total
    elapsed = time.perf_counter() - start
    assert worst <= 1e-12, f"worst duality residual {worst:.3e}"
    assert witness == pytest.approx(6.0, abs=1e-12), f"witness value {witness!r}"
    assert elapsed < 1.0, f"took {elapsed:.2f}s"


def test_state_tilt_absorbs_killing_and_conserves_mass(models50, chain3_killed, rho121):
    start = time.perf_counter()
    killed = sum(1 for model, _ in models50 if np.any(model.k > 0))
    assert killed >= 25, f"only {killed} killed models in the pool"
    worst_row = 0.0
    worst_unit = 0.0
    for model, rho in models50:
        report = conservativeness_check(model, rho)
        worst_row = max(worst_row, report.row_sum_residual)
        worst_unit = max(worst_unit, abs(report.unit_form_value))
    assert worst_row <= 1e-12, f"worst row-sum residual {worst_row:.3e}"
    assert worst_unit <= 1e-12, f"worst unit-energy value {worst_unit:.3e}"
    mass = estimate_mass(
        chain3_killed, RhoTransform(rho=rho121), 0, 1.0, 100_000, RngSpec(seed=602)
    )
    assert mass.covers(1.0), f"weighted mass CI {mass.ci95} misses one"
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0, f"took {elapsed:.2f}s"


def test_jump_tilt_duality_symmetry_split_and_inverse(models50, chain3, phi3):
    start = time.perf_counter()
    rng = np.random.default_rng(11)

    # (a) energy of the jump-tilted process equals its generator pairing
    worst_dual = 0.0
    for model, _ in models50:
        phi = make_symmetric_phi(rng, model.n)
        q_y = pure_jump_generator(model, phi)
        for _ in range(20):
            f = rng.standard_normal(model.n)
            energy = transformed_form_phi(model, phi, f).total
            pairing = -float((model.m * (q_y @ f)) @ f)
            worst_dual = max(worst_dual, abs(energy - pairing) / max(1.0, abs(energy)))
    assert worst_dual <= 1e-12, f"worst duality residual {worst_dual:.3e}"

    # (b) the combined tilt density is symmetric wherever the jump measure
    # charges, whenever the state and jump tilts are mutually consistent
    worst_sym = 0.0
    for model, _ in models50:
        rho, phi = make_consistent_pair(rng, model)
        g = jump_measure_density(model, rho, phi)
        charged = model.q > 0
        resid = np.abs(g - g.T)[charged]
        scale = np.maximum(1.0, np.abs(g[charged]))
        worst_sym = max(worst_sym, float(np.max(resid / scale)))
    assert worst_sym <= 1e-10, f"worst tilt-density asymmetry {worst_sym:.3e}"

    # (c) increasing/decreasing factorisation multiplies back to the weight,
    # path by path
    pool = RngSpec(seed=603)
    worst_split = 0.0
    for i in range(1000):
        path = sample_finite_path(chain3, i % 3, 2.0, pool.stream(i))
        plus, minus = split_mf(path, phi3, chain3, 1.5)
        full = pure_jump_mf(path, phi3, chain3, 1.5)
        resid = abs(plus.end_value * minus.end_value - full.end_value)
        worst_split = max(worst_split, resid / max(1.0, abs(full.end_value)))
    assert worst_split <= 1e-12, f"worst split-product residual {worst_split:.3e}"

    # (d) inverting the tilt twice returns it, and the two tilts cancel
    phi_inv = inverse_transform(phi3)
    assert phi_inv[0, 1] == pytest.approx(-0.5, abs=1e-14)
    assert phi_inv[1, 2] == pytest.approx(1.0, abs=1e-14)
    charged = chain3.q > 0
    cancel = (1.0 + phi3) * (1.0 + phi_inv)
    assert np.max(np.abs(cancel[charged] - 1.0)) <= 1e-14
    roundtrip = inverse_transform(phi_inv)
    assert np.max(np.abs(roundtrip - phi3)) <= 1e-14
    for model, _ in models50[:10]:
        phi = make_symmetric_phi(rng, model.n)
        back = inverse_transform(inverse_transform(phi))
        assert np.max(np.abs(back - phi)) <= 1e-14

    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"took {elapsed:.2f}s"


def test_time_reversal_residuals_vanish_on_chains(chain3, rho121):
    start = time.perf_counter()
    pool = RngSpec(seed=604)
    u = np.array([0.0, 1.0, 0.5])
    worst_reversal = 0.0
    worst_even = 0.0
    worst_martingale = 0.0
    for i in range(1000):
        path = sample_finite_path(chain3, i % 3, 2.0, pool.stream(i))
        worst_reversal = max(
            worst_reversal, reversal_identity_residual(path, rho121, chain3, 2.0)
        )
        worst_even = max(worst_even, evenness_residual(path, F010, 2.0))
        worst_martingale = max(
            worst_martingale, lyons_zheng_residual(path, u, chain3, 2.0)
        )
    assert worst_reversal <= 1e-12, f"worst reversal residual {worst_reversal:.3e}"
    assert worst_even <= 1e-12, f"worst evenness residual {worst_even:.3e}"
    assert worst_martingale <= 1e-12, (
        f"worst forward/backward split residual {worst_martingale:.3e}"
    )
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"took {elapsed:.2f}s"


def test_weighted_semigroup_estimates_cover_matrix_exponential(chain3, rho121, phi3):
    start = time.perf_counter()
    transforms = [
        ("state-tilt", RhoTransform(rho=rho121)),
        ("jump-tilt", PureJumpPhi(phi=phi3)),
    ]
    oracles = {}
    for name, tr in transforms:
        q_tilde = transformed_model(chain3, tr).generator()
        for t in (0.5, 1.0):
            oracles[name, t] = float((expm(t * q_tilde) @ F010)[0])

    # main checks: one hundred thousand paths, both transforms and times
    for name, tr in transforms:
        for t in (0.5, 1.0):
            est = estimate_transformed_semigroup(
                chain3, tr, F010, 0, t, 100_000, RngSpec(seed=605)
            )
            oracle = oracles[name, t]
            assert est.covers(oracle), (
                f"{name} at t={t}: CI {est.ci95} misses oracle {oracle:.6f}"
            )

    # calibration: the interval itself is checked by replication — at least
    # ninety of one hundred independent runs must cover the oracle
    for name, tr in transforms:
        oracle = oracles[name, 0.5]
        hits = sum(
            estimate_transformed_semigroup(
                chain3, tr, F010, 0, 0.5, 10_000, RngSpec(seed=1000 + rep)
            ).covers(oracle)
            for rep in range(100)
        )
        assert hits >= 90, f"{name}: only {hits}/100 intervals covered the oracle"

    elapsed = time.perf_counter() - start
    assert elapsed < 300.0, f"took {elapsed:.2f}s"


def test_energy_statistic_is_monotone_toward_form_value(energy_trend):
    out, elapsed = energy_trend
    target = 6.0
    gaps = [abs(res.mean - target) for _, res in out]
    means = [res.mean for _, res in out]
    assert gaps[0] > gaps[1] > gaps[2], (
        f"estimates {means} do not approach {target} monotonically"
    )
    assert elapsed < 300.0, f"took {elapsed:.2f}s"


def test_energy_statistic_smallest_time_within_ten_percent(energy_trend):
    # the smallest-time interval is required to land within ten percent of
    # the form value; the statistic's finite-time bias is what is on trial
    out, _ = energy_trend
    t, res = out[-1]
    lo, hi = res.ci95
    target = 6.0
    assert 0.9 * target <= lo and hi <= 1.1 * target, (
        f"at t={t} the 95% CI [{lo:.4f}, {hi:.4f}] is not inside "
        f"[{0.9 * target}, {1.1 * target}]; the estimate {res.mean:.4f} "
        f"+/- {res.stderr:.4f} sits {100 * (1 - res.mean / target):.1f}% "
        f"below the form value"
    )


def test_stable_jump_diffusion_intensity_quadrature_and_energy():
    start = time.perf_counter()
    model = JumpDiffusionModel(d=1, alpha=1.0, c=1.0)

    # (a) the truncated sampler's jump count is Poisson at the closed-form
    # tail intensity
    lam = stable_tail_intensity(model, 0.1)
    assert lam == pytest.approx(20.0, rel=1e-12)
    pool = RngSpec(seed=606)
    n_paths = 400
    count = 0
    for i in range(n_paths):
        path = sample_jump_diffusion_path(model, 0.0, 1.0, 0.01, 0.1, pool.stream(i))
        count += len(path.events)
    expected = lam * n_paths
    z = abs(count - expected) / math.sqrt(expected)
    assert z < 4.0, f"jump count {count} vs {expected:.0f} expected (z={z:.2f})"

    # (b) quadrature of the tilted energy is stable under mesh halving
    def f(x):
        return np.exp(-np.asarray(x) ** 2)

    def rho(x):
        return 1.0 + 0.5 * np.exp(-np.asarray(x) ** 2)

    quad = continuum_form_quadrature(rho, f, model, (-8.0, 8.0), 320)
    assert not quad.inconclusive
    total = quad.continuous_part + quad.jump_part
    assert quad.error_estimate <= 0.01 * abs(total), (
        f"mesh-halving change {quad.error_estimate:.3e} exceeds 1% of {total:.6f}"
    )

    # (c) the Monte Carlo energy statistic at small time agrees with the
    # quadrature value; discretisation and truncation make this the loosest
    # check of the suite
    est = estimate_quadratic_form(
        model,
        RhoTransform(rho=rho),
        f,
        0.05,
        20_000,
        RngSpec(seed=607),
        region=(-8.0, 8.0),
        dt=1e-3,
        eps=0.01,
        rho_grad=lambda x: -np.asarray(x) * np.exp(-np.asarray(x) ** 2),
    )
    rel = abs(est.mean - total) / abs(total)
    assert rel <= 0.15, (
        f"statistic {est.mean:.4f} vs quadrature {total:.4f} ({100 * rel:.1f}% off)"
    )

    elapsed = time.perf_counter() - start
    assert elapsed < 600.0, f"took {elapsed:.2f}s"
