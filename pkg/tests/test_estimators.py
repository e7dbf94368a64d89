import numpy as np
import pytest
from scipy import integrate

from levyest import (QUARTIC, SINC, BilateralGammaProcess, BrownianDrift,
                     CompoundPoissonNormal, GammaProcess, GridTooNarrow,
                     NoDensity, SpectralGrid, clamp_phi, estimate_f,
                     estimate_g, l2_risk_density, l2_risk_spectral)
from levyest.spectral import SpectralStatistics
from levyest.estimators import DensityEstimate, JumpEstimate


def stats_with_psi_prime(grid, values, kappa=1.0):
    """Wrap an exact spectral array as statistics for plug-in tests."""
    dummy = np.zeros(grid.n_points, dtype=complex)
    return SpectralStatistics(grid=grid, p_hat=dummy, q_hat=dummy,
                              sigma=np.zeros(grid.n_points),
                              q_tilde_inv=dummy, psi_prime_hat=values,
                              kappa=kappa)


# --- kernels -------------------------------------------------------------------

def test_kernel_transforms_normalized_even():
    u = np.linspace(-30, 30, 1001)
    for kern in (SINC, QUARTIC):
        ft = kern.fourier_transform(u)
        assert kern.fourier_transform(0.0) == pytest.approx(1.0)
        assert np.allclose(ft, ft[::-1])
        assert np.all(np.abs(ft.imag) == 0 if np.iscomplexobj(ft) else True)


def test_quartic_moments():
    xs = np.linspace(-1, 1, 20001)
    k = QUARTIC.spatial(xs)
    assert integrate.simpson(k, x=xs) == pytest.approx(1.0, abs=1e-10)
    assert integrate.simpson(xs * k, x=xs) == pytest.approx(0.0, abs=1e-12)


def test_quartic_transform_matches_quadrature():
    xs = np.linspace(-1, 1, 40001)
    k = QUARTIC.spatial(xs)
    for u in (0.0, 0.03, 0.5, 2.0, 11.7):
        num = integrate.simpson(np.cos(u * xs) * k, x=xs)
        assert QUARTIC.fourier_transform(u) == pytest.approx(num, abs=1e-10)


def test_quartic_transform_accurate_across_branch_switch():
    import mpmath

    mpmath.mp.dps = 40

    def exact(u):
        u = mpmath.mpf(u)
        return float(15 * (3 * mpmath.sin(u) - 3 * u * mpmath.cos(u)
                           - u * u * mpmath.sin(u)) / u**5)

    for u in np.concatenate([np.linspace(1e-3, 0.8, 41), [0.4999999, 0.5000001]]):
        assert QUARTIC.fourier_transform(u) == pytest.approx(exact(u),
                                                             abs=5e-13)


def test_sinc_spatial_is_inverse_transform():
    xs = np.array([0.0, 0.5, 2.0])
    want = np.array([integrate.quad(lambda u: np.cos(u * x), 0, 1)[0] / np.pi
                     for x in xs])
    assert np.allclose(SINC.spatial(xs), want, atol=1e-12)


# --- jump estimator --------------------------------------------------------------

def test_estimate_g_zero_spectrum(small_grid):
    st = stats_with_psi_prime(small_grid,
                              np.zeros(small_grid.n_points, dtype=complex))
    est = estimate_g(st, SINC, 0.5)
    assert np.all(est.evaluate([0.0, 1.0, -2.5]) == 0)


def test_estimate_g_matches_independent_quadrature(gamma32):
    # plug in the exact exponent derivative; compare the grid inversion with
    # adaptive quadrature of the same truncated integral
    grid = SpectralGrid.from_spacing(5.0, 0.002)
    truth = gamma32.char_exponent_derivative(grid.nodes)
    est = estimate_g(stats_with_psi_prime(grid, truth), SINC, 0.2)

    def oracle(x):
        re = integrate.quad(
            lambda u: (np.exp(-1j * u * x) * 3 / (2 - 1j * u)).real,
            -5, 5, epsabs=1e-12, epsrel=1e-12, limit=400)[0]
        return re / (2 * np.pi)

    for x in (0.5, 1.0, 2.0):
        assert est.evaluate(x)[0] == pytest.approx(oracle(x), abs=1e-6)


def test_estimate_g_odd_for_symmetric_model():
    model = BilateralGammaProcess(2.0, 4.0)
    grid = SpectralGrid.from_spacing(8.0, 0.01)
    truth = model.char_exponent_derivative(grid.nodes)
    est = estimate_g(stats_with_psi_prime(grid, truth), SINC, 0.25)
    xs = np.linspace(0.1, 3.0, 7)
    assert np.allclose(est.evaluate(-xs), -est.evaluate(xs), atol=1e-9)


def test_estimate_g_grid_too_narrow(small_grid):
    st = stats_with_psi_prime(small_grid,
                              np.zeros(small_grid.n_points, dtype=complex))
    with pytest.raises(GridTooNarrow):
        estimate_g(st, SINC, 1.0 / (small_grid.u_max + 1.0))


def test_sinc_truncation_is_exact(gamma32):
    # nodes beyond the cutoff do not influence the estimate
    grid = SpectralGrid.from_spacing(10.0, 0.01)
    truth = gamma32.char_exponent_derivative(grid.nodes)
    noisy = truth.copy()
    m = grid.index_of(5.0)
    outside = np.abs(grid.nodes) > 5.0
    noisy[outside] += 37.0
    a = estimate_g(stats_with_psi_prime(grid, truth), SINC, 0.2)
    b = estimate_g(stats_with_psi_prime(grid, noisy), SINC, 0.2)
    xs = np.linspace(-2, 2, 9)
    assert np.array_equal(a.evaluate(xs), b.evaluate(xs))


# --- density estimator ------------------------------------------------------------

def test_estimate_f_normal_plugin():
    model = BrownianDrift(2.0, 1.0)
    grid = SpectralGrid.from_spacing(50.0, 0.01)
    phi = model.char_function(1.0, grid.nodes)
    with np.errstate(divide="ignore"):
        charfn = clamp_phi(np.log(phi), grid)
    est = estimate_f(charfn, SINC, 0.02)
    assert est.evaluate(2.0)[0] == pytest.approx(1 / np.sqrt(2 * np.pi),
                                                 abs=1e-3)


def test_estimate_f_indicator_value():
    grid = SpectralGrid(1.0, 201)
    charfn = clamp_phi(np.zeros(grid.n_points, dtype=complex), grid)
    est = estimate_f(charfn, SINC, 1.0)
    assert est.evaluate(0.0)[0] == pytest.approx(1 / np.pi, rel=1e-12)


def test_estimate_f_mass_close_to_one():
    model = BrownianDrift(2.0, 1.0)
    grid = SpectralGrid.from_spacing(50.0, 0.01)
    with np.errstate(divide="ignore"):
        charfn = clamp_phi(np.log(model.char_function(1.0, grid.nodes)), grid)
    est = estimate_f(charfn, SINC, 0.02)
    xs = np.arange(-30.0, 30.0, 0.01)
    mass = integrate.trapezoid(est.evaluate(xs), dx=0.01)
    assert mass == pytest.approx(1.0, abs=1e-3)


# --- risks -------------------------------------------------------------------------

def test_zero_estimate_risk_gamma(gamma32):
    grid = SpectralGrid.from_spacing(400.0, 0.05)
    est = JumpEstimate(grid=grid, values=np.zeros(grid.n_points, complex),
                       bandwidth=1.0)
    risk = l2_risk_spectral(est, gamma32.fourier_g,
                            gamma32.fourier_g_sq_tail(grid.u_max))
    assert risk == pytest.approx(2.25, rel=1e-3)
    # quadrature fallback for the tail agrees
    risk2 = l2_risk_spectral(est, gamma32.fourier_g)
    assert risk2 == pytest.approx(risk, rel=1e-9)


def test_zero_estimate_density_risk_normal():
    model = BrownianDrift(2.0, 1.0)
    grid = SpectralGrid.from_spacing(30.0, 0.01)
    est = DensityEstimate(grid=grid, values=np.zeros(grid.n_points, complex),
                          bandwidth=1.0)
    assert l2_risk_density(est, model) == pytest.approx(1 / (2 * np.sqrt(np.pi)),
                                                        rel=1e-6)


def test_density_risk_refuses_compound_poisson():
    model = CompoundPoissonNormal(3.0)
    grid = SpectralGrid.from_spacing(10.0, 0.1)
    est = DensityEstimate(grid=grid, values=np.zeros(grid.n_points, complex),
                          bandwidth=1.0)
    with pytest.raises(NoDensity):
        l2_risk_density(est, model)


def test_perfect_plugin_risk_is_tail_only(gamma32):
    grid = SpectralGrid.from_spacing(60.0, 0.01)
    truth = gamma32.char_exponent_derivative(grid.nodes)
    last = np.inf
    for m in (1.0, 2.0, 5.0, 12.0):
        est = estimate_g(stats_with_psi_prime(grid, truth), SINC, 1.0 / m)
        risk = l2_risk_spectral(est, gamma32.fourier_g,
                                gamma32.fourier_g_sq_tail(grid.u_max))
        want = gamma32.fourier_g_sq_tail(m) / (2 * np.pi)
        assert risk == pytest.approx(want, rel=2e-3)
        assert risk < last
        last = risk


def test_plugin_density_risk_monotone_bias():
    model = BrownianDrift(0.0, 1.0)
    grid = SpectralGrid.from_spacing(20.0, 0.01)
    with np.errstate(divide="ignore"):
        charfn = clamp_phi(np.log(model.char_function(1.0, grid.nodes)), grid)
    risks = [l2_risk_density(estimate_f(charfn, SINC, h), model)
             for h in (1.0, 0.5, 0.2, 0.1)]
    assert all(a >= b - 1e-15 for a, b in zip(risks, risks[1:]))


def test_density_risk_drift_invariant():
    grid = SpectralGrid.from_spacing(25.0, 0.01)
    for mu in (0.0, 2.0):
        model = BrownianDrift(mu, 1.0)
        with np.errstate(divide="ignore"):
            charfn = clamp_phi(np.log(model.char_function(1.0, grid.nodes)),
                               grid)
        est = estimate_f(charfn, SINC, 0.25)
        risk = l2_risk_density(est, model)
        if mu == 0.0:
            base = risk
    assert risk == pytest.approx(base, rel=1e-9)


def test_spatial_evaluations_real(gamma32):
    grid = SpectralGrid.from_spacing(10.0, 0.02)
    scheme_nodes = gamma32.char_exponent_derivative(grid.nodes)
    est = estimate_g(stats_with_psi_prime(grid, scheme_nodes), SINC, 0.2)
    vals = est.evaluate(np.linspace(-5, 5, 101))
    assert vals.dtype == np.float64
