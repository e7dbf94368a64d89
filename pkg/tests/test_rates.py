import numpy as np
import pytest
from scipy.special import lambertw

from levyest import (BracketFailure, CompoundPoissonClass, DensityExp,
                     DensityPol, GlobalExp, GlobalPol, LocalHolder,
                     NoRootInUnitInterval, draw_uniform_gaps,
                     scheme_from_gaps, solve_bandwidth, solve_h_cp,
                     solve_h_density, solve_h_global_exp, solve_h_global_pol,
                     solve_h_local)
from conftest import homogeneous_scheme


# --- global polynomial -------------------------------------------------------

def test_global_pol_homogeneous_closed_form():
    sol = solve_h_global_pol(homogeneous_scheme(100, 1.0), beta=1.0)
    assert sol.h_star == pytest.approx(100 ** -0.25, rel=1e-10)
    assert abs(sol.residual) < 1e-10


@pytest.mark.parametrize("delta,beta,n", [(0.5, 1.0, 400), (2.0, 0.7, 300),
                                          (1.0, 2.5, 1000)])
def test_global_pol_homogeneous_general(delta, beta, n):
    scheme = homogeneous_scheme(n, delta)
    sol = solve_h_global_pol(scheme, beta)
    want = scheme.horizon ** (-1.0 / (2 * delta * beta + 2))
    assert sol.h_star == pytest.approx(want, rel=1e-10)


def test_global_pol_mixed_gaps_residual():
    gaps = np.concatenate([np.full(500, 0.5), np.full(500, 2.0)])
    sol = solve_h_global_pol(scheme_from_gaps(gaps, 6.0), beta=1.0)
    assert abs(sol.residual) < 1e-10
    assert 0 < sol.h_star < 1


def test_global_pol_needs_unit_horizon():
    with pytest.raises(NoRootInUnitInterval):
        solve_h_global_pol(homogeneous_scheme(3, 0.1), beta=1.0)


# --- global exponential ------------------------------------------------------

def test_global_exp_homogeneous_lambert_closed_form():
    alpha, c_phi, delta = 0.4, 1.0, 1.0
    scheme = homogeneous_scheme(10000, delta)
    horizon = scheme.horizon
    a_coef = 2 * delta * c_phi
    b_coef = 2 * (1 - alpha) / alpha
    d_coef = np.log(horizon) / b_coef + np.log(b_coef / a_coef)
    t = -lambertw(-np.exp(-d_coef), k=-1).real
    h_closed = (b_coef / a_coef * t) ** (-1 / alpha)
    sol = solve_h_global_exp(scheme, alpha, c_phi)
    assert sol.h_star == pytest.approx(h_closed, rel=1e-10)
    assert abs(sol.residual) < 1e-10


def test_global_exp_tracks_log_asymptote():
    # h* ~ (log T / (2 c_phi delta))^{-1/alpha} up to a slowly varying
    # factor below one; the factor rises toward one as T grows
    alpha, c_phi = 0.4, 1.0
    ratios = []
    for n in (10**4, 10**5, 10**6):
        scheme = homogeneous_scheme(n, 1.0)
        sol = solve_h_global_exp(scheme, alpha, c_phi)
        proxy = (np.log(scheme.horizon) / (2 * c_phi)) ** (-1 / alpha)
        ratios.append(sol.h_star / proxy)
    assert all(0.2 < r <= 1.0 for r in ratios)
    assert ratios == sorted(ratios)


def test_global_exp_decreasing_in_horizon():
    h = [solve_h_global_exp(homogeneous_scheme(n, 1.0), 0.4, 1.0).h_star
         for n in (100, 1000, 10000)]
    assert h[0] > h[1] > h[2]


def test_global_exp_rejects_tiny_horizon():
    with pytest.raises(BracketFailure):
        solve_h_global_exp(homogeneous_scheme(2, 0.25), 0.4, 5.0)


# --- compound Poisson --------------------------------------------------------

def test_cp_rho_zero_closed_form():
    scheme = homogeneous_scheme(10**4, 1.0)  # RHS = 10^4 with c_phi = 1
    sol = solve_h_cp(scheme, a=1.0, rho=0.0, c_g=1.0, c_phi=1.0)
    assert sol.h_star == pytest.approx(0.01, rel=1e-12)


def test_cp_rho_one_log_closed_form():
    scheme = homogeneous_scheme(5000, 1.0)
    c_g = 0.8
    sol = solve_h_cp(scheme, a=0.0, rho=1.0, c_g=c_g, c_phi=1.0)
    assert sol.h_star == pytest.approx(2 * c_g / np.log(scheme.horizon),
                                       rel=1e-10)
    assert abs(sol.residual) < 1e-10


def test_cp_mixed_residual():
    scheme = draw_uniform_gaps(800, 6.0, rng_seed=4)
    sol = solve_h_cp(scheme, a=0.5, rho=1.0, c_g=1.0, c_phi=0.9)
    assert abs(sol.residual) < 1e-10


def test_cp_validates_parameters():
    scheme = homogeneous_scheme(100, 1.0)
    with pytest.raises(ValueError):
        solve_h_cp(scheme, a=0.0, rho=0.0, c_g=1.0, c_phi=1.0)
    with pytest.raises(ValueError):
        solve_h_cp(scheme, a=1.0, rho=0.0, c_g=1.0, c_phi=1.5)


# --- local Hoelder -----------------------------------------------------------

def test_local_homogeneous_closed_form():
    a, beta, delta = 1.5, 1.0, 2.0
    scheme = homogeneous_scheme(400, delta)
    sol = solve_h_local(scheme, a, beta)
    want = scheme.horizon ** (-1.0 / (2 * beta * delta + 2 * a + 1))
    assert sol.h_star == pytest.approx(want, rel=1e-10)
    assert sol.rate_proxy == pytest.approx(sol.h_star ** (2 * a), rel=1e-12)


def test_local_bounded_by_worst_gap_rate():
    # the solution is never larger than the all-gaps-at-delta-max bandwidth
    a, beta = 1.0, 1.0
    for seed in range(10):
        scheme = draw_uniform_gaps(500, 6.0, rng_seed=seed)
        sol = solve_h_local(scheme, a, beta)
        h_prime = scheme.horizon ** (-1.0 / (2 * a + 2 * beta * scheme.delta_max + 1))
        assert sol.h_star <= h_prime
        assert abs(sol.residual) < 1e-10


# --- density -----------------------------------------------------------------

def test_density_pol_residual_and_uniqueness():
    scheme = homogeneous_scheme(10**4, 1.0)
    sol = solve_h_density(scheme, DensityPol(beta=1.0, k=1))
    assert abs(sol.residual) < 1e-8
    assert 0 < sol.h_star < 1


def test_density_pol_bounded_by_worst_gap_rate():
    cls = DensityPol(beta=1.0, k=1)
    for seed in range(6):
        scheme = draw_uniform_gaps(1500, 6.0, rng_seed=20 + seed)
        sol = solve_h_density(scheme, cls)
        h_prime = scheme.horizon ** (
            -1.0 / (2 * scheme.delta_max * cls.beta + 1 + 2 * cls.beta / cls.k))
        assert sol.h_star <= h_prime
        assert abs(sol.residual) < 1e-8


@pytest.mark.parametrize("cls", [
    DensityExp(alpha=0.3, c=1.0, k=2),
    DensityExp(alpha=0.5, c=0.5, k=1),
    DensityExp(alpha=1.5, c=0.2, k=1),
])
def test_density_exp_regimes(cls):
    scheme = homogeneous_scheme(2000, 1.0)
    sol = solve_h_density(scheme, cls)
    assert abs(sol.residual) < 1e-8
    assert sol.equation_id.startswith("density-")


def test_density_class_validation():
    with pytest.raises(ValueError):
        DensityPol(beta=0.4, k=1)
    with pytest.raises(ValueError):
        DensityExp(alpha=2.5, c=1.0, k=1)
    with pytest.raises(ValueError):
        GlobalExp(alpha=0.6, c_phi=1.0)
    with pytest.raises(ValueError):
        LocalHolder(a=-1.0, beta=1.0)
    with pytest.raises(ValueError):
        GlobalPol(beta=0.0)


# --- cross-family invariants ---------------------------------------------------

def test_h_star_nonincreasing_in_horizon():
    classes = [GlobalPol(beta=1.0), GlobalExp(alpha=0.4, c_phi=1.0),
               CompoundPoissonClass(a=0.5, rho=1.0),
               LocalHolder(a=1.0, beta=1.0), DensityPol(beta=1.0, k=1)]
    for cls in classes:
        last = np.inf
        for n in (500, 5000, 50000):
            scheme = homogeneous_scheme(n, 1.0)
            h = solve_bandwidth(scheme, cls).h_star
            assert h <= last + 1e-15, type(cls).__name__
            last = h


def test_dispatch_rejects_unknown():
    with pytest.raises(TypeError):
        solve_bandwidth(homogeneous_scheme(10, 1.0), object())
