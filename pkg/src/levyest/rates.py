"""Implicit bandwidth equations and their root solvers.

Each smoothness scenario pins the theoretically optimal bandwidth h* as the
root of a scheme-dependent equation. All equations are solved by bracketed
bisection on a log scale after a numerical pre-scan that verifies
monotonicity (or locates the monotone branch) on the bracket; every returned
solution carries the residual of its defining equation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import BracketFailure, NoRootInUnitInterval
from .sampling import SamplingScheme


@dataclass(frozen=True)
class BandwidthSolution:
    h_star: float
    residual: float
    equation_id: str
    rate_proxy: float | None = None


# --- smoothness classes ----------------------------------------------------


@dataclass(frozen=True)
class GlobalPol:
    """Polynomial decay of the unit-time characteristic function."""

    beta: float
    c_phi: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")


@dataclass(frozen=True)
class GlobalExp:
    """Exponential decay exp(-c_phi |u|^alpha), alpha in (0, 1/2)."""

    alpha: float
    c_phi: float

    def __post_init__(self):
        if not 0 < self.alpha < 0.5:
            raise ValueError("alpha must lie in (0, 1/2)")
        if not self.c_phi > 0:
            raise ValueError("c_phi must be positive")


@dataclass(frozen=True)
class CompoundPoissonClass:
    """Bounded-below characteristic function with |Fg| <= C_g u^-a exp(-c_g u^rho)."""

    a: float
    rho: float
    c_g: float = 1.0
    c_phi: float = 1.0

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")
        if not 0 < self.c_phi <= 1:
            raise ValueError("c_phi must lie in (0, 1]")
        if self.rho == 0 and not self.a > 0:
            raise ValueError("rho = 0 requires a > 0")
        if self.rho > 0 and not self.c_g > 0:
            raise ValueError("rho > 0 requires c_g > 0")


@dataclass(frozen=True)
class LocalHolder:
    """Local Hoelder smoothness a on a set away from the origin."""

    a: float
    beta: float

    def __post_init__(self):
        if not (self.a > 0 and self.beta > 0):
            raise ValueError("a and beta must be positive")


@dataclass(frozen=True)
class DensityPol:
    """Marginal density with polynomially decaying transform, beta > 1/2."""

    beta: float
    k: int

    def __post_init__(self):
        if not self.beta > 0.5:
            raise ValueError("beta must exceed 1/2")
        if self.k < 1:
            raise ValueError("k must be a positive integer")


@dataclass(frozen=True)
class DensityExp:
    """Marginal density with transform decay exp(-c |u|^alpha), alpha in (0, 2]."""

    alpha: float
    c: float
    k: int

    def __post_init__(self):
        if not 0 < self.alpha <= 2:
            raise ValueError("alpha must lie in (0, 2]")
        if not self.c > 0:
            raise ValueError("c must be positive")
        if self.k < 1:
            raise ValueError("k must be a positive integer")


# --- solver machinery ------------------------------------------------------


def _bisect(fn, lo: float, hi: float, iters: int = 200) -> float:
    """Root of a function with fn(lo) <= 0 <= fn(hi) (or the reverse)."""
    flo = fn(lo)
    fhi = fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise BracketFailure(f"no sign change on [{lo:g}, {hi:g}]")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return 0.5 * (lo + hi)


def _increasing_sum_root(deltas: np.ndarray, exponents: np.ndarray,
                         equation_id: str, rate_power: float | None = None
                         ) -> BandwidthSolution:
    """Solve sum_j delta_j h^{e_j} = 1 for h in (0, 1]; e_j > 0.

    The left side increases from 0 to T on (0, 1], so a root exists exactly
    when the horizon is at least one.
    """
    horizon = float(deltas.sum())
    if horizon < 1.0:
        raise NoRootInUnitInterval(
            f"horizon {horizon:g} < 1 leaves no root in the unit interval"
        )
    uniq, inv, counts = np.unique(exponents, return_inverse=True,
                                  return_counts=True)
    wts = np.bincount(inv, weights=deltas)

    def fn(log_h):
        return float(wts @ np.exp(uniq * log_h)) - 1.0

    log_root = _bisect(fn, -80.0, 0.0)
    h = math.exp(log_root)
    return BandwidthSolution(
        h_star=h, residual=fn(log_root), equation_id=equation_id,
        rate_proxy=None if rate_power is None else h**rate_power,
    )


def solve_h_global_pol(scheme: SamplingScheme, beta: float) -> BandwidthSolution:
    """Root of sum_j delta_j h^{2 delta_j beta + 2} = 1."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    sol = _increasing_sum_root(scheme.deltas, 2.0 * beta * scheme.deltas + 2.0,
                               "global-pol")
    return BandwidthSolution(sol.h_star, sol.residual, sol.equation_id,
                             rate_proxy=sol.h_star)


def solve_h_global_exp(scheme: SamplingScheme, alpha: float,
                       c_phi: float) -> BandwidthSolution:
    """Root of sum_j delta_j exp(-2 delta_j c_phi (1/h)^alpha) h^{2(alpha-1)} = 1.

    The left side rises from 0 to a single peak and falls again; the scan
    locates the peak and the equation is solved on the increasing branch,
    which carries the small-h root the rate statements refer to.
    """
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 1/2)")
    if not c_phi > 0:
        raise ValueError("c_phi must be positive")
    uniq, counts = np.unique(scheme.deltas, return_counts=True)
    wts = uniq * counts

    def lhs(log_h):
        inv_pow = math.exp(-alpha * log_h)
        return float(wts @ np.exp(-2.0 * c_phi * inv_pow * uniq)) * math.exp(
            2.0 * (alpha - 1.0) * log_h
        )

    scan = np.linspace(-60.0, 0.0, 2049)
    vals = np.array([lhs(s) for s in scan])
    peak = int(np.argmax(vals))
    if not np.all(np.diff(vals[: peak + 1]) >= -1e-12 * np.abs(vals[peak])):
        raise BracketFailure("left side is not monotone up to its peak")
    if vals[peak] < 1.0:
        raise BracketFailure(
            f"equation unsolvable: max of left side is {vals[peak]:g} < 1 "
            f"(horizon too short)"
        )
    below = np.flatnonzero(vals[: peak + 1] < 1.0)
    lo = scan[below[-1]] if below.size else -60.0
    log_root = _bisect(lambda s: lhs(s) - 1.0, lo, scan[peak])
    h = math.exp(log_root)
    return BandwidthSolution(h_star=h, residual=lhs(log_root) - 1.0,
                             equation_id="global-exp",
                             rate_proxy=h ** (1.0 - 2.0 * alpha))


def solve_h_cp(scheme: SamplingScheme, a: float, rho: float, c_g: float,
               c_phi: float) -> BandwidthSolution:
    """Root of exp(2 c_g (1/h)^rho) h^{-2a} = sum_j delta_j c_phi^{delta_j}.

    For rho = 0 the exponential factor is a constant absorbed into the class
    bound and the equation reduces to h^{-2a} = RHS with the closed form
    h* = RHS^{-1/(2a)}.
    """
    cls = CompoundPoissonClass(a=a, rho=rho, c_g=c_g, c_phi=c_phi)
    uniq, counts = np.unique(scheme.deltas, return_counts=True)
    rhs = float((uniq * counts) @ np.power(c_phi, uniq))
    if rho == 0.0:
        h = rhs ** (-1.0 / (2.0 * a))
        resid = h ** (-2.0 * a) / rhs - 1.0
        return BandwidthSolution(h_star=h, residual=resid, equation_id="cp",
                                 rate_proxy=h ** (2.0 * a - 1.0))

    log_rhs = math.log(rhs)

    def fn(log_h):
        return 2.0 * c_g * math.exp(-rho * log_h) - 2.0 * a * log_h - log_rhs

    # strictly decreasing in log h; bracket by expanding right end
    lo, hi = -80.0, 80.0
    if fn(lo) < 0.0 or fn(hi) > 0.0:
        raise BracketFailure("compound-Poisson equation has no root in bracket")
    log_root = _bisect(fn, lo, hi)
    h = math.exp(log_root)
    lhs_over_rhs = math.exp(fn(log_root))
    proxy = (math.exp(-2.0 * c_g * h ** (-rho)) if cls.rho > 0
             else h ** (2.0 * a - 1.0))
    return BandwidthSolution(h_star=h, residual=lhs_over_rhs - 1.0,
                             equation_id="cp", rate_proxy=proxy)


def solve_h_local(scheme: SamplingScheme, a: float, beta: float) -> BandwidthSolution:
    """Root of sum_j delta_j h^{2 beta delta_j + 2a + 1} = 1."""
    LocalHolder(a=a, beta=beta)
    sol = _increasing_sum_root(
        scheme.deltas, 2.0 * beta * scheme.deltas + 2.0 * a + 1.0, "local-pol"
    )
    return BandwidthSolution(sol.h_star, sol.residual, sol.equation_id,
                             rate_proxy=sol.h_star ** (2.0 * a))


class _RunningIntegral:
    """Cumulative adaptive quadrature from 0, reusing previously covered range.

    Evaluation points arrive in converging bisection order, so caching the
    sorted anchors keeps the total quadrature work proportional to the final
    resolution instead of quadratic in the number of calls.
    """

    def __init__(self, integrand):
        self.integrand = integrand
        self.anchors = [0.0]
        self.cumulative = [0.0]

    def __call__(self, r: float) -> float:
        import bisect as _b

        i = _b.bisect_right(self.anchors, r) - 1
        base_r, base_v = self.anchors[i], self.cumulative[i]
        if r == base_r:
            return base_v
        seg, _ = integrate.quad(self.integrand, base_r, r, epsabs=1e-13,
                                epsrel=1e-9, limit=400)
        val = base_v + seg
        if r > self.anchors[-1]:
            self.anchors.append(r)
            self.cumulative.append(val)
        return val


def _density_lhs_rhs(scheme: SamplingScheme, cls) -> tuple:
    """log |phi_reg(r)|^2 and log of the bracketed right side, as callables of r."""
    # collapse repeated gap values; q_reg only sees the gap multiset
    uniq, counts = np.unique(scheme.deltas, return_counts=True)
    wts = uniq * counts

    if isinstance(cls, DensityPol):
        def log_phi_reg(u):
            return -cls.beta * np.log1p(u)

        variant = "plain"
    else:
        def log_phi_reg(u):
            return -cls.c * np.power(u, cls.alpha)

        if cls.alpha < 0.5:
            variant = "plain"
        elif cls.alpha == 0.5:
            variant = "log"
        else:
            variant = "power"

    def inv_q_reg(u):
        # q_reg(u) = sum_j delta_j |phi_reg(u)|^{delta_j}
        return 1.0 / float(wts @ np.exp(uniq * log_phi_reg(u)))

    running = _RunningIntegral(inv_q_reg)

    def log_lhs(r):
        return 2.0 * float(log_phi_reg(r))

    def log_rhs(r):
        inner = running(r)
        if variant == "log":
            inner *= math.log(r)
        elif variant == "power":
            inner *= r ** (2.0 * cls.alpha - 1.0)
        if inner <= 0.0:
            return -math.inf
        return cls.k * math.log(inner)

    return log_lhs, log_rhs, variant


def solve_h_density(scheme: SamplingScheme, cls) -> BandwidthSolution:
    """Root of |phi_reg(1/h)|^2 = (factor(1/h) * int_0^{1/h} du/q_reg(u))^k.

    ``cls`` is a :class:`DensityPol` or :class:`DensityExp`. The factor is 1,
    ln(1/h) or (1/h)^{2 alpha - 1} according to the decay regime. Solved on
    the cutoff scale r = 1/h; the left side falls and the right side rises,
    and the pre-scan confirms a unique, monotone crossing on the bracket.
    """
    if not isinstance(cls, (DensityPol, DensityExp)):
        raise TypeError("cls must be DensityPol or DensityExp")
    log_lhs, log_rhs, variant = _density_lhs_rhs(scheme, cls)

    def fn(log_r):
        r = math.exp(log_r)
        return log_lhs(r) - log_rhs(r)

    lo = math.log(1.0 + 1e-9) if variant == "log" else math.log(1e-3)
    hi_cap = math.log(1e9)
    # scan outward in ascending order so the running integral never backtracks;
    # once the difference has fallen below the crossing there is no need to
    # chase it further down
    scan_pts = [lo]
    while scan_pts[-1] < hi_cap:
        scan_pts.append(min(scan_pts[-1] + math.log(2.0) / 4.0, hi_cap))
    vals = []
    for s in scan_pts:
        vals.append(fn(s))
        if vals[-1] < -20.0:
            break
    scan = np.array(scan_pts[:len(vals)])
    vals = np.array(vals)
    finite = np.isfinite(vals)
    signs = np.sign(vals[finite])
    crossings = int(np.sum(np.abs(np.diff(signs)) > 0))
    if crossings != 1:
        raise BracketFailure(
            f"expected one crossing on the scan, found {crossings}"
        )
    drop = np.diff(vals[finite])
    if not np.all(drop <= 1e-9 * np.maximum(1.0, np.abs(vals[finite][:-1]))):
        raise BracketFailure("left/right difference is not decreasing on the bracket")
    pos = np.flatnonzero(finite)[np.flatnonzero(signs > 0)]
    lo = scan[pos[-1]] if pos.size else lo
    neg = np.flatnonzero(finite)[np.flatnonzero(signs < 0)]
    hi = scan[neg[0]] if neg.size else hi_cap
    log_root = _bisect(fn, lo, hi)
    r = math.exp(log_root)
    h = 1.0 / r
    resid = math.expm1(fn(log_root))
    if isinstance(cls, DensityPol):
        proxy = h ** (2.0 * cls.beta - 1.0)
    else:
        base = h ** (cls.alpha - 1.0) if cls.alpha < 1.0 else max(h ** (cls.alpha - 1.0), 1.0)
        proxy = base * math.exp(-2.0 * cls.c * r**cls.alpha)
    return BandwidthSolution(h_star=h, residual=resid,
                             equation_id=f"density-{variant}", rate_proxy=proxy)


def solve_bandwidth(scheme: SamplingScheme, cls) -> BandwidthSolution:
    """Dispatch a smoothness class to its solver."""
    if isinstance(cls, GlobalPol):
        return solve_h_global_pol(scheme, cls.beta)
    if isinstance(cls, GlobalExp):
        return solve_h_global_exp(scheme, cls.alpha, cls.c_phi)
    if isinstance(cls, CompoundPoissonClass):
        return solve_h_cp(scheme, cls.a, cls.rho, cls.c_g, cls.c_phi)
    if isinstance(cls, LocalHolder):
        return solve_h_local(scheme, cls.a, cls.beta)
    if isinstance(cls, (DensityPol, DensityExp)):
        return solve_h_density(scheme, cls)
    raise TypeError(f"unknown smoothness class {type(cls).__name__}")


def rate_table(cls, schemes) -> list[dict]:
    """Solve the class equation over several schemes; one row per scheme."""
    rows = []
    for scheme in schemes:
        sol = solve_bandwidth(scheme, cls)
        rows.append({
            "T": scheme.horizon,
            "delta_max": scheme.delta_max,
            "h_star": sol.h_star,
            "rate_proxy": sol.rate_proxy,
        })
    return rows


def write_rate_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["T", "delta_max", "h_star", "rate_proxy"])
        for row in rows:
            w.writerow([repr(float(row["T"])), repr(float(row["delta_max"])),
                        repr(float(row["h_star"])), repr(float(row["rate_proxy"]))])
