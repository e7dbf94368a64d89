"""Weighted empirical spectral statistics on a shared frequency grid.

This module computes the building blocks of the estimators: the weighted
sums p-hat and q-hat, the noise level sigma, the thresholded inverse of
q-hat, the exponent-derivative estimate, its antiderivative anchored at
zero, and the clamped characteristic-function estimate.

All statistics are computed on the nonnegative half of the grid and mirrored
to negative frequencies through the exact Hermitian rules

    q(-u) = conj(q(u)),   p(-u) = -conj(p(u)),   sigma(-u) = sigma(u),

which both halves the work and makes every spatial inversion real by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _engine
from .errors import LengthMismatch
from .sampling import ObservationSet, SamplingScheme
from .weights import WeightScheme


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform symmetric frequency grid with a node exactly at zero.

    ``n_points`` must be odd. Nodes are k * du for k = -M..M, so the center
    node is exactly 0.0 and the grid is bitwise symmetric.
    """

    u_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise ValueError("n_points must be odd and at least 3")
        if not self.u_max > 0:
            raise ValueError("u_max must be positive")
        # canonicalize so that u_max == half_count * du exactly
        m = (self.n_points - 1) // 2
        du = self.u_max / m
        object.__setattr__(self, "u_max", m * du)

    @classmethod
    def from_spacing(cls, u_max: float, du: float) -> "SpectralGrid":
        """Grid with spacing du whose range covers [-u_max, u_max]."""
        m = max(int(np.ceil(u_max / du - 1e-9)), 1)
        return cls(m * du, 2 * m + 1)

    @property
    def half_count(self) -> int:
        return (self.n_points - 1) // 2

    @property
    def du(self) -> float:
        return self.u_max / self.half_count

    @property
    def nodes(self) -> np.ndarray:
        m = self.half_count
        return np.arange(-m, m + 1) * self.du

    @property
    def half_nodes(self) -> np.ndarray:
        return np.arange(self.half_count + 1) * self.du

    def index_of(self, u: float) -> int:
        """Full-grid index of the node closest to u."""
        return self.half_count + self.half_index(u)

    def half_index(self, u: float) -> int:
        k = int(np.rint(abs(u) / self.du))
        if k > self.half_count:
            raise ValueError(f"|u|={abs(u):g} outside grid (u_max={self.u_max:g})")
        return k


def mirror(half: np.ndarray, parity: int) -> np.ndarray:
    """Extend a half-grid array to the full grid by Hermitian symmetry.

    parity +1: f(-u) = conj(f(u));  parity -1: f(-u) = -conj(f(u)).
    For real input the conjugation is a no-op and the result stays real.
    """
    m = half.shape[-1] - 1
    full = np.empty(half.shape[:-1] + (2 * m + 1,), dtype=half.dtype)
    full[..., m:] = half
    tail = np.conj(half[..., 1:]) if np.iscomplexobj(half) else half[..., 1:]
    full[..., :m] = (parity * tail)[..., ::-1]
    return full


@dataclass(frozen=True)
class SpectralStatistics:
    """p-hat, q-hat, sigma, the thresholded inverse and the ratio estimate."""

    grid: SpectralGrid
    p_hat: np.ndarray
    q_hat: np.ndarray
    sigma: np.ndarray
    q_tilde_inv: np.ndarray
    psi_prime_hat: np.ndarray
    kappa: float


@dataclass(frozen=True)
class CharFnEstimate:
    """Integrated exponent estimate and the clamped characteristic function."""

    grid: SpectralGrid
    psi_hat: np.ndarray
    phi_check: np.ndarray
    phi_hat: np.ndarray


def _check_weights(obs_or_scheme, weights: WeightScheme):
    n = obs_or_scheme.n
    if weights.n != n:
        raise LengthMismatch(f"{weights.n} weight rows for {n} observations")


def _half_raw(obs: ObservationSet, weights: WeightScheme, grid: SpectralGrid,
              bounds=None):
    """(q, p, sigma^2) on the half grid, optionally split into index blocks."""
    _check_weights(obs, weights)
    return _engine.stats_half(
        obs.increments, obs.scheme.deltas, grid.half_nodes,
        psi_half=weights.psi_half, table_half=weights.table_half,
        row_of=weights.row_of, bounds=bounds,
    )


def compute_p_hat(obs: ObservationSet, weights: WeightScheme,
                  grid: SpectralGrid) -> np.ndarray:
    """p-hat(u) = sum_j w_j(u) * i Z_j * exp(i u Z_j) on the full grid."""
    _, p, _ = _half_raw(obs, weights, grid)
    return mirror(p, -1)


def compute_q_hat(obs: ObservationSet, weights: WeightScheme,
                  grid: SpectralGrid) -> np.ndarray:
    """q-hat(u) = sum_j delta_j w_j(u) exp(i u Z_j) on the full grid."""
    q, _, _ = _half_raw(obs, weights, grid)
    return mirror(q, +1)


def compute_sigma(scheme: SamplingScheme, weights: WeightScheme,
                  grid: SpectralGrid) -> np.ndarray:
    """sigma(u) = sqrt(sum_j delta_j^2 |w_j(u)|^2); independent of the data."""
    _check_weights(scheme, weights)
    s2 = _engine.sigma2_half(scheme.deltas, grid.half_nodes,
                             psi_half=weights.psi_half,
                             table_half=weights.table_half,
                             row_of=weights.row_of)
    return mirror(np.sqrt(s2), +1)


def regularize_inverse(q_hat: np.ndarray, sigma: np.ndarray,
                       kappa: float) -> np.ndarray:
    """1/q-tilde: the inverse of q-hat, zeroed where |q-hat| < max(sigma, kappa)."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    keep = np.abs(q_hat) >= np.maximum(sigma, kappa)
    out = np.zeros_like(np.asarray(q_hat, dtype=complex))
    out[keep] = 1.0 / q_hat[keep]
    return out


def psi_prime_hat(p_hat: np.ndarray, q_tilde_inv: np.ndarray) -> np.ndarray:
    """Ratio estimate of the exponent derivative; zero on thresholded nodes."""
    return p_hat * q_tilde_inv


def compute_statistics(obs: ObservationSet, weights: WeightScheme,
                       grid: SpectralGrid, kappa: float = 1.0) -> SpectralStatistics:
    """One-pass construction of all spectral statistics on the full grid."""
    q_h, p_h, s2_h = _half_raw(obs, weights, grid)
    q = mirror(q_h, +1)
    p = mirror(p_h, -1)
    sigma = mirror(np.sqrt(s2_h), +1)
    q_inv = regularize_inverse(q, sigma, kappa)
    return SpectralStatistics(grid=grid, p_hat=p, q_hat=q, sigma=sigma,
                              q_tilde_inv=q_inv,
                              psi_prime_hat=psi_prime_hat(p, q_inv),
                              kappa=float(kappa))


def _cumtrapz_from_zero(half_values: np.ndarray, du: float) -> np.ndarray:
    """Trapezoid antiderivative on the half grid, exactly zero at u = 0."""
    out = np.empty_like(np.asarray(half_values))
    out[..., 0] = 0.0
    np.cumsum(0.5 * du * (half_values[..., 1:] + half_values[..., :-1]),
              axis=-1, out=out[..., 1:])
    return out


def integrate_psi(psi_prime: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """Antiderivative of the exponent-derivative estimate, anchored at 0.

    Cumulative trapezoid outward from the center node in both directions;
    interior nodes thresholded to zero simply stop the accumulation there.
    """
    if psi_prime.shape[-1] != grid.n_points:
        raise ValueError("array does not match the grid")
    m = grid.half_count
    right = _cumtrapz_from_zero(psi_prime[..., m:], grid.du)
    # psi(-u) = -int_0^u psi'(-t) dt
    left = -_cumtrapz_from_zero(psi_prime[..., m::-1], grid.du)
    out = np.empty_like(np.asarray(psi_prime, dtype=complex))
    out[..., m:] = right
    out[..., :m] = left[..., :0:-1]
    return out


def clamp_phi_values(psi_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(phi_check, phi_hat) = (exp(psi_hat), exp(psi_hat)/max(1, |exp(psi_hat)|)).

    The clamped value is computed as exp(min(Re, 0) + i Im), which is the
    same number but immune to overflow when Re(psi_hat) is wildly positive.
    """
    psi_hat = np.asarray(psi_hat, dtype=complex)
    with np.errstate(over="ignore"):
        phi_check = np.exp(psi_hat)
    phi_hat = np.exp(np.minimum(psi_hat.real, 0.0) + 1j * psi_hat.imag)
    return phi_check, phi_hat


def clamp_phi(psi_hat: np.ndarray, grid: SpectralGrid) -> CharFnEstimate:
    """Exponentiate the integrated estimate and clamp its modulus at one."""
    phi_check, phi_hat = clamp_phi_values(psi_hat)
    return CharFnEstimate(grid=grid, psi_hat=np.asarray(psi_hat, dtype=complex),
                          phi_check=phi_check, phi_hat=phi_hat)


def write_spectral_csv(grid: SpectralGrid, values: np.ndarray, path) -> None:
    """Dump a full-grid complex array as ``u,re,im`` rows."""
    import csv

    vals = np.asarray(values, dtype=complex)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "re", "im"])
        for u, v in zip(grid.nodes, vals):
            w.writerow([repr(float(u)), repr(float(v.real)), repr(float(v.imag))])
