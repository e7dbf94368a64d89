"""Data-driven cutoff selection by leave-p-out cross-validation.

The data are split into 100 disjoint blocks of consecutive observations
(any remainder folds into the last block); the held-out subsets are the 91
windows of ten consecutive blocks, so each subset holds a nominal tenth of
the sample. For every subset P the exponent-derivative estimate is built
once from P alone and once from its complement; the empirical loss averages
their spectral cross products over the windows in place of an average over
all subsets of that size.

The complement estimate carries the full threshold regularization
(noise level and the constant floor kappa). The subset estimate is
thresholded by its own noise level only: the constant floor is calibrated
to full-sample magnitudes and would blind a tenth-size subset, while a
completely unregularized subset ratio is ruinous, because at frequencies
where the signal is gone the ratio p-hat/q-hat concentrates around
i * E[X_1] instead of zero (numerator and denominator noise are
correlated), which drags the loss downward far beyond the informative band
and inflates the selected cutoff.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import GridTooNarrow, PlanTooSmall
from .sampling import ObservationSet
from .spectral import (SpectralGrid, _cumtrapz_from_zero, _half_raw,
                       clamp_phi_values, regularize_inverse)
from .weights import WeightScheme

# below this magnitude a q-hat counts as numerically zero regardless of any
# statistical threshold
RAW_RATIO_GUARD = 1e-12

BLOCK_COUNT = 100
WINDOW = 10


@dataclass(frozen=True)
class CutoffMenu:
    """Integer cutoffs 1 <= m <= sqrt(T)."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.int64)
        if vals.size and (vals.min() < 1 or np.any(np.diff(vals) <= 0)):
            raise ValueError("menu must be strictly increasing positive integers")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_horizon(cls, horizon: float) -> "CutoffMenu":
        top = int(np.floor(np.sqrt(horizon) * (1 + 1e-12)))
        return cls(np.arange(1, top + 1))

    def __len__(self):
        return int(self.values.size)


@dataclass(frozen=True)
class BlockPlan:
    """Disjoint blocks of consecutive indices and their sliding windows."""

    n: int
    bounds: np.ndarray  # block boundaries, length block_count + 1
    window: int = WINDOW

    @property
    def block_count(self) -> int:
        return int(self.bounds.size - 1)

    @property
    def subset_count(self) -> int:
        return self.block_count - self.window + 1

    @property
    def nominal_p(self) -> int:
        return self.n // WINDOW


def build_block_plan(n: int) -> BlockPlan:
    """100 equal blocks of consecutive indices, remainder in the last block.

    Ten-block windows then hold a nominal n/10 observations each. Fewer than
    1000 observations leave blocks of size below ten and the plan is refused.
    """
    if n < 1000:
        raise PlanTooSmall(f"need at least 1000 observations, got {n}")
    size = n // BLOCK_COUNT
    bounds = np.arange(0, size * (BLOCK_COUNT + 1), size, dtype=np.int64)
    bounds[-1] = n
    bounds.setflags(write=False)
    return BlockPlan(n=n, bounds=bounds)


@dataclass(frozen=True)
class CvResult:
    m_hat: int
    menu: CutoffMenu
    losses: np.ndarray


def _menu_half_indices(menu: CutoffMenu, grid: SpectralGrid) -> np.ndarray:
    idx = np.rint(menu.values / grid.du).astype(np.int64)
    if idx.size and idx.max() > grid.half_count:
        raise GridTooNarrow(
            f"menu reaches {menu.values.max()} but the grid stops at {grid.u_max:g}"
        )
    return idx


def _nested_integrals(half_values: np.ndarray, grid: SpectralGrid,
                      idx: np.ndarray) -> np.ndarray:
    """int_{-m}^{m} f for every menu cutoff, for an even integrand."""
    return 2.0 * _cumtrapz_from_zero(half_values, grid.du)[idx]


def _raw_ratio(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p)
    ok = np.abs(q) >= RAW_RATIO_GUARD
    np.divide(p, q, out=out, where=ok)
    return out


def _subset_ratio(p: np.ndarray, q: np.ndarray, s2: np.ndarray) -> np.ndarray:
    """Subset exponent-derivative ratio, thresholded by its own noise level."""
    out = np.zeros_like(p)
    ok = np.abs(q) >= np.maximum(np.sqrt(np.maximum(s2, 0.0)), RAW_RATIO_GUARD)
    np.divide(p, q, out=out, where=ok)
    return out


class _SubsetSweep:
    """Shared machinery: per-window subset and complement spectral statistics."""

    def __init__(self, obs: ObservationSet, weights: WeightScheme, kappa: float,
                 grid: SpectralGrid, plan: BlockPlan, block_stats=None):
        if block_stats is None:
            block_stats = _half_raw(obs, weights, grid, bounds=plan.bounds)
        q_b, p_b, s2_b = block_stats
        zero = np.zeros((1,) + q_b.shape[1:])
        self.cq = np.concatenate([zero.astype(complex), np.cumsum(q_b, axis=0)])
        self.cp = np.concatenate([zero.astype(complex), np.cumsum(p_b, axis=0)])
        self.cs2 = np.concatenate([zero, np.cumsum(s2_b, axis=0)])
        self.q_tot = self.cq[-1]
        self.p_tot = self.cp[-1]
        self.s2_tot = self.cs2[-1]
        self.kappa = kappa
        self.plan = plan

    def full_psi_prime(self) -> np.ndarray:
        inv = regularize_inverse(self.q_tot, np.sqrt(self.s2_tot), self.kappa)
        return self.p_tot * inv

    def subset_pairs(self):
        """Yield (subset ratio, regularized complement ratio) per window."""
        w = self.plan.window
        for j in range(self.plan.subset_count):
            q_in = self.cq[j + w] - self.cq[j]
            p_in = self.cp[j + w] - self.cp[j]
            s2_in = self.cs2[j + w] - self.cs2[j]
            psi_in = _subset_ratio(p_in, q_in, s2_in)
            q_out = self.q_tot - q_in
            p_out = self.p_tot - p_in
            s2_out = self.s2_tot - s2_in
            inv_out = regularize_inverse(q_out, np.sqrt(np.maximum(s2_out, 0.0)),
                                         self.kappa)
            yield psi_in, p_out * inv_out


def cv_cutoff_jump(obs: ObservationSet, weights: WeightScheme, kappa: float,
                   grid: SpectralGrid, menu: CutoffMenu, plan: BlockPlan,
                   block_stats=None) -> CvResult:
    """Cross-validated cutoff for the jump target.

    Empirical loss per cutoff m:
        int_{-m}^{m} |psi'_full|^2 - 2 avg_P Re int_{-m}^{m} psi'_P conj(psi'_{-P}).
    Ties resolve to the smallest minimizer. ``block_stats`` may carry a
    precomputed per-block statistic triple to avoid a second data pass.
    """
    sweep = _SubsetSweep(obs, weights, kappa, grid, plan, block_stats)
    idx = _menu_half_indices(menu, grid)
    first = np.abs(sweep.full_psi_prime()) ** 2
    cross = np.zeros(grid.half_count + 1)
    for psi_in, psi_out in sweep.subset_pairs():
        cross += psi_in.real * psi_out.real + psi_in.imag * psi_out.imag
    cross /= sweep.plan.subset_count
    losses = _nested_integrals(first, grid, idx) - 2.0 * _nested_integrals(cross, grid, idx)
    pick = int(np.argmin(losses))
    return CvResult(m_hat=int(menu.values[pick]), menu=menu, losses=losses)


def cv_cutoff_density(obs: ObservationSet, weights: WeightScheme, kappa: float,
                      grid: SpectralGrid, menu: CutoffMenu, plan: BlockPlan,
                      block_stats=None) -> CvResult:
    """Cross-validated cutoff for the density target.

    Subset characteristic-function estimates exp(int_0^u psi'_P) are clamped
    to modulus one exactly like the full-data estimator.
    """
    sweep = _SubsetSweep(obs, weights, kappa, grid, plan, block_stats)
    idx = _menu_half_indices(menu, grid)
    du = grid.du
    _, phi_full = clamp_phi_values(_cumtrapz_from_zero(sweep.full_psi_prime(), du))
    first = np.abs(phi_full) ** 2
    cross = np.zeros(grid.half_count + 1)
    for psi_in, psi_out in sweep.subset_pairs():
        _, phi_in = clamp_phi_values(_cumtrapz_from_zero(psi_in, du))
        _, phi_out = clamp_phi_values(_cumtrapz_from_zero(psi_out, du))
        cross += phi_in.real * phi_out.real + phi_in.imag * phi_out.imag
    cross /= sweep.plan.subset_count
    losses = _nested_integrals(first, grid, idx) - 2.0 * _nested_integrals(cross, grid, idx)
    pick = int(np.argmin(losses))
    return CvResult(m_hat=int(menu.values[pick]), menu=menu, losses=losses)


def write_loss_csv(result: CvResult, path) -> None:
    """Dump the loss table as ``m,loss`` rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "loss"])
        for m, loss in zip(result.menu.values, result.losses):
            w.writerow([int(m), repr(float(loss))])
