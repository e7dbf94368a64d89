"""Per-observation spectral weight functions w_j(u).

Four schemes are provided:

* ``oracle``     w_j(u) = conj(phi_{delta_j}(u)), the infeasible ideal built
                 from a model's closed-form characteristic function,
* ``equal``      w_j(u) = 1,
* ``binned``     an empirical surrogate that pools observations whose gaps
                 fall into the same bin of [0, delta_max],
* ``iterative``  the data-driven fixed-point scheme that alternates between
                 integrating the exponent estimate and re-deriving weights
                 from it.

Weights of the oracle and every iterative iterate have the structural form
w_j(u) = exp(delta_j * psi(u)) for a single half-grid function psi with
Re psi <= 0, which is what the compute kernels exploit; binned and custom
weights are stored as a row table. All schemes are Hermitian in u by
construction and satisfy w_j(0) = 1 (custom matrices excepted).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _engine
from .errors import LengthMismatch
from .sampling import ObservationSet, SamplingScheme


@dataclass(frozen=True)
class WeightScheme:
    """Weight functions for n observations on the nonnegative grid half.

    Exactly one representation is populated: ``psi_half`` for the
    exponential family, ``table_half``/``row_of`` for table-backed schemes,
    neither for equal weights.
    """

    kind: str
    n: int
    deltas: np.ndarray | None = None
    psi_half: np.ndarray | None = None
    table_half: np.ndarray | None = None
    row_of: np.ndarray | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def values(self, grid) -> np.ndarray:
        """Dense (n, n_points) array of w_j(u_k) on the full grid.

        Intended for inspection and tests; memory grows as n times the grid
        size, so avoid it on large problems.
        """
        from .spectral import mirror

        if self.psi_half is not None:
            if self.deltas is None:
                raise ValueError("exponential-family scheme lost its gaps")
            half = np.exp(np.outer(self.deltas, self.psi_half))
        elif self.table_half is not None:
            half = self.table_half[self.row_of]
        else:
            half = np.ones((self.n, grid.half_count + 1))
        return mirror(half, +1)


def oracle_weights(model, scheme: SamplingScheme, grid) -> WeightScheme:
    """Ideal weights w_j(u) = conj(phi_{delta_j}(u)) from the model's closed form."""
    psi = np.conj(model.char_exponent(grid.half_nodes))
    # Re(Psi) <= 0 mathematically; clamp fp residue so |w| <= 1 holds exactly
    psi = np.minimum(psi.real, 0.0) + 1j * psi.imag
    return WeightScheme(kind="oracle", n=scheme.n, deltas=scheme.deltas,
                        psi_half=psi)


def equal_weights(n: int, grid) -> WeightScheme:
    """All weights identically one."""
    return WeightScheme(kind="equal", n=int(n))


def weights_from_matrix(values: np.ndarray, grid,
                        deltas: np.ndarray | None = None) -> WeightScheme:
    """Custom per-observation weights from a dense full-grid matrix.

    The matrix must be Hermitian in u (w(-u) = conj(w(u))); only the
    nonnegative half is stored. No modulus clamp is applied.
    """
    values = np.asarray(values, dtype=complex)
    m = grid.half_count
    if values.shape[-1] != grid.n_points:
        raise LengthMismatch("matrix does not match the grid")
    herm = np.conj(values[..., m + 1:][..., ::-1])
    if not np.allclose(values[..., :m], herm, rtol=1e-10, atol=1e-12):
        raise ValueError("weight matrix is not Hermitian in u")
    half = np.ascontiguousarray(values[..., m:])
    n = values.shape[0]
    return WeightScheme(kind="custom", n=n, deltas=deltas, table_half=half,
                        row_of=np.arange(n))


def bin_index(deltas: np.ndarray, delta_max: float, n_bins: int) -> np.ndarray:
    """Assign each gap to one of ``n_bins`` equal-width bins of [0, delta_max]."""
    idx = np.floor(deltas / delta_max * n_bins).astype(np.int64)
    return np.clip(idx, 0, n_bins - 1)


def binned_weights(obs: ObservationSet, n_bins: int, grid) -> WeightScheme:
    """Empirical weights pooled over gap bins.

    [0, delta_max] is split into ``n_bins`` equal intervals; observations
    whose gaps share a bin receive the conjugate empirical characteristic
    function of that bin's increments, clamped to modulus one. Bins that
    contain no observation fall back to the neutral weight 1 and are
    reported through ``meta['empty_bins']`` and a warning.
    """
    if n_bins < 1:
        raise ValueError("need at least one bin")
    scheme = obs.scheme
    rows = bin_index(scheme.deltas, scheme.delta_max, n_bins)
    counts = np.bincount(rows, minlength=n_bins)

    # per-bin sums of exp(iuZ): sort observations by bin and reuse the
    # block-accumulating kernel with unit gap weights
    order = np.argsort(rows, kind="stable")
    bounds = np.concatenate([[0], np.cumsum(counts)])
    q, _, _ = _engine.stats_half(
        obs.increments[order], np.ones(obs.n), grid.half_nodes, bounds=bounds,
    )
    table = np.ones((n_bins, grid.half_count + 1), dtype=complex)
    filled = counts > 0
    table[filled] = np.conj(q[filled]) / counts[filled, None]
    mod = np.abs(table)
    np.divide(table, mod, out=table, where=mod > 1.0)

    empty = np.flatnonzero(~filled)
    meta = {"empty_bins": empty.tolist()}
    if empty.size:
        warnings.warn(
            f"{empty.size} of {n_bins} gap bins are empty; using weight 1 there",
            stacklevel=2,
        )
    return WeightScheme(kind="binned", n=obs.n, deltas=scheme.deltas,
                        table_half=table, row_of=rows, meta=meta)


def weights_from_psi_hat(psi_hat_half: np.ndarray, scheme: SamplingScheme,
                         kind: str = "iterative") -> WeightScheme:
    """Weights w_j = conj(exp(delta_j * psi_hat)), modulus clamped at one.

    Clamping the modulus is the same as flooring Re(psi_hat) at zero, which
    also keeps the exponential finite for arbitrarily bad estimates.
    """
    psi = np.minimum(psi_hat_half.real, 0.0) - 1j * psi_hat_half.imag
    return WeightScheme(kind=kind, n=scheme.n, deltas=scheme.deltas,
                        psi_half=psi)


def iterative_weights(obs: ObservationSet, grid, kappa: float = 1.0,
                      max_iters: int = 50, stall_patience: int = 4) -> WeightScheme:
    """Data-driven weights by fixed-point iteration.

    Starting from weights identically one, each round builds the integrated
    exponent estimate with the current weights (threshold level recomputed
    from them) and maps it back to weights. The loop stops once the squared
    L2 distance over [-sqrt(T), sqrt(T)] between consecutive weights is at
    most 1/T for every observation.

    The map contracts geometrically at first but can then bounce on a small
    plateau: the threshold indicator flips a few frequency nodes between
    rounds, which perturbs the integrated exponent beyond any fixed
    tolerance. Iterates on the plateau are statistically interchangeable, so
    the loop also stops when ``stall_patience`` consecutive rounds fail to
    produce a new smallest distance, or after ``max_iters`` rounds; either
    way the last iterate is returned with ``meta['converged'] = False``.
    """
    from .spectral import _cumtrapz_from_zero, _half_raw, regularize_inverse

    scheme = obs.scheme
    horizon = scheme.horizon
    root_t = np.sqrt(horizon)
    limit = min(grid.half_index(min(root_t, grid.u_max)), grid.half_count)
    # trapezoid weights over [-sqrt(T), sqrt(T)], factor 2 for the mirror half
    tw = np.full(limit + 1, 2.0 * grid.du)
    tw[0] = grid.du
    tw[-1] = grid.du

    current = equal_weights(obs.n, grid)
    psi_current = np.zeros(grid.half_count + 1, dtype=complex)
    builds = 0
    converged = False
    stalled = False
    best = np.inf
    since_best = 0
    while builds < max_iters:
        q, p, s2 = _half_raw(obs, current, grid)
        builds += 1
        q_inv = regularize_inverse(q, np.sqrt(s2), kappa)
        psi_hat = _cumtrapz_from_zero(p * q_inv, grid.du)
        nxt = weights_from_psi_hat(psi_hat, scheme)
        dists = _engine.chebyshev_weight_distances(
            scheme.deltas, scheme.delta_max,
            psi_current[:limit + 1], nxt.psi_half[:limit + 1], tw,
        )
        psi_current = nxt.psi_half
        current = nxt
        worst = float(np.max(dists))
        if worst <= 1.0 / horizon:
            converged = True
            break
        if worst < best:
            best = worst
            since_best = 0
        else:
            since_best += 1
            if since_best >= stall_patience:
                stalled = True
                break
    current.meta.update(converged=converged, builds=builds, stalled=stalled)
    if not converged:
        warnings.warn(
            f"weight iteration did not settle below 1/T within {builds} "
            f"rounds ({'stalled' if stalled else 'budget exhausted'}); "
            "using the last iterate",
            stacklevel=2,
        )
    return current


def parse_weight_designation(text: str):
    """Parse ``oracle | equal | binned(K) | binned:K | iterative``.

    Returns ``(kind, n_bins_or_None)``.
    """
    t = text.strip().lower()
    if t in ("oracle", "equal", "iterative"):
        return t, None
    for pattern in ("binned(", "binned:"):
        if t.startswith(pattern):
            num = t[len(pattern):].rstrip(")")
            return "binned", int(num)
    raise ValueError(f"unknown weight designation {text!r}")
