"""Low-level spectral accumulation kernels.

Everything here works on the nonnegative half of the frequency grid and on
plain arrays; grid mirroring and weight-scheme bookkeeping live upstream.
Three weight layouts are supported:

* exponential family  w_j(u) = exp(delta_j * psi(u)) with Re psi <= 0
  (ideal weights and every iterate of the data-driven scheme),
* a row table         w_j(u) = table[row_of[j], u] (binned or custom),
* equal weights       w_j(u) = 1.

The hot kernels are numba-compiled with inlined polynomial exp/sin/cos so the
inner loops stay branch-free and auto-vectorize; a chunked numpy reference
path computes the same sums with libm and is used for small problems and as
a cross-check in the tests. Accumulation order is fixed (ascending j within
a frequency node), so results do not depend on thread scheduling.
"""

from __future__ import annotations

import numpy as np

# problems smaller than this many (observation, node) pairs take the numpy
# reference path; larger ones take the compiled kernels
DIRECT_LIMIT = 1 << 21

FORCE_NUMPY = False

try:  # pragma: no cover - exercised implicitly everywhere
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):  # noqa: D103
        def wrap(f):
            return f

        return wrap

    prange = range


# power-of-two table for exponent reconstruction, covering the full double
# range including gradual underflow to 0
_POW2 = np.ldexp(1.0, np.arange(-1100, 42))

_INV_LN2 = 1.4426950408889634074
_LN2_HI = 6.93147180369123816490e-01
_LN2_LO = 1.90821492927058770002e-10

# pi/2 split into 27-bit chunks (Cody-Waite), and 2/pi
_P1 = 1.570796325802803
_P2 = 9.920935739593517e-10
_P3 = 5.721188726109832e-18
_TWO_OVER_PI = 0.6366197723675814

_S3 = -1.6666666666666666e-01
_S5 = 8.3333333333333332e-03
_S7 = -1.9841269841269841e-04
_S9 = 2.7557319223985893e-06
_S11 = -2.5052108385441720e-08
_S13 = 1.6059043836821613e-10
_C2 = -0.5
_C4 = 4.1666666666666664e-02
_C6 = -1.3888888888888889e-03
_C8 = 2.4801587301587302e-05
_C10 = -2.7557319223985888e-07
_C12 = 2.0876756987868100e-09
_C14 = -1.1470745597729725e-11


@njit(cache=True, fastmath=True, inline="always")
def _expneg(x, pow2):
    # exp(x) for x <= 0 to ~1 ulp; underflows cleanly to 0
    kf = np.rint(x * _INV_LN2)
    r = (x - kf * _LN2_HI) - kf * _LN2_LO
    p = 1.0 + r * (1.0 + r * (0.5 + r * (1.6666666666666666e-1 + r * (4.1666666666666664e-2
        + r * (8.333333333333333e-3 + r * (1.3888888888888889e-3 + r * (1.984126984126984e-4
        + r * (2.48015873015873e-5 + r * (2.7557319223985893e-6 + r * (2.755731922398589e-7
        + r * (2.505210838544172e-8 + r * (2.08767569878681e-9
        + r * 1.6059043836821613e-10))))))))))))
    k = np.int64(kf) + 1100
    k = min(max(k, 0), 1141)
    return p * pow2[k]


@njit(cache=True, fastmath=True, inline="always")
def _sincos(b):
    # sin and cos of b via quadrant reduction, ~2e-14 absolute for |b| < 1e8
    nf = np.rint(b * _TWO_OVER_PI)
    r = ((b - nf * _P1) - nf * _P2) - nf * _P3
    z = r * r
    ss = r * (1.0 + z * (_S3 + z * (_S5 + z * (_S7 + z * (_S9 + z * (_S11 + z * _S13))))))
    cc = 1.0 + z * (_C2 + z * (_C4 + z * (_C6 + z * (_C8 + z * (_C10 + z * (_C12 + z * _C14))))))
    ni = np.int64(nf)
    q0 = np.float64(ni & 1)
    sgn_s = 1.0 - 2.0 * np.float64((ni >> 1) & 1)
    sgn_c = 1.0 - 2.0 * np.float64(((ni >> 1) ^ ni) & 1)
    s = sgn_s * ((1.0 - q0) * ss + q0 * cc)
    c = sgn_c * ((1.0 - q0) * cc + q0 * ss)
    return s, c


@njit(cache=True, fastmath=True, parallel=True)
def _nb_stats_exp(z, d, u, psr, psi_im, bounds, pow2):
    nb = bounds.shape[0] - 1
    N = u.shape[0]
    qr = np.empty((nb, N)); qi = np.empty((nb, N))
    pr = np.empty((nb, N)); pi_ = np.empty((nb, N))
    s2 = np.empty((nb, N))
    for k in prange(N):
        uk = u[k]; ar = psr[k]; ai = psi_im[k]
        for b in range(nb):
            aqr = 0.0; aqi = 0.0; apr = 0.0; api = 0.0; as2 = 0.0
            for j in range(bounds[b], bounds[b + 1]):
                dj = d[j]; zj = z[j]
                e = _expneg(dj * ar, pow2)
                s, c = _sincos(dj * ai + zj * uk)
                wr = e * c; wi = e * s
                aqr += dj * wr; aqi += dj * wi
                apr += -zj * wi; api += zj * wr
                as2 += dj * dj * e * e
            qr[b, k] = aqr; qi[b, k] = aqi
            pr[b, k] = apr; pi_[b, k] = api
            s2[b, k] = as2
    return qr, qi, pr, pi_, s2


@njit(cache=True, fastmath=True, parallel=True)
def _nb_stats_eq(z, d, u, bounds):
    nb = bounds.shape[0] - 1
    N = u.shape[0]
    qr = np.empty((nb, N)); qi = np.empty((nb, N))
    pr = np.empty((nb, N)); pi_ = np.empty((nb, N))
    for k in prange(N):
        uk = u[k]
        for b in range(nb):
            aqr = 0.0; aqi = 0.0; apr = 0.0; api = 0.0
            for j in range(bounds[b], bounds[b + 1]):
                dj = d[j]; zj = z[j]
                s, c = _sincos(zj * uk)
                aqr += dj * c; aqi += dj * s
                apr += -zj * s; api += zj * c
            qr[b, k] = aqr; qi[b, k] = aqi
            pr[b, k] = apr; pi_[b, k] = api
    return qr, qi, pr, pi_


@njit(cache=True, fastmath=True, parallel=True)
def _nb_stats_table(z, d, u, wr_tab, wi_tab, row_of, bounds):
    nb = bounds.shape[0] - 1
    N = u.shape[0]
    qr = np.empty((nb, N)); qi = np.empty((nb, N))
    pr = np.empty((nb, N)); pi_ = np.empty((nb, N))
    s2 = np.empty((nb, N))
    for k in prange(N):
        uk = u[k]
        for b in range(nb):
            aqr = 0.0; aqi = 0.0; apr = 0.0; api = 0.0; as2 = 0.0
            for j in range(bounds[b], bounds[b + 1]):
                dj = d[j]; zj = z[j]; r = row_of[j]
                twr = wr_tab[r, k]; twi = wi_tab[r, k]
                s, c = _sincos(zj * uk)
                wr = twr * c - twi * s
                wi = twr * s + twi * c
                aqr += dj * wr; aqi += dj * wi
                apr += -zj * wi; api += zj * wr
                as2 += dj * dj * (twr * twr + twi * twi)
            qr[b, k] = aqr; qi[b, k] = aqi
            pr[b, k] = apr; pi_[b, k] = api
            s2[b, k] = as2
    return qr, qi, pr, pi_, s2


@njit(cache=True, fastmath=True, parallel=True)
def _nb_weight_distances(d, psr1, psi1, psr2, psi2, tw, pow2):
    n = d.shape[0]
    N = tw.shape[0]
    out = np.empty(n)
    for j in prange(n):
        dj = d[j]
        acc = 0.0
        for k in range(N):
            e1 = _expneg(dj * psr1[k], pow2)
            s1, c1 = _sincos(dj * psi1[k])
            e2 = _expneg(dj * psr2[k], pow2)
            s2_, c2 = _sincos(dj * psi2[k])
            dr = e1 * c1 - e2 * c2
            di = e1 * s1 - e2 * s2_
            acc += tw[k] * (dr * dr + di * di)
        out[j] = acc
    return out


# ---------------------------------------------------------------------------
# numpy reference paths


def _np_stats(z, d, u, psi=None, table=None, row_of=None, bounds=None,
              chunk=256):
    nb = bounds.shape[0] - 1
    N = u.shape[0]
    q = np.zeros((nb, N), dtype=complex)
    p = np.zeros((nb, N), dtype=complex)
    s2 = np.zeros((nb, N))
    for b in range(nb):
        lo, hi = int(bounds[b]), int(bounds[b + 1])
        for s in range(lo, hi, chunk):
            e = slice(s, min(s + chunk, hi))
            phase = np.exp(1j * np.outer(z[e], u))
            if psi is not None:
                w = np.exp(np.outer(d[e], psi))
            elif table is not None:
                w = table[row_of[e]]
            else:
                w = np.ones((e.stop - e.start, N))
            wp = w * phase
            q[b] += (d[e][:, None] * wp).sum(0)
            p[b] += (1j * z[e][:, None] * wp).sum(0)
            s2[b] += (d[e][:, None] ** 2 * np.abs(w) ** 2).sum(0)
    return q, p, s2


def _np_weight_distances(d, psi1, psi2, tw, chunk=256):
    n = d.shape[0]
    out = np.empty(n)
    for s in range(0, n, chunk):
        e = slice(s, min(s + chunk, n))
        w1 = np.exp(np.outer(d[e], psi1))
        w2 = np.exp(np.outer(d[e], psi2))
        out[e] = (np.abs(w1 - w2) ** 2 @ tw)
    return out


# ---------------------------------------------------------------------------
# dispatch


def _as_bounds(n, bounds):
    if bounds is None:
        return np.array([0, n], dtype=np.int64)
    return np.asarray(bounds, dtype=np.int64)


def _use_fast(n, N):
    return HAVE_NUMBA and not FORCE_NUMPY and n * N >= DIRECT_LIMIT


def stats_half(z, d, u_half, psi_half=None, table_half=None, row_of=None,
               bounds=None):
    """Accumulate q-hat, p-hat and sigma^2 on the nonnegative grid half.

    Returns ``(q, p, s2)``; with ``bounds`` (a sorted int array of block
    boundaries) the arrays have one row per block of consecutive
    observations, otherwise the block axis is squeezed away.
    """
    z = np.ascontiguousarray(z, dtype=float)
    d = np.ascontiguousarray(d, dtype=float)
    u_half = np.ascontiguousarray(u_half, dtype=float)
    squeeze = bounds is None
    bnd = _as_bounds(z.size, bounds)
    if _use_fast(z.size, u_half.size):
        if psi_half is not None:
            psr = np.ascontiguousarray(psi_half.real)
            psm = np.ascontiguousarray(psi_half.imag)
            qr, qi, pr, pi_, s2 = _nb_stats_exp(z, d, u_half, psr, psm, bnd, _POW2)
        elif table_half is not None:
            wr = np.ascontiguousarray(table_half.real)
            wi = np.ascontiguousarray(table_half.imag)
            ro = np.ascontiguousarray(row_of, dtype=np.int64)
            qr, qi, pr, pi_, s2 = _nb_stats_table(z, d, u_half, wr, wi, ro, bnd)
        else:
            qr, qi, pr, pi_ = _nb_stats_eq(z, d, u_half, bnd)
            s2 = _eq_sigma2(d, u_half.size, bnd)
        q = qr + 1j * qi
        p = pr + 1j * pi_
    else:
        q, p, s2 = _np_stats(z, d, u_half, psi=psi_half, table=table_half,
                             row_of=row_of, bounds=bnd)
    if squeeze:
        return q[0], p[0], s2[0]
    return q, p, s2


def _eq_sigma2(d, N, bounds):
    nb = bounds.shape[0] - 1
    s2 = np.empty((nb, N))
    for b in range(nb):
        s2[b, :] = np.sum(d[bounds[b]:bounds[b + 1]] ** 2)
    return s2


def sigma2_half(d, u_half, psi_half=None, table_half=None, row_of=None):
    """sigma^2(u) = sum_j delta_j^2 |w_j(u)|^2 on the grid half."""
    d = np.asarray(d, dtype=float)
    if psi_half is not None:
        out = np.zeros(u_half.size)
        for s in range(0, d.size, 512):
            e = slice(s, min(s + 512, d.size))
            out += (d[e][:, None] ** 2
                    * np.exp(2.0 * np.outer(d[e], psi_half.real))).sum(0)
        return out
    if table_half is not None:
        d2_by_row = np.bincount(np.asarray(row_of), weights=d**2,
                                minlength=table_half.shape[0])
        return d2_by_row @ (np.abs(table_half) ** 2)
    return np.full(u_half.size, float(np.sum(d**2)))


def weight_distances(d, psi1_half, psi2_half, trap_w):
    """Squared L2 distance between exp-family weight iterates, per observation.

    ``trap_w`` carries the trapezoid weights of the (symmetric) integration
    range, already including the factor 2 for the negative half.
    """
    d = np.ascontiguousarray(d, dtype=float)
    tw = np.ascontiguousarray(trap_w, dtype=float)
    if _use_fast(d.size, tw.size):
        return _nb_weight_distances(
            d,
            np.ascontiguousarray(psi1_half.real), np.ascontiguousarray(psi1_half.imag),
            np.ascontiguousarray(psi2_half.real), np.ascontiguousarray(psi2_half.imag),
            tw, _POW2,
        )
    return _np_weight_distances(d, psi1_half, psi2_half, tw)


def chebyshev_weight_distances(d, delta_max, psi1_half, psi2_half, trap_w,
                               max_degree=1024):
    """Same quantity as :func:`weight_distances` via a Chebyshev surrogate.

    The distance is A(x) + B(x) - 2 Re C(x) with x the gap length, where A,
    B, C are integrals of exp(x * c(u)) over the grid; each is analytic in x,
    so a Chebyshev interpolant of modest degree reproduces it to near machine
    precision. Falls back to the direct kernel when the needed degree would
    be too large (wildly different iterates).
    """
    re1 = psi1_half.real
    re2 = psi2_half.real
    dim = psi1_half.imag - psi2_half.imag
    lam = max(
        2.0 * float(np.max(np.abs(re1))),
        2.0 * float(np.max(np.abs(re2))),
        float(np.max(np.hypot(re1 + re2, dim))),
    )
    degree = int(np.e / 4.0 * lam * delta_max) + 40
    if degree > max_degree:
        return weight_distances(d, psi1_half, psi2_half, trap_w)
    from numpy.polynomial import chebyshev

    t_nodes = np.cos(np.pi * np.arange(degree + 1) / degree)
    nodes = 0.5 * delta_max * (1.0 + t_nodes)
    ea = np.exp(np.outer(nodes, 2.0 * re1)) @ trap_w
    eb = np.exp(np.outer(nodes, 2.0 * re2)) @ trap_w
    ec = np.exp(np.outer(nodes, re1 + re2 + 1j * dim)) @ trap_w
    vals = ea + eb - 2.0 * ec.real
    coef = chebyshev.chebfit(t_nodes, vals, degree)
    out = chebyshev.chebval(2.0 * np.asarray(d, dtype=float) / delta_max - 1.0,
                            coef)
    return np.maximum(out, 0.0)
