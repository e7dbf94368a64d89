"""Deterministic irregular sampling schemes and the observed increments."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import GapExceedsDeltaMax, LengthMismatch, NonPositiveGap


def _rng_from(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SamplingScheme:
    """Observation times 0 = t_0 < t_1 < ... < t_n, stored through their gaps.

    Gaps are the primary representation and times are derived on demand;
    every downstream formula consumes the gaps directly, and deriving times
    by cumulative summation avoids cancellation for long records.
    ``delta_max`` is a declared a-priori upper bound on the gaps. It is
    validated, never inferred.
    """

    deltas: np.ndarray
    delta_max: float

    def __post_init__(self):
        deltas = _frozen(np.atleast_1d(self.deltas))
        if deltas.ndim != 1 or deltas.size == 0:
            raise NonPositiveGap("need a non-empty 1-d array of gaps")
        if not np.all(np.isfinite(deltas)) or not np.all(deltas > 0.0):
            raise NonPositiveGap("all gaps must be positive and finite")
        dmax = float(self.delta_max)
        if not np.isfinite(dmax) or dmax <= 0.0:
            raise GapExceedsDeltaMax("delta_max must be positive and finite")
        if float(deltas.max()) > dmax:
            raise GapExceedsDeltaMax(
                f"largest gap {deltas.max():g} exceeds delta_max {dmax:g}"
            )
        object.__setattr__(self, "deltas", deltas)
        object.__setattr__(self, "delta_max", dmax)

    @property
    def n(self) -> int:
        return int(self.deltas.size)

    @property
    def horizon(self) -> float:
        """Total observation horizon T = t_n."""
        return float(self.deltas.sum())

    @property
    def times(self) -> np.ndarray:
        t = np.empty(self.n + 1)
        t[0] = 0.0
        np.cumsum(self.deltas, out=t[1:])
        return t

    @property
    def delta_max_bar(self) -> float:
        """max(delta_max, 1), the constant entering variance bounds."""
        return max(self.delta_max, 1.0)


@dataclass(frozen=True)
class ObservationSet:
    """One sampled path: a scheme plus the increments Z_j over its gaps."""

    scheme: SamplingScheme
    increments: np.ndarray

    def __post_init__(self):
        z = _frozen(np.atleast_1d(self.increments))
        if z.ndim != 1 or z.size != self.scheme.n:
            raise LengthMismatch(
                f"{z.size} increments for {self.scheme.n} gaps"
            )
        object.__setattr__(self, "increments", z)

    @property
    def n(self) -> int:
        return self.scheme.n


def scheme_from_gaps(gaps, delta_max: float) -> SamplingScheme:
    """Build a scheme from explicit gaps; times are their cumulative sums."""
    return SamplingScheme(np.asarray(gaps, dtype=float), float(delta_max))


def draw_uniform_gaps(n: int, upper: float, rng_seed) -> SamplingScheme:
    """Draw n i.i.d. gaps uniform on (0, upper].

    Exact zeros (probability 2^-53 per draw) are rejected and redrawn, so
    the declared bound is ``upper`` and every gap is strictly positive.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not upper > 0:
        raise ValueError("upper must be positive")
    rng = _rng_from(rng_seed)
    gaps = upper * (1.0 - rng.random(n))
    bad = gaps <= 0.0
    while bad.any():
        gaps[bad] = upper * (1.0 - rng.random(int(bad.sum())))
        bad = gaps <= 0.0
    return SamplingScheme(gaps, float(upper))


def write_scheme_csv(scheme: SamplingScheme, path) -> None:
    """Serialize a scheme with header ``index,t,delta``.

    The t_0 = 0 row carries an empty delta field.
    """
    times = scheme.times
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "t", "delta"])
        w.writerow([0, repr(0.0), ""])
        for j in range(1, scheme.n + 1):
            w.writerow([j, repr(float(times[j])), repr(float(scheme.deltas[j - 1]))])


def read_scheme_csv(path, delta_max: float | None = None) -> SamplingScheme:
    """Read a scheme written by :func:`write_scheme_csv`.

    The file format does not carry delta_max; pass it explicitly, or the
    largest gap found is declared as the bound.
    """
    gaps = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            if row["delta"]:
                gaps.append(float(row["delta"]))
    if delta_max is None:
        delta_max = max(gaps)
    return scheme_from_gaps(gaps, delta_max)
