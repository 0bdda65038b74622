"""Angular statistics of orbit streams.

Every function here is a fold over orbit data.  ``records`` may be an
:class:`~hyplat.lattice.OrbitBatch`, an iterable of batches (as produced by
:func:`~hyplat.lattice.iter_batches`), an iterable of
:class:`~hyplat.lattice.OrbitRecord`, or a bare numpy array of angles (which
carries no distances, so distance-weighted folds reject it).

Exponential sums use ``e(n*omega)`` with the package's angle convention; the
polar angle convention ``phi/pi`` differs by 1/2, which only multiplies the
sum by ``(-1)**n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .halfplane import TWO_PI, NormalizedAngle
from .lattice import GroupSpec, OrbitBatch, OrbitRecord

# Erdos-Turan constants: D* <= C1/(M+1) + C2 * sum_{m<=M} |S_m| / (m N)
ET_C1 = 6.0
ET_C2 = 4.0 / math.pi


def _chunks(records) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield (omega, cosh_dist) array pairs from any supported record container."""
    if isinstance(records, OrbitBatch):
        yield records.omega, records.cosh_dist
        return
    if isinstance(records, np.ndarray):
        om = np.asarray(records, dtype=float).ravel()
        yield om, np.full(om.shape, np.nan)
        return
    pending_om: list[float] = []
    pending_ch: list[float] = []
    for item in records:
        if isinstance(item, OrbitBatch):
            yield item.omega, item.cosh_dist
        elif isinstance(item, OrbitRecord):
            pending_om.append(float(item.omega))
            pending_ch.append(item.cosh_dist)
        else:
            raise TypeError(f"unsupported record type {type(item).__name__}")
    if pending_om:
        yield np.array(pending_om), np.array(pending_ch)


def omegas(records) -> np.ndarray:
    parts = [om for om, _ in _chunks(records)]
    return np.concatenate(parts) if parts else np.empty(0)


@dataclass(frozen=True)
class AngleInterval:
    """Arc [start, start + length) of R/Z."""

    start: float
    length: float

    def __post_init__(self):
        if not 0.0 < self.length <= 1.0:
            raise ValueError(f"interval length must lie in (0, 1], got {self.length}")
        object.__setattr__(self, "start", float(NormalizedAngle(self.start)))

    def contains(self, omega):
        if self.length >= 1.0:
            return np.ones(np.shape(omega), dtype=bool) if np.ndim(omega) else True
        return np.mod(np.asarray(omega) - self.start, 1.0) < self.length

    def complement(self) -> "AngleInterval":
        return AngleInterval(self.start + self.length, 1.0 - self.length)

    def to_dict(self) -> dict:
        return {"start": self.start, "length": self.length}


def sector_count(records, interval: AngleInterval) -> int:
    return sum(int(np.count_nonzero(interval.contains(om))) for om, _ in _chunks(records))


def exponential_sum(records, n: int) -> complex:
    """Sum of e(n * omega) over the records; the count N when n == 0."""
    if n == 0:
        return complex(sum(len(om) for om, _ in _chunks(records)), 0.0)
    re = im = 0.0
    for om, _ in _chunks(records):
        ang = TWO_PI * ((n * om) % 1.0)
        re += float(np.cos(ang).sum())
        im += float(np.sin(ang).sum())
    return complex(re, im)


def exponential_sums(records, n_max: int) -> tuple[int, np.ndarray]:
    """(N, [S_1, ..., S_nmax]) in one pass over the data."""
    total = 0
    acc = np.zeros(n_max, dtype=complex)
    for om, _ in _chunks(records):
        total += len(om)
        base = np.exp(1j * TWO_PI * om)
        power = base.copy()
        # e(n*omega) = e(omega)^n; rounding drift is about n ulp, harmless for
        # the modest n used here
        for n in range(1, n_max + 1):
            if n > 1:
                power *= base
            acc[n - 1] += complex(power.sum())
    return total, acc


def star_discrepancy(omega) -> float:
    """Star discrepancy of points in [0, 1) for anchored intervals [0, x).

    The discrepancy over all arcs of R/Z is at most twice this value.
    """
    w = np.sort(np.asarray(omega, dtype=float).ravel())
    n = len(w)
    if n == 0:
        raise ValueError("star discrepancy of an empty point set")
    i = np.arange(1, n + 1, dtype=float)
    return float(max(np.max(i / n - w), np.max(w - (i - 1) / n)))


def erdos_turan_bound(records, M: int, c1: float = ET_C1, c2: float = ET_C2) -> float:
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    n, sums = exponential_sums(records, M)
    if n == 0:
        raise ValueError("Erdos-Turan bound of an empty point set")
    m = np.arange(1, M + 1)
    return c1 / (M + 1) + c2 * float(np.sum(np.abs(sums) / (m * n)))


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    residual: float


def fit_decay_exponent(rows) -> DecayFit:
    """Least-squares slope of log|error| against log X.

    ``rows`` is a sequence of (X, error) pairs; rows with zero error are
    dropped, and fewer than three usable rows is an error.
    """
    pts = [(float(X), abs(float(e))) for X, e in rows if e != 0 and X > 0]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 rows with nonzero error, got {len(pts)}")
    lx = np.log([p[0] for p in pts])
    ly = np.log([p[1] for p in pts])
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, res, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = float(np.sqrt(res[0] / len(pts))) if len(res) else 0.0
    return DecayFit(float(coef[0]), resid)


def g_series_partial(records, n: int, s: float, X: float, group: GroupSpec, tail: bool = True) -> complex:
    """Truncated sum of e(n*omega)/cosh^s over the ball of cosh radius X.

    For n == 0 the tail beyond X is added using the main term of the ball
    count, kappa*2*pi/vol * X^(1-s)/(s-1), so that (s-1)*G tends to
    kappa*2*pi/vol as s -> 1.
    """
    if s <= 1:
        raise ValueError(f"s must exceed 1, got {s}")
    total = 0j
    for om, ch in _chunks(records):
        if np.isnan(ch).any():
            raise ValueError("G-series needs distances; got bare angles")
        w = ch ** -s
        if n == 0:
            total += float(w.sum())
        else:
            ang = TWO_PI * ((n * om) % 1.0)
            total += complex(float((w * np.cos(ang)).sum()), float((w * np.sin(ang)).sum()))
    if n == 0 and tail:
        c = group.kappa * TWO_PI / group.covolume
        total += c * X ** (1.0 - s) / (s - 1.0)
    return total


@dataclass
class EquidistributionRow:
    X: float
    N: int
    N_I: int
    error: float

    def to_dict(self) -> dict:
        return {"X": self.X, "N": self.N, "N_I": self.N_I, "error": self.error}


@dataclass
class EquidistributionReport:
    group: str
    z0: tuple[float, float]
    z1: tuple[float, float]
    interval: AngleInterval
    rows: list[EquidistributionRow] = field(default_factory=list)
    fitted_exponent: float | None = None
    residual: float | None = None

    def to_dict(self) -> dict:
        return {
            "group": self.group,
            "z0": list(self.z0),
            "z1": list(self.z1),
            "interval": self.interval.to_dict(),
            "rows": [r.to_dict() for r in self.rows],
            "fitted_exponent": self.fitted_exponent,
            "residual": self.residual,
        }


def equidistribution_rows(omega_sorted_by_distance: np.ndarray, cosh_sorted: np.ndarray,
                          thresholds: Iterable[float], interval: AngleInterval) -> list[EquidistributionRow]:
    """Rows for nested balls cut from a single canonically ordered data set."""
    inside = interval.contains(omega_sorted_by_distance)
    cum = np.cumsum(inside)
    rows = []
    for X in thresholds:
        n = int(np.searchsorted(cosh_sorted, X * (1.0 + 1e-12), side="right"))
        n_i = int(cum[n - 1]) if n else 0
        rows.append(EquidistributionRow(float(X), n, n_i, n_i / n - interval.length if n else 0.0))
    return rows


def equidistribution_report(records, thresholds, interval: AngleInterval, group: GroupSpec,
                            z0, z1) -> EquidistributionReport:
    om_parts, ch_parts = [], []
    for om, ch in _chunks(records):
        om_parts.append(om)
        ch_parts.append(ch)
    om = np.concatenate(om_parts) if om_parts else np.empty(0)
    ch = np.concatenate(ch_parts) if ch_parts else np.empty(0)
    rows = equidistribution_rows(om, ch, sorted(thresholds), interval)
    report = EquidistributionReport(group.name, tuple(z0), tuple(z1), interval, rows)
    usable = [(r.X, r.error) for r in rows if r.error != 0]
    if len(usable) >= 3:
        fit = fit_decay_exponent(usable)
        report.fitted_exponent, report.residual = fit.exponent, fit.residual
    return report
