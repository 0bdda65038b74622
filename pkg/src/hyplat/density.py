"""Limiting angular densities and the sector-boundary distance.

Densities are evaluated after conjugating the observation point ``z0`` to
``i``; ``z1`` then becomes ``z1' = ((x1 - x0)/y0, y1/y0)`` and
``beta = |z1'|**2 + 1``.  The density ``eta`` of undirected line angles and the
directed density ``rho`` on R/Z are related by
``rho(s) + rho(s + 1/2) = 2 * eta(2*pi*s)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .halfplane import (
    I_POINT,
    TWO_PI,
    GeodesicPolar,
    GeometryError,
    Point,
    distance,
    fold_to_line_angle_array,
    from_polar,
)
from .angular import AngleInterval
from .lattice import DEFAULT_BUDGET, BallQuery, GroupSpec, iter_batches

QUAD_TOL = 1e-10


@dataclass(frozen=True)
class DensityParams:
    z0: Point
    z1: Point

    @property
    def z1_conj(self) -> Point:
        """z1 seen from the frame where z0 sits at i."""
        return Point((self.z1.x - self.z0.x) / self.z0.y, self.z1.y / self.z0.y)

    @property
    def beta(self) -> float:
        z = self.z1_conj
        return z.x * z.x + z.y * z.y + 1.0


@dataclass(frozen=True)
class SectorGeometry:
    """Euclidean center and radius of the geodesic leaving i at angle t."""

    t: float
    alpha: float
    delta: float

    @classmethod
    def at(cls, t: float) -> "SectorGeometry":
        s = math.sin(t)
        if s == 0.0:
            raise GeometryError("vertical ray: the geodesic is not a half circle")
        return cls(t, -math.cos(t) / s, 1.0 / abs(s))


def _denominator(p: DensityParams, t):
    """beta - (beta - 2) cos t + 2 x1 sin t, evaluated as a sum of squares.

    The expanded form cancels badly near its minimum when beta is large;
    it equals 2 |cos(phi) z1 - sin(phi)|^2 with phi = t/2 + pi/2.
    """
    z = p.z1_conj
    half = 0.5 * np.asarray(t, dtype=float)
    s, c = np.sin(half), np.cos(half)
    return 2.0 * ((z.x * s + c) ** 2 + (z.y * s) ** 2)


def rho(p: DensityParams, omega):
    """Directed angular density on R/Z; integrates to 1."""
    return 2.0 * p.z1_conj.y / _denominator(p, TWO_PI * np.asarray(omega, dtype=float))


def rho_display(p: DensityParams, omega):
    """The same density written directly in the coordinates of z0 and z1."""
    x0, y0 = p.z0.x, p.z0.y
    x1, y1 = p.z1.x, p.z1.y
    t = TWO_PI * np.asarray(omega, dtype=float)
    c, s = np.cos(t), np.sin(t)
    den = ((x0 - x1) ** 2 + y0 ** 2 + y1 ** 2) * (1.0 - c) + 2.0 * y0 ** 2 * c + 2.0 * (x1 - x0) * y0 * s
    return 2.0 * y0 * y1 / den


def eta(p: DensityParams, t):
    """Density of undirected line angles on [-pi/2, pi/2]; (1/pi) * integral is 1."""
    x0, y0 = p.z0.x, p.z0.y
    x1, y1 = p.z1.x, p.z1.y
    t = np.asarray(t, dtype=float)
    dx = x0 - x1
    P = y0 ** 2 + y1 ** 2 + dx ** 2
    # P^2 - inner^2 with inner = (y1^2 - y0^2 + dx^2) cos t + 2 y0 dx sin t,
    # factored as (P - inner)(P + inner) and each factor as a sum of squares
    s, c = np.sin(0.5 * t), np.cos(0.5 * t)
    minus = 2.0 * ((dx * s - y0 * c) ** 2 + (y1 * s) ** 2)
    plus = 2.0 * ((dx * c + y0 * s) ** 2 + (y1 * c) ** 2)
    return 2.0 * y0 * y1 * P / (minus * plus)


def folded_rho(p: DensityParams, t):
    """rho(t/2pi) + rho(t/2pi + 1/2), which equals 2 * eta(t)."""
    s = np.asarray(t, dtype=float) / TWO_PI
    return rho(p, s) + rho(p, s + 0.5)


# --------------------------------------------------------------------------
# sector-boundary distance, frame z0 = i


def _check_radius(z1: Point, R: float):
    if not R > distance(I_POINT, z1):
        raise GeometryError(f"radius {R} does not exceed d(i, z1) = {distance(I_POINT, z1)}")


def ray_point(t: float, s: float) -> Point:
    """The point at distance s from i along the ray at angle t (0 = up, positive = left)."""
    phi = (0.5 * t + 0.5 * math.pi) % math.pi
    if phi >= math.pi:
        phi = 0.0
    return from_polar(GeodesicPolar(s, phi))


def sector_radius_exact(z1: Point, t: float, R: float) -> float:
    """Distance Q from i to where the ray at angle t leaves the circle of radius R about z1.

    Rotating the ray onto the downward vertical (the polar frame at i) the
    exit point is exp(-Q) i and the circle condition reduces to
    ``D * E**2 - 2 * y1 * cosh(R) * E + F = 0`` for ``E = exp(Q)``; the larger
    root is taken in the cancellation-free form.  At t = 0 this is the
    vertical-geodesic intersection y1 cosh R + sqrt(y1^2 cosh^2 R - |z1|^2).
    """
    _check_radius(z1, R)
    phi = 0.5 * t + 0.5 * math.pi
    c, s = math.cos(phi), math.sin(phi)
    # |cos(phi) z1 - sin(phi)|^2 and |sin(phi) z1 + cos(phi)|^2
    D = (c * z1.x - s) ** 2 + (c * z1.y) ** 2
    F = (s * z1.x + c) ** 2 + (s * z1.y) ** 2
    ch = math.cosh(R)
    disc = (z1.y * ch) ** 2 - D * F
    return math.log(z1.y * ch + math.sqrt(disc)) - math.log(D)


def ray_circle_intersection(z1: Point, t: float, R: float) -> tuple[Point, float]:
    """Exit point w' and Q by intersecting the ray's geodesic half circle with the circle.

    Follows the Euclidean construction: the geodesic through i at angle t is
    the half circle with center alpha = -cot t and radius delta = 1/|sin t|;
    the hyperbolic circle is |x1 + i y1 cosh R - z| = y1 sinh R; of the two
    roots the one with negative real part for t > 0 is kept.  Loses accuracy
    once y' is of order exp(-R) ~ 1e-6; use :func:`sector_radius_exact` for
    large R.
    """
    _check_radius(z1, R)
    x1, y1 = z1.x, z1.y
    beta = x1 * x1 + y1 * y1 + 1.0
    ch = math.cosh(R)
    if abs(math.sin(t)) < 1e-12:
        root = math.sqrt((y1 * ch) ** 2 - x1 * x1 - y1 * y1)
        y = y1 * ch + root if math.cos(t) > 0 else y1 * ch - root
        w = Point(0.0, y)
        return w, abs(math.log(y))
    g = SectorGeometry.at(t)
    alpha, delta = g.alpha, g.delta
    k2 = (y1 * ch) ** 2
    lin = (alpha - x1) ** 2 / k2
    rad = delta ** 2 + lin - beta ** 2 / (4.0 * k2) - alpha * beta * (alpha - x1) / k2
    xp = (alpha - beta * (alpha - x1) / (2.0 * k2) - math.copysign(1.0, t) * math.sqrt(rad)) / (1.0 + lin)
    yp2 = delta ** 2 - (xp - alpha) ** 2
    if yp2 <= 0.0:
        raise GeometryError("exit point indistinguishable from the boundary in double precision")
    w = Point(xp, math.sqrt(yp2))
    yp = w.y
    plus = math.hypot(xp, yp + 1.0)
    minus = math.hypot(xp, yp - 1.0)
    return w, math.log((plus + minus) / (plus - minus))


def sector_radius_asymptotic(p: DensityParams, t: float, R: float) -> float:
    """log of the main term 2 y1 e^R / (beta - (beta - 2) cos t + 2 x1 sin t)."""
    z = p.z1_conj
    return R + math.log(2.0 * z.y) - math.log(float(_denominator(p, t)))


def k_theta(p: DensityParams, omega):
    """Coefficient k with exp(Q) = k * e^R + O(1), read off the asymptotic distance."""
    omega = np.asarray(omega, dtype=float)
    vals = [math.exp(sector_radius_asymptotic(p, TWO_PI * w, 0.0)) for w in np.ravel(omega)]
    return np.reshape(np.array(vals), omega.shape) if omega.ndim else vals[0]


# --------------------------------------------------------------------------
# quadrature


def _simpson(f, a, fa, m, fm, b, fb, whole, tol, depth):
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    # halving tol eventually drops it below rounding noise; accept at that floor
    if depth <= 0 or abs(delta) <= max(15.0 * tol, 1e-15 * abs(left + right)):
        return left + right + delta / 15.0
    return (_simpson(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1)
            + _simpson(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1))


def adaptive_simpson(f, a: float, b: float, tol: float = QUAD_TOL, breakpoints=(), max_depth: int = 50) -> float:
    """Adaptive Simpson rule on [a, b], split first at any interior breakpoints."""
    if b <= a:
        return 0.0
    cuts = [a] + sorted(x for x in breakpoints if a < x < b) + [b]
    total = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        share = tol * (hi - lo) / (b - a)
        m = 0.5 * (lo + hi)
        flo, fm, fhi = f(lo), f(m), f(hi)
        whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi)
        total += _simpson(f, lo, flo, m, fm, hi, fhi, whole, share, max_depth)
    return total


def _rho_breakpoints(p: DensityParams) -> list[float]:
    """omega values where the denominator of rho is stationary."""
    z = p.z1_conj
    t0 = math.atan2(-2.0 * z.x, p.beta - 2.0)
    return sorted({(t0 / TWO_PI) % 1.0, (t0 / TWO_PI + 0.5) % 1.0})


def _arcs(start: float, length: float) -> list[tuple[float, float]]:
    end = start + length
    if end <= 1.0:
        return [(start, end)]
    return [(start, 1.0), (0.0, end - 1.0)]


def integrate_density(p: DensityParams, interval) -> float:
    """Integral of rho over an arc of R/Z (anything with ``start`` and ``length``)."""
    f = lambda w: float(rho(p, w))  # noqa: E731
    bps = _rho_breakpoints(p)
    total = 0.0
    arcs = _arcs(interval.start, interval.length)
    for lo, hi in arcs:
        total += adaptive_simpson(f, lo, hi, QUAD_TOL / len(arcs), breakpoints=bps)
    return total


def integrate_eta(p: DensityParams, a: float, b: float) -> float:
    """(1/pi) times the integral of eta over [a, b]."""
    f = lambda t: float(eta(p, t))  # noqa: E731
    # eta(t) is rho folded at 2*pi*omega = t, so its extrema sit at the same angles mod pi
    bps = []
    for w in _rho_breakpoints(p):
        tt = (TWO_PI * w + 0.5 * math.pi) % math.pi - 0.5 * math.pi
        bps.append(tt)
    return adaptive_simpson(f, a, b, QUAD_TOL * math.pi, breakpoints=bps) / math.pi


def integrate_folded_rho(p: DensityParams, a: float, b: float) -> float:
    """Integral of rho over the omegas whose line angle lies in [a, b)."""
    lo, hi = a / TWO_PI, b / TWO_PI
    f = lambda w: float(rho(p, w) + rho(p, w + 0.5))  # noqa: E731
    bps = [w - 1.0 if w > 0.5 else w for w in _rho_breakpoints(p)]
    bps += [w - 0.5 for w in _rho_breakpoints(p)]
    return adaptive_simpson(f, lo, hi, QUAD_TOL, breakpoints=bps)


# --------------------------------------------------------------------------
# reports


@dataclass
class BinRow:
    start: float
    end: float
    empirical: float
    predicted: float
    extra: dict = field(default_factory=dict)

    @property
    def diff(self) -> float:
        return self.empirical - self.predicted

    def to_dict(self) -> dict:
        d = {"interval": [self.start, self.end], "empirical": self.empirical,
             "predicted": self.predicted, "diff": self.diff}
        d.update(self.extra)
        return d


@dataclass
class AngularReport:
    group: str
    z0: Point
    z1: Point
    w: Point
    X: float
    count: int
    bins: list[BinRow]

    @property
    def R(self) -> float:
        return math.acosh(self.X)

    @property
    def max_abs_diff(self) -> float:
        return max(abs(b.diff) for b in self.bins)

    def to_dict(self) -> dict:
        return {
            "group": self.group,
            "z0": list(self.z0.as_tuple()),
            "z1": list(self.z1.as_tuple()),
            "w": list(self.w.as_tuple()),
            "X": self.X,
            "R": self.R,
            "N": self.count,
            "bins": [b.to_dict() for b in self.bins],
            "max_abs_diff": self.max_abs_diff,
        }


def _histogram(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(edges, values, side="right") - 1
    idx = np.clip(idx, 0, len(edges) - 2)
    return np.bincount(idx, minlength=len(edges) - 1)


def _sector_counts(group, z0, z1, w, X, edges, transform, budget, threads):
    q = BallQuery.sector(group, z0, z1, w, X)
    counts = np.zeros(len(edges) - 1, dtype=np.int64)
    total = 0
    for batch in iter_batches(q, budget=budget, threads=threads):
        counts += _histogram(transform(batch.omega), edges)
        total += len(batch)
    return counts, total


def theorem3_report(group: GroupSpec, z0: Point, z1: Point, w: Point, X: float, bins: int,
                    budget: int = DEFAULT_BUDGET, threads: int = 1) -> AngularReport:
    """Empirical angular histogram at z0 of g*w ordered by distance to z1, against rho."""
    if bins < 2:
        raise ValueError(f"need at least 2 bins, got {bins}")
    edges = np.linspace(0.0, 1.0, bins + 1)
    counts, total = _sector_counts(group, z0, z1, w, X, edges, lambda om: om, budget, threads)
    p = DensityParams(z0, z1)
    rows = []
    for j in range(bins):
        lo, hi = float(edges[j]), float(edges[j + 1])
        rows.append(BinRow(lo, hi, counts[j] / total, integrate_density(p, AngleInterval(lo, hi - lo))))
    return AngularReport(group.name, z0, z1, w, X, total, rows)


def theorem2_report(group: GroupSpec, z0: Point, z1: Point, X: float, bins: int,
                    budget: int = DEFAULT_BUDGET, threads: int = 1) -> AngularReport:
    """Histogram of undirected line angles at z0 of g*z1 ordered by d(z1, g z1), against eta."""
    if bins < 2:
        raise ValueError(f"need at least 2 bins, got {bins}")
    edges = np.linspace(-0.5 * math.pi, 0.5 * math.pi, bins + 1)
    counts, total = _sector_counts(group, z0, z1, z1, X, edges, fold_to_line_angle_array, budget, threads)
    p = DensityParams(z0, z1)
    rows = []
    for j in range(bins):
        lo, hi = float(edges[j]), float(edges[j + 1])
        pred = integrate_eta(p, lo, hi)
        folded = integrate_folded_rho(p, lo, hi)
        rows.append(BinRow(lo, hi, counts[j] / total, pred, {
            "predicted_folded_rho": folded,
            # prediction implied by reading the fold relation without its factor 2
            "predicted_display_relation": 2.0 * folded,
        }))
    return AngularReport(group.name, z0, z1, z1, X, total, rows)
