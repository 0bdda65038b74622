"""Exact enumeration of group elements moving a base point into a hyperbolic ball.

The enumerator walks coprime bottom rows (c, d).  Every coset
``{[[a0 + t*c, b0 + t*d], [c, d]] : t in Z}`` moves the base point along a
horizontal line at height ``Im(base) / |c*base + d|**2``, so membership in the
ball becomes a quadratic inequality in ``t`` with an explicit integer solution
interval.  Work is proportional to the output size.

Output is produced as :class:`OrbitBatch` chunks of numpy arrays in canonical
order (ascending cosh distance, ties broken on ``(a, b, c, d)``).  Chunks are
successive distance shells, so memory stays bounded for large thresholds.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

import numpy as np

from .halfplane import (
    I_POINT,
    TWO_PI,
    NormalizedAngle,
    Point,
    distance,
    wrap_unit,
)

DEFAULT_BUDGET = 50_000_000
# records per distance shell; bounds peak memory of a single batch
SHELL_TARGET = 1_000_000
BOUNDARY_RTOL = 1e-12
# images this close to the viewpoint (in point-pair invariant) count as coincident
_COINCIDENT_U = 1e-24


class BudgetExceeded(RuntimeError):
    """The enumeration would produce more elements than the configured budget."""

    def __init__(self, budget: int):
        super().__init__(f"element budget of {budget} exceeded")
        self.budget = budget


class GroupKind(str, enum.Enum):
    SL2Z = "SL2Z"
    GAMMA = "GammaN"


@dataclass(frozen=True)
class GroupSpec:
    kind: GroupKind
    level: int
    covolume: float
    kappa: int
    contains_minus_identity: bool

    @property
    def name(self) -> str:
        return "SL2Z" if self.kind is GroupKind.SL2Z else f"Gamma({self.level})"

    def contains(self, a, b, c, d):
        """Congruence test; accepts ints or integer arrays."""
        n = self.level
        if n == 1:
            return np.ones(np.broadcast(a, b, c, d).shape, dtype=bool)
        return ((a - 1) % n == 0) & (b % n == 0) & (c % n == 0) & ((d - 1) % n == 0)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "N": self.level}


def make_group(kind, N: int | None = None) -> GroupSpec:
    """Build a group descriptor: ``make_group("SL2Z")`` or ``make_group("GammaN", 3)``."""
    kind = GroupKind(kind) if not isinstance(kind, GroupKind) else kind
    if kind is GroupKind.SL2Z:
        return GroupSpec(kind, 1, math.pi / 3, 2, True)
    if N is None or int(N) != N or N < 1:
        raise ValueError(f"invalid level {N!r} for Gamma(N)")
    N = int(N)
    covolume = math.pi / 3 * N ** 3
    m = N
    p = 2
    while p * p <= m:
        if m % p == 0:
            covolume *= 1 - p ** -2
            while m % p == 0:
                m //= p
        p += 1
    if m > 1:
        covolume *= 1 - m ** -2
    minus_i = N <= 2
    if not minus_i:
        # the index formula counts SL2(Z) cosets; the quotient area is the
        # PSL2(Z) index times pi/3, and -I is missing from Gamma(N) for N >= 3
        covolume /= 2
    return GroupSpec(kind, N, covolume, 2 if minus_i else 1, minus_i)


@dataclass(frozen=True)
class GroupElement:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        for v in (self.a, self.b, self.c, self.d):
            if int(v) != v:
                raise ValueError(f"non-integer entry {v!r}")
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError(f"determinant of {self.as_tuple()} is not 1")

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    def __neg__(self):
        return GroupElement(-self.a, -self.b, -self.c, -self.d)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )


@dataclass(frozen=True)
class OrbitRecord:
    element: GroupElement
    image: Point
    cosh_dist: float
    omega: NormalizedAngle


@dataclass(frozen=True)
class BallQuery:
    """Elements g with cosh d(center, g*base) <= cosh_threshold; angles seen from viewpoint."""

    group: GroupSpec
    center: Point
    base: Point
    viewpoint: Point
    cosh_threshold: float

    def __post_init__(self):
        if not math.isfinite(self.cosh_threshold) or self.cosh_threshold < 1.0:
            raise ValueError(f"cosh threshold must be >= 1, got {self.cosh_threshold}")
        for p in (self.center, self.base, self.viewpoint):
            if not isinstance(p, Point):
                raise TypeError(f"expected Point, got {type(p).__name__}")

    @classmethod
    def lattice(cls, group: GroupSpec, z0: Point, z1: Point, X: float) -> "BallQuery":
        """Counting d(z0, g z1) with angles at z0."""
        return cls(group, z0, z1, z0, X)

    @classmethod
    def sector(cls, group: GroupSpec, z0: Point, z1: Point, w: Point, X: float) -> "BallQuery":
        """Counting d(z1, g w) with angles at z0."""
        return cls(group, z1, w, z0, X)

    @property
    def radius(self) -> float:
        return math.acosh(self.cosh_threshold)

    def with_threshold(self, X: float) -> "BallQuery":
        return BallQuery(self.group, self.center, self.base, self.viewpoint, X)

    @property
    def integer_distances(self) -> bool:
        return self.center == I_POINT and self.base == I_POINT


@dataclass
class OrbitBatch:
    """Column arrays for a run of orbit records."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    x: np.ndarray
    y: np.ndarray
    cosh_dist: np.ndarray
    omega: np.ndarray

    def __len__(self):
        return len(self.a)

    @classmethod
    def empty(cls) -> "OrbitBatch":
        i = np.empty(0, dtype=np.int64)
        f = np.empty(0, dtype=np.float64)
        return cls(i, i, i, i, f, f, f, f)

    @classmethod
    def concat(cls, batches: Iterable["OrbitBatch"]) -> "OrbitBatch":
        batches = list(batches)
        if not batches:
            return cls.empty()
        return cls(*(np.concatenate([getattr(b, f) for b in batches]) for f in _FIELDS))

    def take(self, idx) -> "OrbitBatch":
        return OrbitBatch(*(getattr(self, f)[idx] for f in _FIELDS))

    def sorted(self) -> "OrbitBatch":
        return self.take(np.lexsort((self.d, self.c, self.b, self.a, self.cosh_dist)))

    def elements(self) -> set[tuple[int, int, int, int]]:
        return set(zip(self.a.tolist(), self.b.tolist(), self.c.tolist(), self.d.tolist()))

    def records(self) -> Iterator[OrbitRecord]:
        for a, b, c, d, x, y, ch, om in zip(*(getattr(self, f).tolist() for f in _FIELDS)):
            yield OrbitRecord(GroupElement(a, b, c, d), Point(x, y), ch, NormalizedAngle(om))


_FIELDS = ("a", "b", "c", "d", "x", "y", "cosh_dist", "omega")


# --------------------------------------------------------------------------
# shared per-element geometry; enumerator and oracle must agree bit for bit


def orbit_geometry(q: BallQuery, a, b, c, d):
    """Image coordinates, cosh distance to the center and angle at the viewpoint."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    c = np.asarray(c, dtype=np.int64)
    d = np.asarray(d, dtype=np.int64)
    xb, yb = q.base.x, q.base.y
    if xb == 0.0:
        den = (d * d).astype(float) + (c * c).astype(float) * (yb * yb)
        num = (a * c).astype(float) * (yb * yb) + (b * d).astype(float)
    else:
        cx = c * xb + d
        den = cx * cx + (c * yb) ** 2
        num = (a * c).astype(float) * (xb * xb + yb * yb) + (a * d + b * c).astype(float) * xb + (b * d).astype(float)
    x = num / den
    y = yb / den

    if q.integer_distances:
        norm = a * a + b * b + c * c + d * d
        cosh = norm.astype(float) * 0.5
    else:
        xc, yc = q.center.x, q.center.y
        cosh = 1.0 + ((x - xc) ** 2 + (y - yc) ** 2) / (2.0 * y * yc)

    v = q.viewpoint
    if v == I_POINT and q.base == I_POINT:
        # exact integer form of the Cayley-transform angle of g*i
        theta = np.arctan2((-2 * (a * c + b * d)).astype(float),
                           (a * a + b * b - c * c - d * d).astype(float))
        omega = wrap_unit(theta / TWO_PI)
    else:
        X = (x - v.x) / v.y
        Y = y / v.y
        theta = np.arctan2(-2.0 * X, X * X + (Y - 1.0) * (Y + 1.0))
        omega = wrap_unit(theta / TWO_PI)
        coincident = (X * X + (Y - 1.0) ** 2) / (4.0 * Y) < _COINCIDENT_U
        omega[coincident] = 0.0
    return x, y, cosh, omega


def inside_mask(q: BallQuery, X: float, a, b, c, d, cosh) -> np.ndarray:
    """Boundary-inclusive membership test shared by every enumeration path."""
    if q.integer_distances:
        norm = a * a + b * b + c * c + d * d
        return norm.astype(float) <= 2.0 * X
    return cosh <= X * (1.0 + BOUNDARY_RTOL)


def _make_batch(q: BallQuery, a, b, c, d) -> OrbitBatch:
    x, y, cosh, omega = orbit_geometry(q, a, b, c, d)
    return OrbitBatch(a, b, c, d, x, y, cosh, omega)


# --------------------------------------------------------------------------
# coprime bottom rows


def _ext_gcd(c: np.ndarray, d: np.ndarray):
    """Vectorised extended Euclid: returns (g, s, t) with s*d + t*c = g."""
    old_r, r = d.copy(), c.copy()
    old_s, s = np.ones_like(d), np.zeros_like(d)
    old_t, t = np.zeros_like(d), np.ones_like(d)
    while True:
        nz = r != 0
        if not nz.any():
            break
        qt = np.zeros_like(r)
        qt[nz] = old_r[nz] // r[nz]
        old_r, r = np.where(nz, r, old_r), np.where(nz, old_r - qt * r, r)
        old_s, s = np.where(nz, s, old_s), np.where(nz, old_s - qt * s, s)
        old_t, t = np.where(nz, t, old_t), np.where(nz, old_t - qt * t, t)
    return old_r, old_s, old_t


@dataclass
class _RowTable:
    """Coprime bottom rows with a completing top row and the coset's horizontal line."""

    c: np.ndarray
    d: np.ndarray
    a0: np.ndarray
    b0: np.ndarray
    u0: np.ndarray  # Re(g0 * base)
    v: np.ndarray  # Im(g * base), shared by the coset
    residue: np.ndarray  # admissible t mod level

    def __len__(self):
        return len(self.c)

    def take(self, idx) -> "_RowTable":
        return _RowTable(*(getattr(self, f)[idx] for f in ("c", "d", "a0", "b0", "u0", "v", "residue")))


def _row_table(q: BallQuery, X: float) -> _RowTable:
    n = q.group.level
    xb, yb = q.base.x, q.base.y
    yc = q.center.y
    Xw = X * (1.0 + 1e-10)
    # Im(g*base) >= yc * exp(-R) bounds |c*base + d|^2
    bound = yb * (Xw + math.sqrt(Xw * Xw - 1.0)) / yc * (1.0 + 1e-9)
    cmax = int(math.floor(math.sqrt(bound) / yb))
    cs = np.arange(-(cmax // n) * n, cmax + 1, n, dtype=np.int64)
    half = np.sqrt(np.maximum(bound - (cs * yb) ** 2, 0.0))
    lo = np.ceil(-cs * xb - half).astype(np.int64)
    hi = np.floor(-cs * xb + half).astype(np.int64)
    if n > 1:
        lo = lo + (1 - lo) % n  # first d >= lo with d = 1 mod n
    counts = np.where(hi >= lo, (hi - lo) // n + 1, 0)
    total = int(counts.sum())
    c = np.repeat(cs, counts)
    starts = np.repeat(lo, counts)
    offsets = np.arange(total, dtype=np.int64) - np.repeat(np.cumsum(counts) - counts, counts)
    d = starts + offsets * n
    keep = np.gcd(c, d) == 1
    c, d = c[keep], d[keep]

    g, s, t = _ext_gcd(c, d)
    a0 = s * g
    b0 = -t * g
    den = (c * xb + d) ** 2 + (c * yb) ** 2
    u0 = ((a0 * c).astype(float) * (xb * xb + yb * yb) + (a0 * d + b0 * c).astype(float) * xb
          + (b0 * d).astype(float)) / den
    v = yb / den
    # in Gamma(n) rows satisfy c = 0, d = 1 mod n, so a = 1 automatically and b = 0 needs t = -b0
    residue = (-b0) % n
    return _RowTable(c, d, a0, b0, u0, v, residue)


def _t_interval(rows: _RowTable, xc: float, yc: float, X: float, widen: bool):
    """Integer t-range of each coset meeting the ball of cosh radius X.

    With ``widen`` the range is a superset of the true one, otherwise a subset.
    """
    sign = 1.0 if widen else -1.0
    Xe = X * (1.0 + sign * 1e-10)
    disc = 2.0 * rows.v * yc * (Xe - 1.0) - (rows.v - yc) ** 2
    ok = disc >= 0
    root = np.sqrt(np.where(ok, disc, 0.0))
    mid = xc - rows.u0
    eps = 1e-7 * (1.0 + np.abs(mid) + root)
    lo = np.ceil(mid - root - sign * eps)
    hi = np.floor(mid + root + sign * eps)
    lo = np.where(ok, lo, 1.0).astype(np.int64)
    hi = np.where(ok, hi, 0.0).astype(np.int64)
    return lo, hi


def _expand(rows: _RowTable, lo: np.ndarray, hi: np.ndarray, n: int):
    """All (a, b, c, d) with t in [lo, hi] and t = residue mod n."""
    if n > 1:
        lo = lo + (rows.residue - lo) % n
    counts = np.where(hi >= lo, (hi - lo) // n + 1, 0)
    total = int(counts.sum())
    if total == 0:
        e = np.empty(0, dtype=np.int64)
        return e, e, e, e
    idx = np.repeat(np.arange(len(rows)), counts)
    offsets = np.arange(total, dtype=np.int64) - np.repeat(np.cumsum(counts) - counts, counts)
    t = lo[idx] + offsets * n
    c = rows.c[idx]
    d = rows.d[idx]
    return rows.a0[idx] + t * c, rows.b0[idx] + t * d, c, d


def _shell_part(q: BallQuery, rows: _RowTable, lo_X: float | None, hi_X: float) -> OrbitBatch:
    n = q.group.level
    xc, yc = q.center.x, q.center.y
    t_lo, t_hi = _t_interval(rows, xc, yc, hi_X, widen=True)
    if lo_X is None:
        segments = [(t_lo, t_hi)]
    else:
        # cosets' t-values strictly inside the previous shell are skipped
        in_lo, in_hi = _t_interval(rows, xc, yc, lo_X, widen=False)
        hollow = in_hi >= in_lo
        segments = [
            (t_lo, np.where(hollow, np.minimum(in_lo - 1, t_hi), t_hi)),
            (np.where(hollow, np.maximum(in_hi + 1, t_lo), t_hi + 1), t_hi),
        ]
    parts = []
    for lo, hi in segments:
        a, b, c, d = _expand(rows, lo, hi, n)
        if len(a) == 0:
            continue
        x, y, cosh, omega = orbit_geometry(q, a, b, c, d)
        keep = inside_mask(q, hi_X, a, b, c, d, cosh)
        if lo_X is not None:
            keep &= ~inside_mask(q, lo_X, a, b, c, d, cosh)
        parts.append(OrbitBatch(a[keep], b[keep], c[keep], d[keep], x[keep], y[keep], cosh[keep], omega[keep]))
    return OrbitBatch.concat(parts)


def main_term(q: BallQuery) -> float:
    """kappa * 2*pi * X / vol, the leading term of the ball count."""
    g = q.group
    return g.kappa * TWO_PI * q.cosh_threshold / g.covolume


def shell_thresholds(q: BallQuery, target: int = SHELL_TARGET) -> list[float]:
    X = q.cosh_threshold
    k = max(1, math.ceil(main_term(q) / target))
    return [1.0 + (X - 1.0) * j / k for j in range(1, k)] + [X]


def iter_batches(q: BallQuery, budget: int = DEFAULT_BUDGET, threads: int = 1,
                 shell_target: int = SHELL_TARGET) -> Iterator[OrbitBatch]:
    """Stream the ball in canonical order as a sequence of distance shells.

    ``threads`` only changes how the work inside a shell is split; each shell
    is sorted before it is yielded, so output does not depend on it.
    """
    if budget < 1:
        raise BudgetExceeded(budget)
    rows = _row_table(q, q.cosh_threshold)
    # cosets sorted by height; a shell of radius X only needs the rows reaching it
    order = np.argsort(-rows.v, kind="stable")
    rows = rows.take(order)
    yc = q.center.y
    workers = max(1, threads)
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    total = 0
    prev = None
    try:
        for X in shell_thresholds(q, shell_target):
            Xw = X * (1.0 + 1e-10)
            vmin = yc / (Xw + math.sqrt(Xw * Xw - 1.0)) * (1.0 - 1e-9)
            m = int(np.searchsorted(-rows.v, -vmin, side="right"))
            active = rows.take(slice(0, m))
            if pool is None or m < 2 * workers:
                batch = _shell_part(q, active, prev, X)
            else:
                cuts = np.linspace(0, m, workers + 1).astype(int)
                chunks = [active.take(slice(cuts[i], cuts[i + 1])) for i in range(workers)]
                batch = OrbitBatch.concat(pool.map(lambda r: _shell_part(q, r, prev, X), chunks))
            batch = batch.sorted()
            total += len(batch)
            if total > budget:
                raise BudgetExceeded(budget)
            prev = X
            if len(batch):
                yield batch
    finally:
        if pool is not None:
            pool.shutdown()


def enumerate_ball(q: BallQuery, budget: int = DEFAULT_BUDGET, threads: int = 1) -> Iterator[OrbitRecord]:
    """Every g in the group with cosh d(center, g*base) <= X, in canonical order."""
    for batch in iter_batches(q, budget=budget, threads=threads):
        yield from batch.records()


def collect(q: BallQuery, budget: int = DEFAULT_BUDGET, threads: int = 1) -> OrbitBatch:
    return OrbitBatch.concat(iter_batches(q, budget=budget, threads=threads))


def count_ball(q: BallQuery, budget: int = DEFAULT_BUDGET, threads: int = 1) -> int:
    return sum(len(b) for b in iter_batches(q, budget=budget, threads=threads))


# --------------------------------------------------------------------------
# brute-force oracle


def sufficient_entry_bound(q: BallQuery) -> int:
    """Entry bound guaranteed to contain every ball element.

    Uses a^2 + b^2 + c^2 + d^2 = 2 cosh d(i, g i) and the triangle inequality.
    """
    R = math.acosh(q.cosh_threshold * (1.0 + BOUNDARY_RTOL))
    reach = R + distance(I_POINT, q.center) + distance(I_POINT, q.base)
    return int(math.floor(math.sqrt(2.0 * math.cosh(reach)))) + 1


def brute_force_batch(q: BallQuery, entry_bound: int | None = None,
                      budget: int = DEFAULT_BUDGET) -> OrbitBatch:
    """Exhaustive scan of all integer quadruples with entries bounded by ``entry_bound``."""
    if budget < 1:
        raise BudgetExceeded(budget)
    B = sufficient_entry_bound(q) if entry_bound is None else int(entry_bound)
    rng = np.arange(-B, B + 1, dtype=np.int64)
    bb, cc, dd = (g.ravel() for g in np.meshgrid(rng, rng, rng, indexing="ij"))
    parts = []
    found = 0
    for a in rng.tolist():
        det = a * dd - bb * cc == 1
        b, c, d = bb[det], cc[det], dd[det]
        a_arr = np.full(len(b), a, dtype=np.int64)
        ok = q.group.contains(a_arr, b, c, d)
        a_arr, b, c, d = a_arr[ok], b[ok], c[ok], d[ok]
        _, _, cosh, _ = orbit_geometry(q, a_arr, b, c, d)
        keep = inside_mask(q, q.cosh_threshold, a_arr, b, c, d, cosh)
        if keep.any():
            found += int(keep.sum())
            if found > budget:
                raise BudgetExceeded(budget)
            parts.append(_make_batch(q, a_arr[keep], b[keep], c[keep], d[keep]))
    return OrbitBatch.concat(parts).sorted()


def brute_force_ball(q: BallQuery, entry_bound: int | None = None,
                     budget: int = DEFAULT_BUDGET) -> Iterator[OrbitRecord]:
    yield from brute_force_batch(q, entry_bound, budget).records()


# --------------------------------------------------------------------------


def _radius_values(radius_fn: Callable, omega: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(radius_fn(omega), dtype=float)
        if vals.shape == omega.shape:
            return vals
    except (TypeError, ValueError):
        pass
    return np.array([float(radius_fn(NormalizedAngle(w))) for w in omega.tolist()], dtype=float)


def iter_angular_radius_batches(q: BallQuery, radius_fn: Callable, budget: int = DEFAULT_BUDGET,
                                threads: int = 1) -> Iterator[OrbitBatch]:
    """Elements with cosh d(center, g*base) <= radius_fn(omega(g)).

    ``q.cosh_threshold`` must bound radius_fn from above.
    """
    for batch in iter_batches(q, budget=budget, threads=threads):
        limit = _radius_values(radius_fn, batch.omega)
        if np.any(limit > q.cosh_threshold * (1.0 + BOUNDARY_RTOL)):
            raise ValueError("radius_fn exceeds the query's cosh threshold")
        if q.integer_distances:
            norm = batch.a * batch.a + batch.b * batch.b + batch.c * batch.c + batch.d * batch.d
            keep = norm.astype(float) <= 2.0 * limit
        else:
            keep = batch.cosh_dist <= limit * (1.0 + BOUNDARY_RTOL)
        if keep.any():
            yield batch.take(keep)


def enumerate_with_angular_radius(q: BallQuery, radius_fn: Callable, budget: int = DEFAULT_BUDGET,
                                  threads: int = 1) -> Iterator[OrbitRecord]:
    for batch in iter_angular_radius_batches(q, radius_fn, budget, threads):
        yield from batch.records()
