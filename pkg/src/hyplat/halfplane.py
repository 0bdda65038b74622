"""Geometry of the upper half-plane.

Points, Moebius action, point-pair invariant, geodesic polar coordinates
about ``i`` and the normalized angle convention used throughout the package:
an angle at a point ``z0`` is measured from the upward vertical geodesic,
positive toward decreasing real part, divided by ``2*pi`` and reduced mod 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi


class GeometryError(ValueError):
    """Raised for invalid points or degenerate geometric configurations."""


@dataclass(frozen=True)
class Point:
    """A point x + iy of the upper half-plane."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite coordinates ({self.x}, {self.y})")
        if self.y <= 0:
            raise GeometryError(f"point ({self.x}, {self.y}) is not in the upper half-plane")

    @classmethod
    def from_complex(cls, z: complex) -> "Point":
        return cls(z.real, z.imag)

    def __complex__(self):
        return complex(self.x, self.y)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


I_POINT = Point(0.0, 1.0)


@dataclass(frozen=True)
class GeodesicPolar:
    """Geodesic polar coordinates (r, phi) about i, phi in [0, pi)."""

    r: float
    phi: float

    def __post_init__(self):
        if self.r < 0:
            raise GeometryError(f"negative radius {self.r}")
        if not 0.0 <= self.phi < math.pi:
            raise GeometryError(f"angle {self.phi} outside [0, pi)")


class NormalizedAngle(float):
    """A point of R/Z stored by its representative in [0, 1)."""

    def __new__(cls, value: float = 0.0):
        return super().__new__(cls, wrap_unit(float(value)))

    def __add__(self, other):
        return NormalizedAngle(float(self) + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        return NormalizedAngle(float(self) - float(other))

    def __rsub__(self, other):
        return NormalizedAngle(float(other) - float(self))

    def __neg__(self):
        return NormalizedAngle(-float(self))

    def __repr__(self):
        return f"NormalizedAngle({float(self)!r})"


def wrap_unit(omega):
    """Reduce to [0, 1); works on floats and numpy arrays.

    ``x % 1.0`` can round to exactly 1.0 for tiny negative x, hence the clamp.
    """
    w = omega % 1.0
    if isinstance(w, np.ndarray):
        w[w >= 1.0] = 0.0
        return w
    return 0.0 if w >= 1.0 else w


class Mobius(NamedTuple):
    """Real 2x2 matrix [[a, b], [c, d]] acting by fractional linear maps."""

    a: float
    b: float
    c: float
    d: float


def mobius_apply(g, z: Point) -> Point:
    """Return g*z = (az + b)/(cz + d) for any g exposing entries a, b, c, d."""
    w = complex(z)
    return Point.from_complex((g.a * w + g.b) / (g.c * w + g.d))


def conjugator(z0: Point) -> Mobius:
    """The upper-triangular element sending z0 to i."""
    s = math.sqrt(z0.y)
    return Mobius(1.0 / s, -z0.x / s, 0.0, s)


def rotation(phi: float) -> Mobius:
    """Rotation k(phi) = [[cos, sin], [-sin, cos]] about i."""
    c, s = math.cos(phi), math.sin(phi)
    return Mobius(c, s, -s, c)


def point_pair_invariant(z: Point, w: Point) -> float:
    """u(z, w) = |z - w|^2 / (4 Im z Im w)."""
    dx = z.x - w.x
    dy = z.y - w.y
    return (dx * dx + dy * dy) / (4.0 * z.y * w.y)


def cosh_distance(z: Point, w: Point) -> float:
    """cosh of the hyperbolic distance, 1 + 2u(z, w)."""
    return 1.0 + 2.0 * point_pair_invariant(z, w)


def distance(z: Point, w: Point) -> float:
    # sinh(d/2) = |z - w| / (2 sqrt(Im z Im w)); well conditioned for all d
    return 2.0 * math.asinh(math.hypot(z.x - w.x, z.y - w.y) / (2.0 * math.sqrt(z.y * w.y)))


def from_polar(p: GeodesicPolar) -> Point:
    """k(phi) applied to exp(-r) i, written out to avoid cancellation."""
    c, s = math.cos(p.phi), math.sin(p.phi)
    e = math.exp(-p.r)
    den = c * c + s * s * e * e
    # -expm1(-2r) = 1 - e^{-2r} without loss for small r
    return Point(s * c * -math.expm1(-2.0 * p.r) / den, e / den)


def _disk_angle(x: float, y: float) -> float:
    """Argument of the Cayley image (z - i)/(z + i): 0 is up, positive is left."""
    return math.atan2(-2.0 * x, x * x + (y - 1.0) * (y + 1.0))


def to_polar(z: Point) -> GeodesicPolar:
    """Inverse of :func:`from_polar`; phi = 0 at z = i by convention."""
    r = distance(z, I_POINT)
    if r == 0.0:
        return GeodesicPolar(0.0, 0.0)
    theta = _disk_angle(z.x, z.y)
    phi = (0.5 * theta + 0.5 * math.pi) % math.pi
    if phi >= math.pi:
        phi = 0.0
    return GeodesicPolar(r, phi)


def normalized_angle(z0: Point, target: Point) -> NormalizedAngle:
    """Angle at z0 from the upward vertical to the ray toward ``target``, over 2*pi.

    Raises GeometryError when target coincides with z0.
    """
    if target.x == z0.x and target.y == z0.y:
        raise GeometryError("angle undefined: target coincides with the viewpoint")
    # conjugate z0 to i, then read the angle off the Cayley transform
    x = (target.x - z0.x) / z0.y
    y = target.y / z0.y
    return NormalizedAngle(_disk_angle(x, y) / TWO_PI)


def fold_to_line_angle(omega: float) -> float:
    """Undirected line angle: 2*pi*omega reduced mod pi into [-pi/2, pi/2)."""
    # reduce 2*omega mod 1 into [-1/2, 1/2) before scaling, so omega and
    # omega + 1/2 give identical results
    v = (2.0 * float(omega) + 0.5) % 1.0
    if v >= 1.0:
        v = 0.0
    return math.pi * (v - 0.5)


def fold_to_line_angle_array(omega: np.ndarray) -> np.ndarray:
    v = np.mod(2.0 * np.asarray(omega, dtype=float) + 0.5, 1.0)
    v[v >= 1.0] = 0.0
    return math.pi * (v - 0.5)
