import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

import oracles
from hyplat.halfplane import (
    I_POINT,
    GeodesicPolar,
    GeometryError,
    Mobius,
    NormalizedAngle,
    Point,
    conjugator,
    cosh_distance,
    distance,
    fold_to_line_angle,
    fold_to_line_angle_array,
    from_polar,
    mobius_apply,
    normalized_angle,
    point_pair_invariant,
    rotation,
    to_polar,
    wrap_unit,
)

coord = st.floats(-5, 5, allow_nan=False)
height = st.floats(0.05, 20, allow_nan=False)
points = st.builds(Point, coord, height)


@st.composite
def sl2z(draw):
    """Random products of the generators S and T^k."""
    m = np.eye(2, dtype=np.int64)
    for _ in range(draw(st.integers(0, 4))):
        k = draw(st.integers(-3, 3))
        m = m @ np.array([[1, k], [0, 1]]) @ np.array([[0, -1], [1, 0]])
    return Mobius(*(int(v) for v in m.ravel()))


def test_point_rejects_lower_half_plane():
    with pytest.raises(GeometryError):
        Point(0.0, 0.0)
    with pytest.raises(GeometryError):
        Point(1.0, -2.0)
    with pytest.raises(GeometryError):
        Point(float("nan"), 1.0)


def test_known_distances():
    assert cosh_distance(I_POINT, Point(0, 2)) == pytest.approx(1.25)
    assert distance(I_POINT, Point(0, math.e)) == pytest.approx(1.0, rel=1e-15)
    assert point_pair_invariant(I_POINT, I_POINT) == 0.0


def test_distance_small_and_large():
    # asinh form keeps relative accuracy where acosh(1 + tiny) does not
    z = Point(0.0, 1.0 + 1e-12)
    assert distance(I_POINT, z) == pytest.approx(1e-12, rel=1e-6)
    assert distance(I_POINT, Point(0.0, math.exp(-30))) == pytest.approx(30.0, rel=1e-14)


@given(points, points)
def test_distance_symmetric_and_consistent(z, w):
    assert distance(z, w) == pytest.approx(distance(w, z), rel=1e-12, abs=1e-15)
    assert math.cosh(distance(z, w)) == pytest.approx(cosh_distance(z, w), rel=1e-9)


@given(sl2z(), points, points)
def test_distance_invariant_under_modular_group(g, z, w):
    gz, gw = mobius_apply(g, z), mobius_apply(g, w)
    assert cosh_distance(gz, gw) == pytest.approx(cosh_distance(z, w), rel=1e-7)


@given(points)
def test_conjugator_sends_point_to_i(z):
    c = conjugator(z)
    img = mobius_apply(c, z)
    assert img.x == pytest.approx(0.0, abs=1e-12)
    assert img.y == pytest.approx(1.0, rel=1e-12)


@given(st.floats(0, 15), st.floats(0, math.pi, exclude_max=True))
def test_polar_round_trip(r, phi):
    z = from_polar(GeodesicPolar(r, phi))
    back = to_polar(z)
    assert back.r == pytest.approx(r, rel=1e-10, abs=1e-12)
    if r > 1e-6:
        gap = abs(back.phi - phi)
        assert min(gap, math.pi - gap) < 1e-8


@given(points)
def test_polar_matches_disk_model(z):
    assume(distance(z, I_POINT) > 1e-6)
    r, phi = oracles.disk_polar(complex(z))
    p = to_polar(z)
    assert p.r == pytest.approx(r, rel=1e-8)
    gap = abs(p.phi - phi)
    assert min(gap, math.pi - gap) < 1e-8


def test_polar_frozen_values():
    # phi = 0 points straight down: exp(-r) i
    down = to_polar(Point(0, math.exp(-2)))
    assert down.r == pytest.approx(2.0) and down.phi == 0.0
    up = to_polar(Point(0, math.exp(2)))
    assert up.r == pytest.approx(2.0) and up.phi == pytest.approx(math.pi / 2)
    assert to_polar(I_POINT) == GeodesicPolar(0.0, 0.0)


def test_normalized_angle_orientation():
    assert normalized_angle(I_POINT, Point(0, 2)) == 0.0
    # Cayley image of -1 + i is (-1)/(-1 + 2i); its argument from -1 is atan2(2, 1)
    assert normalized_angle(I_POINT, Point(-1, 1)) == pytest.approx(math.atan2(2, 1) / (2 * math.pi), rel=1e-14)
    # straight left at i is a quarter turn, straight down is a half turn
    left = normalized_angle(I_POINT, mobius_apply(rotation(math.pi / 4), Point(0, 2)))
    assert left == pytest.approx(0.25)
    assert normalized_angle(I_POINT, Point(0, 0.5)) == pytest.approx(0.5)
    assert normalized_angle(I_POINT, Point(1, 1)) > 0.5


def test_normalized_angle_coincident():
    with pytest.raises(GeometryError):
        normalized_angle(Point(1, 2), Point(1, 2))


@given(points, st.floats(-math.pi, math.pi))
def test_rotation_shifts_angle(z, phi):
    # k(phi) fixes i and turns tangent vectors there by 2*phi
    assume(distance(z, I_POINT) > 1e-3)
    before = normalized_angle(I_POINT, z)
    after = normalized_angle(I_POINT, mobius_apply(rotation(phi), z))
    gap = (after - before - phi / math.pi) % 1.0
    assert min(gap, 1 - gap) < 1e-8


@given(points, points, st.floats(0.1, 10), coord)
def test_angle_invariant_under_affine_maps(z0, z, scale, shift):
    assume(distance(z0, z) > 1e-4)
    g = Mobius(math.sqrt(scale), shift / math.sqrt(scale), 0.0, 1.0 / math.sqrt(scale))
    a = normalized_angle(z0, z)
    b = normalized_angle(mobius_apply(g, z0), mobius_apply(g, z))
    gap = abs(a - b)
    assert min(gap, 1 - gap) < 1e-7


def test_wrap_unit_never_returns_one():
    assert wrap_unit(-1e-18) == 0.0
    arr = wrap_unit(np.array([-1e-18, 0.25, 1.0, 3.5]))
    assert arr.tolist() == [0.0, 0.25, 0.0, 0.5]
    assert NormalizedAngle(0.75) + 0.5 == 0.25
    assert -NormalizedAngle(0.25) == 0.75


@given(st.floats(0, 1, exclude_max=True))
def test_fold_identifies_opposite_directions(w):
    a = fold_to_line_angle(w)
    assert -math.pi / 2 <= a < math.pi / 2
    # w + 0.5 is itself rounded, so agreement is to rounding only
    gap = (fold_to_line_angle(w + 0.5) - a) % math.pi
    assert min(gap, math.pi - gap) < 1e-12
    assert fold_to_line_angle_array(np.array([w]))[0] == a


def test_fold_frozen_values():
    assert fold_to_line_angle(0.0) == 0.0
    assert fold_to_line_angle(0.125) == pytest.approx(math.pi / 4)
    assert fold_to_line_angle(0.25) == -math.pi / 2
    assert fold_to_line_angle(0.75) == -math.pi / 2
