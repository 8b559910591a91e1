import math

import pytest
from hypothesis import assume, given, strategies as st

from mobdyn.geom_core import INF, ONE, ZERO, chordal_dist, ext
from mobdyn.mobius import (MobiusClass, MobiusMap, T_01, T_0INF, T_1INF, classify, map_triple,
                           pbar, pole_fixing_map, swap_map, three_point_map)
from mobdyn.saddle_normal import circle_roundness
from mobdyn.isotopy import SphereMap

pts = st.complex_numbers(max_magnitude=50, allow_nan=False, allow_infinity=False)


def test_det_normalized():
    m = MobiusMap(2, 3, 1, 7)
    assert abs(m.a * m.d - m.b * m.c - 1) < 1e-12


def test_apply_examples():
    assert MobiusMap.identity()(2 - 1j) == ext(2 - 1j)
    assert MobiusMap(0, 1, 1, 0)(ZERO).infinite
    assert MobiusMap(2, 1, 1, 1)(INF) == ext(2.0)
    assert MobiusMap(1, 1, 0, 1)(INF).infinite


def test_three_point_examples():
    assert three_point_map(ZERO, ONE, INF).is_identity()
    assert chordal_dist(three_point_map(-1, 0, 1)(1j), 1j) < 1e-14
    assert chordal_dist(three_point_map(1, 2, 3)(2), ONE) < 1e-14


def _cross_ratio(z, a, b, c):
    return (z - a) * (b - c) / ((z - c) * (b - a))


@given(pts, pts, pts, pts)
def test_three_point_is_cross_ratio(a, b, c, z):
    for u, v in ((a, b), (b, c), (a, c), (z, c)):
        assume(abs(u - v) > 1e-3)
    w = three_point_map(a, b, c)(z).z
    assert abs(w - _cross_ratio(z, a, b, c)) <= 1e-8 * (1 + abs(w))


def test_sharp_three_transitivity(rng):
    def triple():
        while True:
            z = rng.normal(size=3) + 1j * rng.normal(size=3)
            if min(abs(z[0] - z[1]), abs(z[1] - z[2]), abs(z[0] - z[2])) > 1e-2:
                return list(z)
    for _ in range(10_000):
        s, d = triple(), triple()
        m = map_triple(s, d)
        for u, v in zip(s, d):
            assert chordal_dist(m(u), v) < 1e-10


@given(pts, pts, pts)
def test_stabilizer_rigidity(a, b, c):
    # any map fixing 0, 1, inf is +-identity
    assume(min(abs(a - b), abs(b - c), abs(a - c)) > 1e-2)
    m = three_point_map(a, b, c)
    f = m.inverse().compose(m)
    assert f.is_identity(1e-9)


def test_pole_fixing_examples():
    assert pole_fixing_map(1, 1).is_identity()
    assert chordal_dist(pbar(2j)(2j), ONE) < 1e-15
    assert chordal_dist(pole_fixing_map(1, 5j)(2), ext(10j)) < 1e-14


@given(st.complex_numbers(min_magnitude=0.1, max_magnitude=10),
       st.complex_numbers(min_magnitude=0.1, max_magnitude=10), st.floats(0.05, 5))
def test_pole_fixing_keeps_circles_round(x, y, r):
    g = SphereMap([pole_fixing_map(x, y)])
    assert abs(circle_roundness(g, r) - 1) < 1e-12


def test_swaps():
    z = 0.3 + 0.8j
    assert chordal_dist(T_0INF(z), ext(1 / z)) < 1e-15
    assert chordal_dist(T_01(z), ext(1 - z)) < 1e-15
    for T, fixed in ((T_0INF, ONE), (T_01, INF), (T_1INF, ZERO)):
        assert T.compose(T).is_identity(1e-12)
        assert chordal_dist(T(fixed), fixed) < 1e-15
    with pytest.raises(ValueError):
        swap_map(ZERO, ZERO)
    with pytest.raises(ValueError):
        swap_map(ZERO, 2.0)


def test_swap_keeps_real_line():
    for T in (T_0INF, T_01, T_1INF):
        for x in (-3.0, 0.25, 0.5, 4.0):
            w = T(x)
            assert w.infinite or w.im == 0.0


def test_classify():
    assert classify(MobiusMap(1, 1, 0, 1)) is MobiusClass.parabolic
    assert classify(MobiusMap(2, 0, 0, 1)) is MobiusClass.hyperbolic
    assert classify(MobiusMap.rotation(math.pi / 3)) is MobiusClass.elliptic
    assert classify(MobiusMap.identity()) is MobiusClass.identity
    assert classify(MobiusMap(2j, 0, 0, 1)) is MobiusClass.loxodromic


def test_sign_ambiguity_equal():
    m = MobiusMap(1, 2, 3, 7)
    assert m == MobiusMap(-m.a, -m.b, -m.c, -m.d)


def test_long_compose_keeps_det():
    m = MobiusMap(1.1, 0.3, -0.2, 0.95)
    acc = MobiusMap.identity()
    for _ in range(500):
        acc = acc.compose(m)
    assert abs(acc.a * acc.d - acc.b * acc.c - 1) < 1e-9


def test_singular_rejected():
    with pytest.raises(ValueError):
        MobiusMap(1, 2, 2, 4)
    with pytest.raises(ValueError):
        three_point_map(1, 1, 2)
