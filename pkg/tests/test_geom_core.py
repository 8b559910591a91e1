import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mobdyn.geom_core import (ARC_01, ARC_1INF, ARC_INF0, INF, ONE, ZERO, Cone, ExtPoint,
                              Hemisphere, axis_angle, chordal_dist, chordal_hom, cone_contains,
                              ext, from_hom, gamma_arc_of, gamma_side, hemisphere, hom_to_complex,
                              stereo, stereo_inv, to_hom)

finite = st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False)


def chordal_oracle(z, w):
    # closed form on the unit sphere
    return 2 * abs(z - w) / math.sqrt((1 + abs(z) ** 2) * (1 + abs(w) ** 2))


def test_poles_and_one():
    assert stereo((0, 0, -1)) == ZERO
    assert stereo((0, 0, 1)) is INF or stereo((0, 0, 1)).infinite
    assert stereo((1, 0, 0)) == ONE
    assert np.allclose(stereo_inv(INF), [0, 0, 1])


def test_stereo_roundtrip(rng):
    v = rng.normal(size=(1000, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    for p in v:
        assert np.abs(stereo_inv(stereo(p)) - p).max() < 1e-12


def test_stereo_rejects_non_unit():
    with pytest.raises(ValueError):
        stereo((1, 1, 1))


def test_chordal_closed_forms():
    assert chordal_dist(ZERO, INF) == pytest.approx(2.0)
    assert chordal_dist(ONE, INF) == pytest.approx(math.sqrt(2), abs=1e-15)
    assert chordal_dist(0.3 + 2j, 0.3 + 2j) == 0.0


@given(finite, finite)
def test_chordal_matches_sphere_distance(z, w):
    d = chordal_dist(z, w)
    assert d == pytest.approx(chordal_oracle(z, w), rel=1e-9, abs=1e-12)
    assert d == pytest.approx(float(np.linalg.norm(stereo_inv(z) - stereo_inv(w))), abs=1e-9)


@given(finite, finite, finite)
def test_chordal_triangle(a, b, c):
    assert chordal_dist(a, c) <= chordal_dist(a, b) + chordal_dist(b, c) + 1e-12


def test_chord_inequality(rng):
    z = rng.normal(size=100_000) + 1j * rng.normal(size=100_000)
    w = rng.normal(size=100_000) + 1j * rng.normal(size=100_000)
    ang = np.abs(np.angle(z / w))
    assert np.all(np.abs(z - w) >= np.minimum(abs(z), abs(w)) * np.sin(ang / 2) - 1e-12)


def test_cone_examples():
    c = Cone(math.pi / 6)
    assert cone_contains(c, 0.5)
    assert not cone_contains(c, complex(math.cos(math.pi / 4), math.sin(math.pi / 4)))
    assert cone_contains(c, -1 + 0.1j)
    with pytest.raises(ValueError):
        Cone(math.pi / 2)
    with pytest.raises(ValueError):
        cone_contains(c, INF)


@given(finite, st.floats(0.01, 1.5))
def test_cone_symmetric(z, a):
    got = cone_contains(a, z)
    assert got == cone_contains(a, -z) == cone_contains(a, z.conjugate())


def test_axis_angle_of_zero():
    assert axis_angle(0j) == 0.0


def test_hemispheres():
    assert hemisphere(1j) is Hemisphere.plus
    assert hemisphere(-3j) is Hemisphere.minus
    assert hemisphere(INF) is Hemisphere.gamma
    assert hemisphere(-2.5) is Hemisphere.gamma


def test_extpoint_rules():
    assert ExtPoint(1.0, 2.0) == ext(1 + 2j)
    assert INF == ext("inf") and INF != ext(1e300)
    with pytest.raises(ValueError):
        ExtPoint(float("nan"), 0.0)
    with pytest.raises(ValueError):
        INF.z


def test_hom_handles_infinity():
    p, q = to_hom([ZERO, INF, ext(3 - 1j)])
    z, inf = hom_to_complex(p, q)
    assert inf.tolist() == [False, True, False]
    back = from_hom(p, q)
    assert back[:2] == [ZERO, INF] and chordal_dist(back[2], 3 - 1j) < 1e-15
    assert chordal_hom(p[1], q[1], *to_hom(1e15))[0] < 1e-14


def test_gamma_side_sign():
    p, q = to_hom([2j, -2j, 5.0, INF])
    s = gamma_side(p, q)
    assert s[0] > 0 > s[1] and s[2] == 0 and s[3] == 0


def test_arcs():
    assert gamma_arc_of(0.5) == "01" and gamma_arc_of(7) == "1inf" and gamma_arc_of(-1) == "inf0"
    assert ARC_01.contains(0.5) and not ARC_01.contains(1.5)
    assert ARC_1INF.contains(4.0) and ARC_INF0.contains(-4.0)
    with pytest.raises(ValueError):
        gamma_arc_of(1.0)
