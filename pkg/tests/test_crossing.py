import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mobdyn.crossing import (PlanarCurve, TangentialIntersectionError, certify_crossing,
                             circle_image_intersections, crossing_isotopy, curve_intersections,
                             eject_from_gamma, four_point_isotopy, meridian_crossings)
from mobdyn.geom_core import INF, ONE, ZERO, Hemisphere, chordal_dist, hemisphere
from mobdyn.isotopy import check_isotopy, identity_residual


def ellipse(a, b, n=512):
    return PlanarCurve.sample(lambda s: a * np.cos(2 * np.pi * s) + 1j * b * np.sin(2 * np.pi * s),
                              0.0, 1.0, n, closed=True)


def test_ellipse_vs_circle():
    cert = curve_intersections(ellipse(2, 0.5), PlanarCurve.circle(0, 1, 512))
    assert len(cert) == 4
    # 4 cos^2 + sin^2 / 4 = 1 in the ellipse parameter
    assert np.abs(np.cos(2 * np.pi * cert.s1) ** 2 - 0.2).max() < 1e-9
    assert np.abs(np.abs(cert.points) - 1).max() < 1e-9
    assert cert.min_sin > 0.1


def test_refined_points_lie_on_both_curves():
    c1, c2 = ellipse(2, 0.5), PlanarCurve.circle(0.2, 1.1, 300)
    cert = curve_intersections(c1, c2)
    assert np.abs(c1(cert.s1) - cert.points).max() < 1e-9
    assert np.abs(c2(cert.s2) - cert.points).max() < 1e-9


@given(st.floats(0.3, 3), st.floats(-1, 1), st.floats(-1, 1), st.floats(0.3, 3))
@settings(max_examples=40, deadline=None)
def test_two_circles_count(r1, x, y, r2):
    # two circles meet twice exactly when |r1 - r2| < d < r1 + r2
    d = math.hypot(x, y)
    gap = min(abs(d - (r1 + r2)), abs(d - abs(r1 - r2)))
    if gap < 1e-2:
        return
    expect = 2 if abs(r1 - r2) < d < r1 + r2 else 0
    cert = curve_intersections(PlanarCurve.circle(0, r1, 512), PlanarCurve.circle(complex(x, y), r2, 512))
    assert len(cert) == expect


def test_degenerate_cases():
    c = PlanarCurve.circle(0, 1, 512)
    assert len(curve_intersections(c, PlanarCurve.circle(5, 1, 512))) == 0
    with pytest.raises(TangentialIntersectionError):
        curve_intersections(c, PlanarCurve.circle(0, 1, 512))


def test_four_point(ctx):
    k, r0, cert = four_point_isotopy(ctx)
    assert len(cert) == 4
    assert len(circle_image_intersections(ctx.g, r0 / 2)) == 4
    assert identity_residual(k) < 1e-10
    k1 = k.at(1.0)
    for p in (ZERO, ONE, INF):
        assert chordal_dist(k1(p), p) < 1e-10
    s, _ = meridian_crossings(k1)
    assert len(s) == 4
    assert check_isotopy(k)["ok"]


def test_eject(ctx):
    h = eject_from_gamma(0.37, ctx)
    assert identity_residual(h) < 1e-12
    assert abs(h.at(1.0)(0.37).im) > 1e-6
    k, _, _ = four_point_isotopy(ctx)
    if chordal_dist(k.at(1.0)(0.37), k.w0) > 1e-6:
        assert not h.conjugated
    with pytest.raises(ValueError):
        eject_from_gamma(1.0, ctx)


def test_crossing(ctx):
    res = crossing_isotopy(ctx)
    J, zhat = res.J, res.zhat
    assert zhat.im == 0 and 0 < zhat.re < 1
    assert hemisphere(J.at(-1.0)(zhat)) is Hemisphere.minus
    assert hemisphere(J.at(1.0)(zhat)) is Hemisphere.plus
    assert identity_residual(J) < 1e-10
    a = certify_crossing(res)
    assert a["ok"] and a["arcs_agree"]
    assert all(a[k] == 0 for k in a if k.startswith("near_real_outside"))
    assert check_isotopy(J, span=(-1, 1))["ok"]
