import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from mobdyn.crossing import PlanarCurve
from mobdyn.geom_core import INF, ONE, ZERO, chordal_dist, ext, gamma_arc_of, to_hom
from mobdyn.homotopy8 import (LoopWord, PunctureCrossingError, accessible_path,
                              build_figure_eight, figure8_prototype, four_transitivity, free_reduce,
                              loop_word, separation_check)
from mobdyn.isotopy import check_isotopy


def circle_word_oracle(c, r, theta0, ccw, tree="inf0"):
    """Hand trace: real-axis crossings of c + r e^{i theta} after theta0, in order."""
    s = -c.imag / r
    if abs(s) >= 1:
        return []
    roots = [math.asin(s), math.pi - math.asin(s)]
    d = 1 if ccw else -1
    # angular distance travelled from theta0 to each root
    hits = sorted(((d * (th - theta0)) % (2 * math.pi), th) for th in roots)
    letters = []
    for _, th in hits:
        x = c.real + r * math.cos(th)
        up = d * math.cos(th) > 0
        arc = gamma_arc_of(x)
        if arc != tree:
            letters.append((arc, 1 if up else -1))
    return free_reduce(letters)


def circle(c, r, theta0, ccw, n=1024):
    d = 1 if ccw else -1
    return PlanarCurve.sample(lambda s: c + r * np.exp(1j * (theta0 + d * 2 * np.pi * s)),
                              0.0, 1.0, n, closed=True)


@given(st.floats(-2, 3), st.floats(-1.5, 1.5), st.floats(0.1, 3), st.floats(0.1, 3.0),
       st.booleans(), st.sampled_from(["inf0", "01", "1inf"]))
@settings(max_examples=80, deadline=None)
def test_circle_words_match_hand_trace(cx, cy, r, theta0, ccw, tree):
    c = complex(cx, cy)
    z = c + r * np.exp(1j * np.linspace(0, 2 * np.pi, 4001))
    assume(np.min(np.abs(z[:, None] - np.array([0, 1])[None, :])) > 0.05)
    assume(abs(abs(cy) - r) > 0.05)
    start = c + r * complex(math.cos(theta0), math.sin(theta0))
    assume(abs(start.imag) > 1e-3)
    w = loop_word(circle(c, r, theta0, ccw), tree=tree)
    assert w.letters == circle_word_oracle(c, r, theta0, ccw, tree)


def test_examples():
    assert len(loop_word(circle(0.5j, 1e-3, 0.0, True))) == 0
    w = loop_word(circle(1, 0.5, math.pi / 2, False))
    assert w.letters == [("1inf", -1), ("01", 1)]


def test_prototype_hand_trace():
    w = loop_word(figure8_prototype(0.5), tree="01")
    # anticlockwise around 1 crosses (1, inf) upward; clockwise around 0 crosses (inf, 0) upward
    assert w.letters == [("1inf", 1), ("inf0", 1)]


def test_reversal_and_rotation():
    P = circle(1, 0.5, math.pi / 2, False).points
    P = np.append(P, P[:1])
    w = loop_word(to_hom(P))
    assert loop_word(to_hom(P[::-1])) == w.inverse()
    for k in (100, 500, 900):
        Q = np.append(P[k:-1], P[:k + 1])
        assert loop_word(to_hom(Q)).cyclically_equal(w)


@given(st.lists(st.tuples(st.sampled_from(["01", "1inf"]), st.sampled_from([1, -1])), max_size=12))
def test_free_reduce(letters):
    w = LoopWord(letters)
    for a, b in zip(w.letters, w.letters[1:]):
        assert not (a[0] == b[0] and a[1] == -b[1])
    assert len(LoopWord(w.letters + w.inverse().letters)) == 0
    assert LoopWord(letters).letters == LoopWord(w.letters).letters


def test_puncture_rejected():
    with pytest.raises(PunctureCrossingError):
        loop_word(circle(0.5, 0.5, 1.0, True))


def test_chi(chi):
    a = chi.audit
    assert a["ok"] and max(a["splice"]) < 1e-8 and max(a["end_to_inf"]) < 0.1
    assert a["near_real_in_01"] and all(x == "01" for x in a["gamma_arcs"])
    assert separation_check(chi, n=100, seed=3)["ok"]


def test_accessible_path(ctx, chi):
    z0 = 0.3 * complex(math.cos(2 * math.pi / 5), math.sin(2 * math.pi / 5))
    w0 = 2 * complex(math.cos(-math.pi / 3), math.sin(-math.pi / 3))
    path = accessible_path(z0, w0, chi, ctx)
    f = path.endpoint
    assert chordal_dist(f(z0), w0) < 1e-6
    for p in (ZERO, ONE, INF):
        assert chordal_dist(f(p), p) < 1e-9
    assert check_isotopy(path, span=(path.t0, path.t1), dt=2e-3)["identity_residual"] < 1e-10


def test_accessible_path_degenerate(ctx, chi):
    path = accessible_path(0.4 + 0.4j, 0.4 + 0.4j, chi, ctx)
    assert chordal_dist(path.endpoint(0.4 + 0.4j), 0.4 + 0.4j) < 1e-6


def test_transitivity_examples(ctx, chi):
    src = [ZERO, ONE, INF, ext(1j)]
    r = four_transitivity(src, src, chi, ctx)
    assert r.residual < 1e-9
    r = four_transitivity(src, [ZERO, ONE, INF, ext(-2j)], chi, ctx)
    assert r.residual < 1e-6
    assert chordal_dist(r.z0, 1j) < 1e-15 and chordal_dist(r.w0, -2j) < 1e-15
    with pytest.raises(ValueError):
        four_transitivity([0, 1, 1, 2], src, chi, ctx)


def test_figure_eight(ctx, chi):
    cert = build_figure_eight(ctx, chi=chi)
    assert cert.ok
    assert max(cert.fixed_residuals.values()) < 1e-6
    proto = loop_word(figure8_prototype(cert.w.re), tree=cert.word.tree)
    assert cert.word == proto and len(cert.word) == 2
    assert cert.seams["phi_closure"] < 1e-6
