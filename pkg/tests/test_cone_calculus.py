import math

import numpy as np
import pytest

from mobdyn.cone_calculus import (EscapeCapExceeded, audit_cone_constants, choose_alpha,
                                  escape_time, escape_times, find_cone_constants, find_tau_delta,
                                  stable_manifold_angle)
from mobdyn.isotopy import FuncIsotopy, LinearMap, SphereMap, identity_isotopy
from mobdyn.saddle_normal import rot

SADDLE = SphereMap([LinearMap(np.diag([0.5, 2.0]))])


def diag_isotopy():
    return FuncIsotopy(lambda t: SphereMap([LinearMap(np.diag([0.5 ** t, 2.0 ** t]))]), 0.0, 1.0)


def test_escape_linear_powers():
    rho0 = 0.4
    assert escape_time(SADDLE, 1j * rho0 / 2, rho0).n == 1
    for k in range(1, 8):
        assert escape_time(SADDLE, 1j * rho0 / 2 ** k, rho0).n == k


def test_escape_doubling_drops_one():
    rho0 = 1.0
    z = 1e-3j
    n = [int(escape_times(SADDLE, [z * 2 ** j], rho0)[0]) for j in range(9)]
    assert all(a - b == 1 for a, b in zip(n, n[1:]))


def test_stable_orbit_never_escapes():
    with pytest.raises(EscapeCapExceeded):
        escape_time(SADDLE, 0.1, 1.0)
    with pytest.raises(ValueError):
        escape_time(SADDLE, 2.0, 1.0)


def test_linear_y_axis_never_enters_cone():
    g = SADDLE
    for y in (0.01, 0.1, 0.3):
        w = g(1j * y)
        assert abs(w.re) < 1e-15


def test_tau_delta_linear_uncapped():
    tau, delta = find_tau_delta(SADDLE, math.pi / 4, cap=1.0)
    assert delta == 1.0 and tau > 0


def test_tau_delta_model(ctx):
    tau, delta = find_tau_delta(ctx.g, math.pi / 4)
    assert 0 < tau < math.pi / 4 and delta > 0


def test_stable_angle_linear():
    assert abs(stable_manifold_angle(SADDLE, 0.1, 0.5, lam=0.5)) < 1e-12


def test_stable_angle_rotated_saddle():
    R = LinearMap(rot(0.1))
    g = SphereMap([R.inverse(), LinearMap(np.diag([0.5, 2.0])), R])
    assert stable_manifold_angle(g, 0.1, 0.5, lam=0.5) == pytest.approx(0.1, abs=1e-6)


def test_constant_isotopy_cones():
    c = find_cone_constants(identity_isotopy(), math.pi / 4, with_tau_delta=False)
    assert c.rho == 1.0 and 0 < c.beta_minus < c.beta_plus < c.alpha


def test_linear_isotopy_cones():
    f = diag_isotopy()
    c = find_cone_constants(f, math.pi / 4, with_tau_delta=False)
    assert c.rho == 1.0
    assert audit_cone_constants(f, c, seed=5)["ok"]


def test_model_cones_reaudit(ctx):
    c = ctx.cone_constants(math.pi / 6)
    a = audit_cone_constants(ctx.ext, c, seed=99)
    assert a["interior_violations"] == 0 and a["ok"]
    s = ctx.w_s_angle(c.rho / 8, c.rho / 2)
    assert abs(s) < c.beta_minus


def test_stable_graph_lipschitz_bound(ctx):
    c = ctx.cone_constants(math.pi / 6)
    sg = ctx.stable(min(c.delta, c.rho, 1.0), min(c.tau, c.beta_minus))
    assert np.all(np.abs(sg.angles) <= math.atan(sg.lipschitz) + 1e-12)


def test_choose_alpha():
    assert choose_alpha(5 * math.pi / 12) == pytest.approx(math.pi / 6)
    a = choose_alpha(0.1)
    assert 2 * a < 0.1 <= 4 * a
    with pytest.raises(ValueError):
        choose_alpha(0.0)
