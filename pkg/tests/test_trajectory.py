import math

import numpy as np
import pytest

from mobdyn.geom_core import INF, ONE, ZERO, axis_angle, chordal_dist, chordal_hom, ext, to_hom
from mobdyn.isotopy import check_isotopy, identity_residual
from mobdyn.trajectory import (FundamentalError, Trajectory, fixed_point_residual,
                               fundamental_isotopy, omega_limit_estimate, sample_times,
                               splice_residuals, two_ended_isotopy)

Z0 = 0.3 * complex(math.cos(5 * math.pi / 12), math.sin(5 * math.pi / 12))


@pytest.fixture(scope="module")
def fund(ctx):
    return fundamental_isotopy(Z0, 8, ctx)


def test_fundamental_stays_above(fund):
    iso, b = fund
    traj = Trajectory.of(iso, Z0, sample_times(iso, 20))
    assert np.all(traj.imag_sign() > 0)
    d_inf = 2 * abs(traj.Q[-1]) / math.hypot(abs(traj.P[-1]), abs(traj.Q[-1]))
    # the decay bound (rho1/rho0)^K is the oracle for the last stage
    assert d_inf < 0.1
    assert abs(b.stages[-1].v) <= b.decay_bound(8) * (1 + 1e-9)


def test_build_audit(fund):
    iso, b = fund
    a = b.audit
    assert a["w_radius_err"] < 1e-12 and a["w_outside_alpha"]
    assert a["n_le_n0"] and a["r_lt_1"] and a["decay_ok"]
    assert a["v_on_Ws"] < 1e-6
    assert b.rho0 == pytest.approx(min(b.delta, b.rho, b.sigma, 1) / 2)


def test_splices_and_poles(fund):
    iso, _ = fund
    assert max(splice_residuals(iso)) < 1e-8
    ts = np.linspace(0, iso.t1, 1000)
    assert fixed_point_residual(iso, ts) < 1e-9
    assert identity_residual(iso) < 1e-12


def test_cone_bookkeeping(fund):
    iso, b = fund
    ts = sample_times(iso, 10)
    P, Q = iso.point_path(*to_hom([Z0, 1.0]), ts)
    # f_t(z0) stays out of C_{beta+}; the companion f_t(1) is renormalized to 1
    z = P[:, 0] / Q[:, 0]
    assert np.all(axis_angle(z) > b.beta_plus)


def test_continuity(fund):
    iso, _ = fund
    assert check_isotopy(iso, span=(0, iso.t1))["ok"]


def test_rejects_meridian(ctx):
    with pytest.raises(FundamentalError):
        fundamental_isotopy(0.4, 2, ctx)


def test_two_ended(ctx):
    z0 = 0.3j * complex(math.cos(math.pi / 6), math.sin(math.pi / 6))
    T = two_ended_isotopy(z0, ZERO, ONE, 8, ctx)
    assert identity_residual(T) < 1e-12
    ts = np.linspace(T.t0, T.t1, 4001)
    P, Q = T.trajectory(ext(z0), ts)
    assert chordal_hom(P[-1], Q[-1], *to_hom(1.0))[0] < 0.1
    assert chordal_hom(P[0], Q[0], *to_hom(0.0))[0] < 0.1
    # within ~1e-16 of a limit point Im(z) is below double resolution
    far = np.minimum(chordal_hom(P, Q, *to_hom(0.0)), chordal_hom(P, Q, *to_hom(1.0))) > 1e-10
    side = np.sign((P * np.conj(Q)).imag)[far]
    assert far.sum() > 2000 and np.all(side == side[0])
    # in the chart where the forward half runs to infinity it never meets the meridian
    Pf, Qf = T.fwd_iso.trajectory(T.fwd_iso.build.z0, np.linspace(0, T.fwd_iso.t1, 2001))
    sf = np.sign((Pf * np.conj(Qf)).imag)
    assert np.all(sf == sf[0])


def test_omega_limit(fund):
    iso, _ = fund
    const = Trajectory.from_points(np.arange(20.0), [0.5j] * 20)
    pt, conf = omega_limit_estimate(const)
    assert conf == "converged" and chordal_dist(pt, 0.5j) < 1e-15
    pt, conf = omega_limit_estimate(Trajectory.of(iso, Z0, sample_times(iso, 10)))
    assert conf == "converged" and chordal_dist(pt, INF) < 0.1
    osc = Trajectory.from_points(np.arange(40.0), [0.0, 1.0] * 20)
    assert omega_limit_estimate(osc)[1] == "inconclusive"


def test_trajectory_time_order():
    with pytest.raises(ValueError):
        Trajectory.from_points([0.0, 0.0], [1j, 2j])
