import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mobdyn.isotopy import SphereMap, make_model_diffeo
from mobdyn.mobius import MobiusMap, pole_fixing_map
from mobdyn.saddle_normal import (ConformalInputError, circle_roundness, conformal_defect,
                                  conformality_at_origin_test, rot, saddle_normalize)


def fd_jacobian(g, z, h=1e-6):
    def f(x, y):
        w = g(complex(x, y))
        return np.array([w.re, w.im])
    x, y = z.real, z.imag
    return np.column_stack([(f(x + h, y) - f(x - h, y)) / (2 * h),
                            (f(x, y + h) - f(x, y - h)) / (2 * h)])


def reconstruct(f, A):
    # independent product of the returned factors
    return f.rho * rot(-f.R) @ rot(f.R2) @ rot(f.R1) @ A @ rot(f.R)


def test_defect_examples():
    assert conformal_defect(np.eye(2)) == 0
    assert conformal_defect(2 * rot(math.pi / 7)) < 1e-15
    # singular values of [[1,1],[0,1]] are the golden ratio and its inverse
    phi = (1 + math.sqrt(5)) / 2
    assert conformal_defect([[1, 1], [0, 1]]) == pytest.approx(phi * phi - 1, rel=1e-14)


@given(st.floats(0.01, 100))
def test_defect_scale_invariant(c):
    A = np.array([[1.3, 0.4], [-0.2, 0.9]])
    assert conformal_defect(c * A) == pytest.approx(conformal_defect(A), rel=1e-12, abs=1e-14)


def test_diag_2_3():
    f = saddle_normalize(np.diag([2.0, 3.0]))
    assert f.lam == pytest.approx(math.sqrt(2 / 3), rel=1e-14)
    assert f.rho == pytest.approx(1 / math.sqrt(6), rel=1e-14)
    assert f.case_tag == "distinct_eigenvalues"
    assert np.abs(reconstruct(f, np.diag([2.0, 3.0])) - np.diag([f.lam, 1 / f.lam])).max() < 1e-12


def test_shear_is_defective():
    A = np.array([[1.0, 1.0], [0.0, 1.0]])
    f = saddle_normalize(A)
    assert f.case_tag == "defective"
    assert 0 < f.lam < 1 and f.residual < 1e-9
    M = reconstruct(f, A)
    assert abs(M[0, 1]) < 1e-9 and abs(M[1, 0]) < 1e-9
    assert np.linalg.det(M) == pytest.approx(1.0, abs=1e-12)


def test_rotated_diag():
    A = rot(math.pi / 5) @ np.diag([0.5, 2.0])
    f = saddle_normalize(A)
    assert f.residual < 1e-9
    assert f.lam == pytest.approx(0.5, rel=1e-9)


def test_conformal_rejected():
    with pytest.raises(ConformalInputError, match="conformal input"):
        saddle_normalize(np.eye(2))
    with pytest.raises(ValueError):
        saddle_normalize([[0, 1], [1, 0]])


def _matrix(rng, family):
    th = rng.uniform(0, 2 * np.pi)
    R = rot(th)
    if family == "defective":
        s = rng.uniform(0.1, 3) * rng.choice([-1, 1])
        return rng.uniform(0.2, 5) * R @ np.array([[1.0, s], [0.0, 1.0]]) @ R.T
    S = rng.normal(size=(2, 2))
    while abs(np.linalg.det(S)) < 0.2:
        S = rng.normal(size=(2, 2))
    l1 = rng.uniform(0.2, 3)
    l2 = l1 * rng.uniform(1.3, 5) ** rng.choice([-1, 1])
    return S @ np.diag([l1, l2]) @ np.linalg.inv(S)


@pytest.mark.parametrize("family", ["defective", "distinct"])
def test_random_families(rng, family):
    for _ in range(300):
        A = _matrix(rng, family)
        if conformal_defect(A) <= 0.05:
            continue
        f = saddle_normalize(A)
        assert f.residual < 1e-9
        assert 0 < f.lam < 1
        assert abs(f.xi_root) < 1e-12
        assert conformal_defect(reconstruct(f, A)) > 0


def test_roundness_examples():
    assert circle_roundness(SphereMap([pole_fixing_map(1, 3j)]), 1.0) == pytest.approx(1, abs=1e-12)
    assert circle_roundness(SphereMap(), 0.7) == pytest.approx(1, abs=1e-15)
    assert circle_roundness(make_model_diffeo("shear", 0.5, 4.0), 1.0) > 1.01


def test_conformality_verdicts():
    v = conformality_at_origin_test(SphereMap([MobiusMap.scaling(2)]))
    assert v.conformal and v.corroborated
    for th in (0.3, 2.0, -1.1):
        assert conformality_at_origin_test(SphereMap([MobiusMap.rotation(th)])).conformal


def test_shear_defect_matches_fd():
    g = make_model_diffeo("shear", 0.5, 4.0)
    v = conformality_at_origin_test(g)
    assert not v.conformal and v.corroborated
    assert v.defect == pytest.approx(conformal_defect(fd_jacobian(g, 0j)), abs=1e-6)
    # the ratio trend settles on sigma_2 / sigma_1 of the differential
    assert abs(v.ratios[-1] - v.limit) < 1e-4
