"""Factor a nonconformal 2x2 differential into rotations, a homothety and a
diagonal saddle, plus conformality diagnostics at a fixed point."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .geom_core import INF, ZERO, chordal_dist, hom_to_complex, to_hom

DEFECT_TOL = 1e-9
DISC_TOL = 1e-10


class ConformalInputError(ValueError):
    pass


def rot(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _arg(v) -> float:
    return math.atan2(v[1], v[0])


def _perp(v) -> np.ndarray:
    return np.array([-v[1], v[0]])


def _as_mat(A) -> np.ndarray:
    A = np.asarray(A, dtype=float).reshape(2, 2)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    return A


def conformal_defect(A) -> float:
    """sigma_1 / sigma_2 - 1; zero exactly for rotation-scalings."""
    A = _as_mat(A)
    if np.linalg.det(A) <= 0:
        raise ValueError("need an orientation-preserving (det > 0) matrix")
    s = np.linalg.svd(A, compute_uv=False)
    return float(s[0] / s[1] - 1.0)


@dataclass
class SaddleFactorization:
    R1: float
    R2: float
    R: float
    rho: float
    lam: float
    case_tag: str
    phi0: float = 0.0
    xi_root: float = 0.0
    residual: float = 0.0
    A: np.ndarray = field(default=None, repr=False)

    def normal_form(self) -> np.ndarray:
        """rho R^-1 R2 R1 A R, which should be diag(lam, 1/lam)."""
        return self.rho * rot(-self.R) @ rot(self.R2) @ rot(self.R1) @ self.A @ rot(self.R)

    def to_dict(self) -> dict:
        return {
            "R1": self.R1, "R2": self.R2, "R": self.R, "rho": self.rho,
            "lambda": self.lam, "case": self.case_tag, "phi0": self.phi0,
            "residual": self.residual,
        }


def _real_eigvec(A):
    """A unit eigenvector for a real eigenvalue of A and that eigenvalue, or None."""
    tr, det = np.trace(A), np.linalg.det(A)
    disc = tr * tr - 4 * det
    if disc < -DISC_TOL * tr * tr:
        return None
    if disc <= DISC_TOL * tr * tr:
        ev = tr / 2
        N = A - ev * np.eye(2)
        row = N[np.argmax(np.linalg.norm(N, axis=1))]
        u = _perp(row)
        return u / np.linalg.norm(u), ev
    ev = (tr + math.copysign(math.sqrt(disc), tr)) / 2
    N = A - ev * np.eye(2)
    row = N[np.argmax(np.linalg.norm(N, axis=1))]
    u = _perp(row)
    return u / np.linalg.norm(u), ev


def _xi(A1, u, what):
    def xi(phi):
        c, s = math.cos(phi), math.sin(phi)
        x = c * u + s * what
        y = -s * u + c * what
        ax, ay = A1 @ x, A1 @ y
        return float(ax @ ay / (np.linalg.norm(ax) * np.linalg.norm(ay)))
    return xi


def _bisect(f, a, b, tol=1e-14, maxit=200):
    fa, fb = f(a), f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if fa * fb > 0:
        raise ArithmeticError("xi has no sign change on [0, pi/2]")
    for _ in range(maxit):
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0 or b - a < tol:
            return m
        if fa * fm < 0:
            b, fb = m, fm
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


def saddle_normalize(A) -> SaddleFactorization:
    A = _as_mat(A)
    if np.linalg.det(A) <= 0:
        raise ValueError("need an orientation-preserving (det > 0) matrix")
    if conformal_defect(A) <= DEFECT_TOL:
        raise ConformalInputError("conformal input: no saddle factorization exists")

    # R1 turns A u into a positive multiple of u
    found = _real_eigvec(A)
    if found is not None:
        u, ev = found
        R1 = 0.0 if ev > 0 else math.pi
    else:
        u = np.array([1.0, 0.0])
        R1 = -_arg(A @ u)
    A1 = rot(R1) @ A
    lam1 = float(np.linalg.norm(A1 @ u))
    lam2 = float(np.linalg.det(A1)) / lam1

    tr = np.trace(A1)
    disc = tr * tr - 4 * np.linalg.det(A1)
    up = _perp(u)
    if disc <= DISC_TOL * tr * tr:
        case = "defective"
        # generalized eigenvector orthogonal to u: A1 w = u + lam1 w with w = up / c
        c = float((A1 @ up) @ u)
        what = math.copysign(1.0, c) * up
    else:
        case = "distinct_eigenvalues"
        N = A1 - lam2 * np.eye(2)
        row = N[np.argmax(np.linalg.norm(N, axis=1))]
        w = _perp(row)
        w = w / np.linalg.norm(w)
        if u[0] * w[1] - u[1] * w[0] < 0:
            w = -w
        wp = w - (w @ u) * u
        what = wp / np.linalg.norm(wp)

    xi = _xi(A1, u, what)
    phi0 = _bisect(xi, 0.0, math.pi / 2)
    # roots of xi are right singular directions of A1; snapping to the SVD
    # keeps the residual relative to |A1| when A1 is badly conditioned
    _, _, vt = np.linalg.svd(A1)
    cands = [math.atan2(sg * v @ what, sg * v @ u) for v in vt for sg in (1, -1)]
    snap = min(cands, key=lambda p: abs(p - phi0))
    if abs(snap - phi0) < 1e-6:
        phi0 = snap
    c, s = math.cos(phi0), math.sin(phi0)
    xh = c * u + s * what
    yh = -s * u + c * what
    nu1, nu2 = float(np.linalg.norm(A1 @ xh)), float(np.linalg.norm(A1 @ yh))
    if nu1 > nu2:
        xh, yh = yh, -xh
        nu1, nu2 = nu2, nu1
    # read R2 off the expanded direction; A1 xh is the small, less accurate image
    R2 = _arg(yh) - _arg(A1 @ yh)
    rho = 1.0 / math.sqrt(nu1 * nu2)
    lam = math.sqrt(nu1 / nu2)
    fac = SaddleFactorization(R1=R1, R2=R2, R=_arg(xh), rho=rho, lam=lam, case_tag=case,
                              phi0=phi0, xi_root=xi(phi0), A=A)
    fac.residual = float(np.max(np.abs(fac.normal_form() - np.diag([lam, 1 / lam]))))
    return fac


# ---------------------------------------------------------------- diagnostics at a fixed point

def _check_fixes_poles(g, tol=1e-9):
    if chordal_dist(g(ZERO), ZERO) > tol or chordal_dist(g(INF), INF) > tol:
        raise ValueError("map must fix 0 and infinity")


def _abs_image(g, z):
    p, q = g.apply_h(*to_hom(z))
    w, inf = hom_to_complex(p, q)
    out = np.abs(w)
    out[inf] = np.inf
    return out


def circle_roundness(g, r: float, n: int = 720) -> float:
    """max/min of |g| on the circle of radius r, refined at the extrema."""
    if r <= 0:
        raise ValueError("radius must be positive")
    _check_fixes_poles(g)
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    m = _abs_image(g, r * np.exp(1j * th))
    h = 2 * np.pi / n

    def f(t):
        return float(_abs_image(g, np.array([r * np.exp(1j * t)]))[0])

    i_lo, i_hi = int(np.argmin(m)), int(np.argmax(m))
    lo = minimize_scalar(f, bounds=(th[i_lo] - h, th[i_lo] + h), method="bounded",
                         options={"xatol": 1e-12}).fun
    hi = -minimize_scalar(lambda t: -f(t), bounds=(th[i_hi] - h, th[i_hi] + h),
                          method="bounded", options={"xatol": 1e-12}).fun
    lo, hi = min(lo, m[i_lo]), max(hi, m[i_hi])
    return float(hi / lo)


@dataclass
class ConformalityVerdict:
    conformal: bool
    defect: float
    ratios: list
    limit: float
    corroborated: bool

    def __str__(self):
        return "conformal" if self.conformal else f"nonconformal({self.defect:.3g})"


def conformality_at_origin_test(g, tol: float = DEFECT_TOL, kmax: int = 20) -> ConformalityVerdict:
    """Defect of Dg(0) plus the small-circle ratio |g(t z_m)| / |g(t z_M)|."""
    if chordal_dist(g(ZERO), ZERO) > 1e-9:
        raise ValueError("map must fix 0")
    A = np.asarray(g.differential(ZERO), dtype=float)
    d = conformal_defect(A)
    _, s, vt = np.linalg.svd(A)
    zM = complex(vt[0, 0], vt[0, 1])
    zm = complex(vt[1, 0], vt[1, 1])
    ts = 2.0 ** -np.arange(1, kmax + 1)
    num = _abs_image(g, ts * zm)
    den = _abs_image(g, ts * zM)
    ratios = (num / den).tolist()
    limit = float(s[1] / s[0])
    err = np.abs(np.array(ratios) - limit)
    # the ratio must settle on sigma_2/sigma_1 and not drift away from it
    corroborated = bool(err[-1] < 1e-4 and err[-1] <= err[0] + 1e-12)
    if d <= tol:
        corroborated = corroborated and abs(ratios[-1] - 1.0) < 1e-4
    else:
        corroborated = corroborated and ratios[-1] < 1.0
    return ConformalityVerdict(conformal=d <= tol, defect=d, ratios=ratios, limit=limit,
                               corroborated=corroborated)
