"""Moebius maps of the extended plane as det-1 complex 2x2 matrices."""
from __future__ import annotations

import cmath
import math
from enum import Enum

import numpy as np

from .geom_core import INF, ONE, ZERO, ExtPoint, ext, from_hom, normalize_hom, to_hom


def complex_jac(w: complex) -> np.ndarray:
    """Real 2x2 matrix of multiplication by w."""
    return np.array([[w.real, -w.imag], [w.imag, w.real]])


class MobiusClass(str, Enum):
    identity = "identity"
    parabolic = "parabolic"
    elliptic = "elliptic"
    hyperbolic = "hyperbolic"
    loxodromic = "loxodromic"


class MobiusMap:
    """z -> (az + b)/(cz + d), stored with ad - bc = 1."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a, b, c, d):
        a, b, c, d = complex(a), complex(b), complex(c), complex(d)
        det = a * d - b * c
        if det == 0 or not cmath.isfinite(det):
            raise ValueError("singular Moebius matrix")
        s = cmath.sqrt(det)
        self.a, self.b, self.c, self.d = a / s, b / s, c / s, d / s

    # construction helpers
    @classmethod
    def identity(cls):
        return cls(1, 0, 0, 1)

    @classmethod
    def rotation(cls, theta: float):
        """z -> e^{i theta} z."""
        w = cmath.exp(0.5j * theta)
        return cls(w, 0, 0, 1 / w)

    @classmethod
    def homothety(cls, rho: float):
        return cls(rho, 0, 0, 1)

    @classmethod
    def scaling(cls, w: complex):
        return cls(w, 0, 0, 1)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    # action
    def apply_h(self, p, q):
        return normalize_hom(self.a * p + self.b * q, self.c * p + self.d * q)

    def __call__(self, z) -> ExtPoint:
        z = ext(z)
        if z.infinite:
            if self.c == 0:
                return INF
            return ExtPoint.of(self.a / self.c)
        den = self.c * z.z + self.d
        if den == 0:
            return INF
        w = (self.a * z.z + self.b) / den
        if not cmath.isfinite(w):
            return INF
        return ExtPoint.of(w)

    def apply_many(self, zs):
        p, q = to_hom(zs)
        return from_hom(*self.apply_h(p, q))

    def deriv(self, z: complex) -> complex:
        return 1.0 / (self.c * z + self.d) ** 2

    def jac(self, z: complex) -> np.ndarray:
        return complex_jac(self.deriv(complex(z)))

    def differential(self, z) -> np.ndarray:
        return self.jac(ext(z).z)

    # group structure
    def compose(self, other: "MobiusMap") -> "MobiusMap":
        """self o other."""
        m = self.matrix @ other.matrix
        return MobiusMap(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    def __matmul__(self, other):
        if isinstance(other, MobiusMap):
            return self.compose(other)
        return NotImplemented

    def inverse(self) -> "MobiusMap":
        return MobiusMap(self.d, -self.b, -self.c, self.a)

    def trace_sq(self) -> complex:
        return (self.a + self.d) ** 2

    def close_to(self, other: "MobiusMap", tol=1e-9) -> bool:
        m, n = self.matrix, other.matrix
        return bool(min(np.max(np.abs(m - n)), np.max(np.abs(m + n))) <= tol)

    def __eq__(self, other):
        if not isinstance(other, MobiusMap):
            return NotImplemented
        return self.close_to(other, 1e-12)

    __hash__ = None

    def is_identity(self, tol=1e-12) -> bool:
        return self.close_to(MobiusMap.identity(), tol)

    def __repr__(self):
        return f"MobiusMap({self.a:.6g}, {self.b:.6g}, {self.c:.6g}, {self.d:.6g})"


def mobius_apply(m: MobiusMap, z) -> ExtPoint:
    return m(z)


def compose(m: MobiusMap, n: MobiusMap) -> MobiusMap:
    return m.compose(n)


def inverse(m: MobiusMap) -> MobiusMap:
    return m.inverse()


def classify(m: MobiusMap, tol=1e-9) -> MobiusClass:
    t2 = m.trace_sq()
    if m.is_identity(tol):
        return MobiusClass.identity
    if abs(t2 - 4) <= tol:
        return MobiusClass.parabolic
    if abs(t2.imag) > tol:
        return MobiusClass.loxodromic
    if 0 <= t2.real < 4:
        return MobiusClass.elliptic
    if t2.real > 4:
        return MobiusClass.hyperbolic
    return MobiusClass.loxodromic


def three_point_map(a, b, c) -> MobiusMap:
    """The Moebius map sending a, b, c to 0, 1, inf (a cross ratio)."""
    a, b, c = ext(a), ext(b), ext(c)
    if a == b or b == c or a == c:
        raise ValueError("three_point_map needs distinct points")
    # z -> (z - a)(b - c) / ((z - c)(b - a)), with the infinite cases written out
    if a.infinite:
        m = (0, b.z - c.z, 1, -c.z)
    elif b.infinite:
        m = (1, -a.z, 1, -c.z)
    elif c.infinite:
        m = (1, -a.z, 0, b.z - a.z)
    else:
        k1, k2 = b.z - c.z, b.z - a.z
        m = (k1, -a.z * k1, k2, -c.z * k2)
    return MobiusMap(*m)


def map_triple(src, dst) -> MobiusMap:
    """The unique map sending the triple src to dst."""
    return three_point_map(*dst).inverse().compose(three_point_map(*src))


def pole_fixing_map(x, y) -> MobiusMap:
    """w -> (y/x) w; fixes 0 and inf and sends x to y."""
    x, y = ext(x), ext(y)
    for v in (x, y):
        if v.infinite or v.z == 0:
            raise ValueError("pole_fixing_map needs finite nonzero points")
    return MobiusMap.scaling(y.z / x.z)


def pbar(z) -> MobiusMap:
    """The pole-fixing map sending z to 1."""
    return pole_fixing_map(z, 1.0)


def _ref_key(p) -> str:
    p = ext(p)
    if p.infinite:
        return "inf"
    if p == ZERO:
        return "0"
    if p == ONE:
        return "1"
    raise ValueError(f"{p!r} is not one of 0, 1, inf")


_SWAPS = {
    frozenset({"0", "inf"}): (0, 1, 1, 0),
    frozenset({"0", "1"}): (-1, 1, 0, 1),
    frozenset({"1", "inf"}): (1, 0, 1, -1),
}


def swap_map(a, b) -> MobiusMap:
    """Involution exchanging two of 0, 1, inf and fixing the third."""
    ka, kb = _ref_key(a), _ref_key(b)
    if ka == kb:
        raise ValueError("swap_map needs two different reference points")
    return MobiusMap(*_SWAPS[frozenset({ka, kb})])


T_0INF = swap_map(ZERO, INF)
T_01 = swap_map(ZERO, ONE)
T_1INF = swap_map(ONE, INF)


def is_fixed_by(m: MobiusMap, pts, tol=1e-12) -> bool:
    from .geom_core import chordal_dist
    return all(chordal_dist(m(p), p) <= tol for p in pts)


def rotation_angle_of(m: MobiusMap) -> float:
    """Angle of the multiplier of a pole-fixing map."""
    if abs(m.b) > 0 or abs(m.c) > 0:
        raise ValueError("not a pole-fixing map")
    return math.atan2((m.a / m.d).imag, (m.a / m.d).real)
