"""Extended plane / sphere geometry shared by every other module.

Points of the sphere are handled in two ways:

* ``ExtPoint`` is the scalar value type; the point at infinity is a
  tagged value, never a huge float.
* batches are homogeneous pairs ``(p, q)`` of complex arrays with
  ``z = p / q``; infinity is ``q == 0``.  Pairs are kept scaled so that
  ``max(|p|, |q|) == 1``, which keeps points near infinity accurate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


@dataclass(frozen=True)
class ExtPoint:
    re: float = 0.0
    im: float = 0.0
    infinite: bool = False

    def __post_init__(self):
        if self.infinite:
            object.__setattr__(self, "re", 0.0)
            object.__setattr__(self, "im", 0.0)
        elif not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise ValueError("finite ExtPoint needs finite coordinates")

    @classmethod
    def of(cls, z) -> "ExtPoint":
        if isinstance(z, ExtPoint):
            return z
        z = complex(z)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise ValueError(f"not a finite complex number: {z!r}; use INF")
        return cls(z.real, z.imag)

    @property
    def z(self) -> complex:
        if self.infinite:
            raise ValueError("infinity has no planar coordinate")
        return complex(self.re, self.im)

    def __repr__(self):
        if self.infinite:
            return "ExtPoint(inf)"
        return f"ExtPoint({self.re!r}{self.im:+}j)"


INF = ExtPoint(infinite=True)
ZERO = ExtPoint(0.0, 0.0)
ONE = ExtPoint(1.0, 0.0)


def ext(z) -> ExtPoint:
    """Coerce a number, ``None``/``"inf"`` or ExtPoint to an ExtPoint."""
    if isinstance(z, ExtPoint):
        return z
    if z is None or (isinstance(z, str) and z.lower() in ("inf", "infinity", "∞")):
        return INF
    return ExtPoint.of(z)


# ---------------------------------------------------------------- projection

def stereo(p) -> ExtPoint:
    """Unit vector in R^3 to the extended plane, projecting from (0,0,1)."""
    x, y, zc = (float(v) for v in p)
    n = math.sqrt(x * x + y * y + zc * zc)
    if abs(n - 1.0) > 1e-9:
        raise ValueError("stereo expects a unit vector")
    d = 1.0 - zc
    if d <= 0.0 or (x == 0.0 and y == 0.0 and zc > 0):
        return INF
    # 1 - Z loses digits near the north pole; x^2 + y^2 = (1-Z)(1+Z) fixes that
    if zc > 0.5:
        d = (x * x + y * y) / (1.0 + zc)
        if d == 0.0:
            return INF
    return ExtPoint(x / d, y / d)


def stereo_inv(z) -> np.ndarray:
    """Extended-plane point to a unit vector in R^3."""
    z = ext(z)
    if z.infinite:
        return np.array([0.0, 0.0, 1.0])
    x, y = z.re, z.im
    s = x * x + y * y
    return np.array([2 * x, 2 * y, s - 1.0]) / (s + 1.0)


def chordal_dist(z, w) -> float:
    """Euclidean distance in R^3 between the projected points, in [0, 2]."""
    p1, q1 = to_hom(z)
    p2, q2 = to_hom(w)
    return float(chordal_hom(p1, q1, p2, q2)[0])


# ---------------------------------------------------------------- homogeneous batches

def normalize_hom(p, q):
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    s = np.maximum(np.abs(p), np.abs(q))
    if np.any(s == 0):
        raise ValueError("degenerate homogeneous pair (0, 0)")
    return p / s, q / s


def to_hom(z):
    """ExtPoint, complex or a sequence of them to a normalized (p, q) pair."""
    if isinstance(z, ExtPoint):
        if z.infinite:
            return np.array([1.0 + 0j]), np.array([0j])
        return normalize_hom(np.array([z.z]), np.array([1.0 + 0j]))
    if isinstance(z, (list, tuple)) and any(isinstance(v, ExtPoint) for v in z):
        ps, qs = zip(*(to_hom(ext(v)) for v in z))
        return np.concatenate(ps), np.concatenate(qs)
    arr = np.atleast_1d(np.asarray(z, dtype=complex))
    if not np.all(np.isfinite(arr)):
        raise ValueError("use ExtPoint INF for the point at infinity")
    return normalize_hom(arr, np.ones_like(arr))


def from_hom(p, q):
    """Back to a list of ExtPoints."""
    out = []
    for a, b in zip(np.ravel(p), np.ravel(q)):
        if b == 0:
            out.append(INF)
        else:
            w = a / b
            if not (math.isfinite(w.real) and math.isfinite(w.imag)):
                out.append(INF)
            else:
                out.append(ExtPoint(float(w.real), float(w.imag)))
    return out


def hom_to_complex(p, q):
    """Planar coordinates and an infinity mask; masked entries hold 0."""
    p = np.asarray(p)
    q = np.asarray(q)
    inf = np.abs(q) == 0
    z = np.zeros(np.shape(p), dtype=complex)
    np.divide(p, q, out=z, where=~inf)
    big = ~np.isfinite(z)
    inf = inf | big
    z[inf] = 0
    return z, inf


def hom_to_sphere(p, q):
    """Points on the unit sphere, shape (..., 3)."""
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    n2 = np.abs(p) ** 2 + np.abs(q) ** 2
    pq = p * np.conj(q)
    x = 2 * pq.real / n2
    y = 2 * pq.imag / n2
    zc = (np.abs(p) ** 2 - np.abs(q) ** 2) / n2
    return np.stack([x, y, zc], axis=-1)


def chordal_hom(p1, q1, p2, q2):
    """Chordal distance between homogeneous batches (broadcasting)."""
    num = 2.0 * np.abs(p1 * q2 - p2 * q1)
    den = np.sqrt(np.abs(p1) ** 2 + np.abs(q1) ** 2) * np.sqrt(np.abs(p2) ** 2 + np.abs(q2) ** 2)
    return num / den


def chordal_to_inf(p, q):
    return 2.0 * np.abs(q) / np.sqrt(np.abs(p) ** 2 + np.abs(q) ** 2)


def gamma_side(p, q):
    """Signed quantity vanishing exactly on the meridian; positive on H+.

    Im(z) rescaled to the sphere, so it is continuous through infinity.
    """
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    return (p * np.conj(q)).imag / (np.abs(p) ** 2 + np.abs(q) ** 2)


# ---------------------------------------------------------------- angles, cones, hemispheres

def polar_angle(z):
    """atan2 angle in (-pi, pi]; the angle of 0 is 0."""
    z = np.asarray(z, dtype=complex)
    return np.arctan2(z.imag, z.real)


def axis_angle(z):
    """Angle between the line through z and the x-axis, in [0, pi/2]."""
    th = np.abs(polar_angle(z))
    return np.minimum(th, np.pi - th)


def vec_angle(u, v) -> float:
    """Unsigned angle in [0, pi] between two nonzero plane vectors."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    c = float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))
    return math.acos(max(-1.0, min(1.0, c)))


@dataclass(frozen=True)
class Cone:
    alpha: float

    def __post_init__(self):
        if not (0.0 < self.alpha < math.pi / 2):
            raise ValueError("cone half-angle must lie in (0, pi/2)")


def cone_contains(c, z) -> bool:
    alpha = c.alpha if isinstance(c, Cone) else float(c)
    z = ext(z)
    if z.infinite:
        raise ValueError("cones are planar; infinity is not allowed")
    return bool(axis_angle(z.z) <= alpha)


def in_cone(alpha, z):
    """Vectorized cone membership for finite complex arrays."""
    return axis_angle(z) <= alpha


class Hemisphere(str, Enum):
    plus = "plus"
    minus = "minus"
    gamma = "gamma"

    def sign(self) -> int:
        return {"plus": 1, "minus": -1, "gamma": 0}[self.value]


def hemisphere(z) -> Hemisphere:
    z = ext(z)
    if z.infinite or z.im == 0.0:
        return Hemisphere.gamma
    return Hemisphere.plus if z.im > 0 else Hemisphere.minus


# ---------------------------------------------------------------- the meridian

_ARC_NAMES = {"01": (0.0, 1.0), "1inf": (1.0, math.inf), "inf0": (-math.inf, 0.0)}


@dataclass(frozen=True)
class GammaArc:
    """Arc of the extended real line with endpoints a, b.

    Without infinity the arc is the segment [min, max]; with infinity it is the
    complementary arc through infinity.
    """
    a: ExtPoint
    b: ExtPoint
    contains_infinity: bool = False

    def __post_init__(self):
        a, b = ext(self.a), ext(self.b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        for p in (a, b):
            if not p.infinite and p.im != 0.0:
                raise ValueError("arc endpoints must lie on the meridian")
        if a == b:
            raise ValueError("arc endpoints must differ")
        if (a.infinite or b.infinite) and not self.contains_infinity:
            object.__setattr__(self, "contains_infinity", True)

    def contains(self, x, open_arc=True) -> bool:
        x = ext(x)
        if x.infinite:
            return self.contains_infinity and not open_arc
        if x.im != 0.0:
            return False
        ends = [p.re for p in (self.a, self.b) if not p.infinite]
        if self.a.infinite or self.b.infinite:
            e = ends[0]
            # which side of e: the arc runs from the finite end out to infinity
            other = self._side
            return (x.re > e if other > 0 else x.re < e) or (not open_arc and x.re == e)
        lo, hi = sorted(ends)
        if self.contains_infinity:
            return x.re < lo or x.re > hi or (not open_arc and x.re in (lo, hi))
        return lo < x.re < hi or (not open_arc and x.re in (lo, hi))

    @property
    def _side(self):
        # for arcs with an infinite end, orientation follows the real-line order:
        # (a, inf) is to the right of a, (inf, b) to the left of b
        return 1 if self.b.infinite else -1


ARC_01 = GammaArc(ZERO, ONE)
ARC_1INF = GammaArc(ONE, INF)
ARC_INF0 = GammaArc(INF, ZERO)


def gamma_arc_of(x: float) -> str:
    """Name of the component of the meridian minus {0,1,inf} holding real x."""
    if x > 1.0:
        return "1inf"
    if x > 0.0 and x < 1.0:
        return "01"
    if x < 0.0:
        return "inf0"
    raise ValueError("point is a reference point")


def gamma_arc_of_sphere(v) -> str:
    """Arc name for a point (X, 0, Z) of the meridian given in R^3."""
    x, _, zc = v
    if x < 0:
        return "inf0"
    d = 1.0 - zc
    if d <= 0:
        raise ValueError("point is infinity")
    r = x / d
    return gamma_arc_of(r)
