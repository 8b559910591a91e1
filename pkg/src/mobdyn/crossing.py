"""Curve intersections, the four-intersection isotopy, ejection of a point off
the meridian and the isotopy carrying a point across the segment (0, 1)."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geom_core import (INF, ExtPoint, chordal_hom, ext, gamma_arc_of, gamma_side,
                        hom_to_complex, normalize_hom, to_hom)
from .isotopy import Isotopy, SphereMap, conjugate, restrict_shift, reverse
from .mobius import three_point_map


class TangentialIntersectionError(ArithmeticError):
    def __init__(self, msg, certificate=None):
        super().__init__(msg)
        self.certificate = certificate


class CrossingError(RuntimeError):
    pass


# ---------------------------------------------------------------- curves and intersections

@dataclass
class PlanarCurve:
    """Sampled planar curve with a vectorized evaluator for refinement."""
    params: np.ndarray
    points: np.ndarray
    func: object
    closed: bool = False
    period: float = 0.0

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float)
        self.points = np.asarray(self.points, dtype=complex)
        if np.any(np.diff(self.params) <= 0):
            raise ValueError("curve parameters must increase")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("planar curves need finite points")

    @classmethod
    def sample(cls, func, t0: float, t1: float, n: int, closed: bool = False):
        ts = np.linspace(t0, t1, n, endpoint=not closed)
        return cls(ts, func(ts), func, closed, (t1 - t0) if closed else 0.0)

    @classmethod
    def circle(cls, center: complex = 0.0, radius: float = 1.0, n: int = 1024, clockwise=False):
        sgn = -1.0 if clockwise else 1.0
        return cls.sample(lambda s: center + radius * np.exp(sgn * 2j * np.pi * np.asarray(s)),
                          0.0, 1.0, n, closed=True)

    def __len__(self):
        return len(self.params)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = self.func(s)
        if s.ndim == 0:
            return complex(np.ravel(out)[0])
        return out

    def tangent(self, s, h: float = 1e-6):
        s = np.asarray(s, dtype=float)
        span = self.period if self.closed else (self.params[-1] - self.params[0])
        step = h * span
        return (self(s + step) - self(s - step)) / (2 * step)

    def segments(self):
        a0, s0 = self.points, self.params
        if self.closed:
            a1 = np.roll(a0, -1)
            s1 = np.append(s0[1:], s0[0] + self.period)
        else:
            a0, a1, s1, s0 = a0[:-1], a0[1:], s0[1:], s0[:-1]
        return a0, a1, s0, s1


@dataclass
class CrossingCertificate:
    points: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    s1: np.ndarray = field(default_factory=lambda: np.zeros(0))
    s2: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sines: np.ndarray = field(default_factory=lambda: np.zeros(0))
    residual: float = 0.0

    def __len__(self):
        return len(self.points)

    @property
    def min_sin(self) -> float:
        return float(self.sines.min()) if len(self.sines) else 1.0


def _cross(a, b):
    return (np.conj(a) * b).imag


def segment_hits(a0, a1, sa0, sa1, b0, b1, sb0, sb1, chunk: int = 512):
    """Parameter pairs where segments a0->a1 and b0->b1 cross, interpolated
    linearly from the segment end parameters."""
    d2 = b1 - b0
    out = []
    for i in range(0, len(a0), chunk):
        A0, D1 = a0[i:i + chunk, None], (a1 - a0)[i:i + chunk, None]
        den = _cross(D1, d2[None, :])
        w = b0[None, :] - A0
        with np.errstate(divide="ignore", invalid="ignore"):
            u = _cross(w, d2[None, :]) / den
            v = _cross(w, D1) / den
        ok = (den != 0) & (u >= 0) & (u < 1) & (v >= 0) & (v < 1)
        for r, c in zip(*np.nonzero(ok)):
            j = i + r
            out.append((sa0[j] + u[r, c] * (sa1[j] - sa0[j]), sb0[c] + v[r, c] * (sb1[c] - sb0[c])))
    return out


def polyline_segments(z, params, clip: float = 1e4):
    """Consecutive-sample segments of an open path, dropping any with an end
    beyond the clip radius."""
    z = np.asarray(z, dtype=complex)
    params = np.asarray(params, dtype=float)
    ok = np.isfinite(z) & (np.abs(z) <= clip)
    keep = ok[:-1] & ok[1:]
    return z[:-1][keep], z[1:][keep], params[:-1][keep], params[1:][keep]


def _segment_hits(c1: PlanarCurve, c2: PlanarCurve):
    return segment_hits(*c1.segments(), *c2.segments())


def _wrap(c: PlanarCurve, s: float) -> float:
    if c.closed:
        return c.params[0] + (s - c.params[0]) % c.period
    return float(np.clip(s, c.params[0], c.params[-1]))


def _polish(c1: PlanarCurve, c2: PlanarCurve, s1: float, s2: float, iters: int = 40):
    """Newton on c1(s1) = c2(s2) in both parameters."""
    for _ in range(iters):
        F = complex(c1(s1) - c2(s2))
        t1, t2 = complex(c1.tangent(s1)), complex(c2.tangent(s2))
        J = np.array([[t1.real, -t2.real], [t1.imag, -t2.imag]])
        step = np.linalg.lstsq(J, -np.array([F.real, F.imag]), rcond=None)[0]
        s1, s2 = _wrap(c1, s1 + step[0]), _wrap(c2, s2 + step[1])
        if abs(step[0]) + abs(step[1]) < 1e-15:
            break
    return s1, s2


def _sin_angle(a: complex, b: complex) -> float:
    return abs(_cross(a, b)) / (abs(a) * abs(b))


def curve_intersections(c1: PlanarCurve, c2: PlanarCurve, min_sin: float = 1e-3) -> CrossingCertificate:
    if len(c1) < 256 or len(c2) < 256:
        raise ValueError("curves must be sampled at >= 256 points")
    raw = _segment_hits(c1, c2)
    pts, S1, S2 = [], [], []
    for s1, s2 in raw:
        s1, s2 = _polish(c1, c2, s1, s2)
        z = complex(c1(s1))
        zp, zq = to_hom(z)
        if pts and np.min(chordal_hom(*to_hom(np.array(pts)), zp, zq)) < 1e-8:
            continue
        pts.append(z)
        S1.append(s1)
        S2.append(s2)
    S1, S2 = np.array(S1), np.array(S2)
    order = np.argsort(S1)
    S1, S2 = S1[order], S2[order]
    p1, p2 = c1(S1), c2(S2)
    res = float(np.max(chordal_hom(*to_hom(p1), *to_hom(p2)))) if len(S1) else 0.0
    sines = np.array([_sin_angle(complex(c1.tangent(a)), complex(c2.tangent(b)))
                      for a, b in zip(S1, S2)])
    cert = CrossingCertificate(points=np.asarray(p1), s1=S1, s2=S2, sines=sines, residual=res)
    if len(sines) and sines.min() < min_sin:
        raise TangentialIntersectionError(
            f"tangential intersection: min |sin| = {sines.min():.3g}", cert)
    if res > 1e-9:
        raise ArithmeticError(f"intersection polish failed, residual {res:.3g}")
    return cert


# ---------------------------------------------------------------- crossings of the meridian

def _meridian_hom(s):
    a = np.pi * (np.asarray(s, dtype=float) - 0.5)
    return np.sin(a).astype(complex), np.cos(a).astype(complex)


def meridian_crossings(f, n: int = 4096, zero_tol: float = 1e-14):
    """Points x of the meridian where f(x) crosses it, as meridian parameters s
    in [0, 1) (x = tan(pi (s - 1/2)), s = 0 is infinity) and image points."""
    f = SphereMap.of(f)

    def side(s):
        return gamma_side(*f.apply_h(*_meridian_hom(s)))

    s = np.arange(n) / n
    v = side(s)
    nz = np.flatnonzero(np.abs(v) > zero_tol)
    roots = []
    for i, j in zip(nz, np.roll(nz, -1)):
        if np.sign(v[i]) == np.sign(v[j]):
            continue
        lo, hi = s[i], s[j] + (1.0 if j <= i else 0.0)
        flo = np.sign(v[i])
        while hi - lo > 1e-12:
            m = 0.5 * (lo + hi)
            fm = side(m % 1.0)
            if fm == 0:
                lo = hi = m
                break
            if np.sign(fm) == flo:
                lo = m
            else:
                hi = m
        roots.append((0.5 * (lo + hi)) % 1.0)
    roots = np.sort(np.array(roots))
    P, Q = f.apply_h(*_meridian_hom(roots))
    return roots, (P, Q)


def meridian_point(s) -> ExtPoint:
    p, q = _meridian_hom(s)
    if abs(q[0]) < 1e-300:
        return INF
    return ExtPoint(float((p[0] / q[0]).real), 0.0)


# ---------------------------------------------------------------- the four-point isotopy

def _three_point_h(a, b, c, p, q):
    """M_{abc} applied row-wise; a, b, c are (m,) finite arrays, p, q (m, n)."""
    a, b, c = a[:, None], b[:, None], c[:, None]
    return normalize_hom((p - a * q) * (b - c), (p - c * q) * (b - a))


class FourPointIsotopy(Isotopy):
    """k_t = M_{g_t(a) g_t(b) g_t(c)} o g_t o M_0 with M_0 = M_{abc}^-1."""

    def __init__(self, ext_iso, a, b, c, d):
        self.ext = ext_iso
        self.abc = np.array([a, b, c], dtype=complex)
        self.d = complex(d)
        self.M0 = three_point_map(a, b, c).inverse()
        self.t0, self.t1, self.name = 0.0, 1.0, "four-point"

    def at(self, t) -> SphereMap:
        self.check_time(t)
        gt = self.ext.at(float(t))
        ga, gb, gc = gt.apply_many(self.abc)
        return SphereMap([self.M0, gt, three_point_map(ga, gb, gc)])

    def point_path(self, p, q, times):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        self.check_time(times)
        p, q = self.M0.apply_h(p, q)
        n = np.size(p)
        pa, qa = to_hom(self.abc)
        P, Q = self.ext.point_path(np.concatenate([p, pa]), np.concatenate([q, qa]), times)
        w, inf = hom_to_complex(P[:, n:], Q[:, n:])
        if np.any(inf):
            raise ArithmeticError("reference points reached infinity")
        return _three_point_h(w[:, 0], w[:, 1], w[:, 2], P[:, :n], Q[:, :n])


def _circle_pair(g: SphereMap, r: float, n: int):
    c1 = PlanarCurve.circle(0.0, r, n)

    def img(s):
        w, inf = hom_to_complex(*g.apply_h(*to_hom(r * np.exp(2j * np.pi * np.asarray(s)))))
        return w

    return c1, PlanarCurve.sample(img, 0.0, 1.0, n, closed=True)


def circle_image_intersections(g, r: float, n: int = 1024) -> CrossingCertificate:
    return curve_intersections(*_circle_pair(SphereMap.of(g), r, n))


def _count(g, r, n):
    try:
        return len(circle_image_intersections(g, r, n))
    except TangentialIntersectionError:
        return -1


def four_point_isotopy(ctx=None, r_start: float = 0.5, steps: int = 30, n: int = 1024):
    """(k, r0, certificate); k also carries the meridian crossing data of k_1."""
    from .trajectory import default_context
    ctx = ctx or default_context()
    cached = getattr(ctx, "_four_point", None)
    if cached is not None:
        return cached
    g = ctx.g
    r0 = cert = None
    for k in range(steps):
        r = r_start * 2.0 ** -k
        try:
            c = circle_image_intersections(g, r, n)
        except TangentialIntersectionError:
            continue
        if len(c) == 4 and _count(g, r / 2, n) == 4:
            r0, cert = r, c
            break
    if r0 is None:
        raise CrossingError("no radius with exactly four transversal intersections")
    # preimages under g of the intersection points, in anticlockwise order
    pre = np.sort(cert.s2 % 1.0)
    a, b, c, d = r0 * np.exp(2j * np.pi * pre)
    iso = FourPointIsotopy(ctx.ext, a, b, c, d)
    k1 = iso.at(1.0)
    roots, (P, Q) = meridian_crossings(k1)
    iso.meridian_params = roots
    iso.meridian_images = (P, Q)
    if len(roots) != 4:
        raise CrossingError(f"k_1 meets the meridian {len(roots)} times, expected 4")
    x_w = three_point_map(a, b, c)(ExtPoint.of(d))
    iso.w0_preimage = ExtPoint(x_w.re, 0.0) if not x_w.infinite else INF
    iso.w0 = k1(iso.w0_preimage)
    iso.r0 = r0
    out = (iso, r0, cert)
    ctx._four_point = out
    return out


# ---------------------------------------------------------------- ejection off the meridian

M_1INF0 = three_point_map(1.0, INF, 0.0)


def _off_gamma(f: SphereMap, z: ExtPoint, tol: float) -> bool:
    w = f(z)
    return (not w.infinite) and abs(w.im) > tol


def eject_from_gamma(z0, ctx=None, tol: float = 1e-6) -> Isotopy:
    z0 = ext(z0)
    if z0.infinite or z0.im != 0.0 or z0.re in (0.0, 1.0):
        raise ValueError("eject_from_gamma needs a real point other than 0 and 1")
    k, _, _ = four_point_isotopy(ctx)
    if _off_gamma(k.at(1.0), z0, tol):
        k.conjugated = False
        return k
    h = conjugate(M_1INF0, k)
    if _off_gamma(h.at(1.0), z0, tol):
        h.conjugated = True
        return h
    raise CrossingError("neither k nor its conjugate moves z0 off the meridian")


# ---------------------------------------------------------------- the crossing isotopy

@dataclass
class CrossingResult:
    J: Isotopy
    zhat: ExtPoint
    info: dict


def _side_at(h: Isotopy, u, t) -> float:
    P, Q = h.point_path(*to_hom(u), [t])
    return float(gamma_side(P[0], Q[0])[0])


def _bisect_time(h, u, lo, hi, sign_lo, tol=1e-13):
    while hi - lo > tol:
        m = 0.5 * (lo + hi)
        if np.sign(_side_at(h, u, m)) == sign_lo:
            lo = m
        else:
            hi = m
    return lo, hi


def crossing_arcs(P, Q) -> list:
    """Arc names of the sign changes of a sampled homogeneous path."""
    sd = gamma_side(P, Q)
    sg = np.sign(sd)
    nz = np.flatnonzero(sg != 0)
    out = []
    for i, j in zip(nz[:-1], nz[1:]):
        if sg[i] != sg[j]:
            k = min(range(i, j + 1), key=lambda m: abs(sd[m]))
            z, inf = hom_to_complex(P[k:k + 1], Q[k:k + 1])
            out.append("inf" if inf[0] else _arc_or_point(z[0].real))
    return out


def _arc_or_point(x: float) -> str:
    try:
        return gamma_arc_of(x)
    except ValueError:
        return f"point{x:g}"


def crossing_isotopy(ctx=None, z0: float = 0.37, dt: float = 1e-4) -> CrossingResult:
    from .trajectory import default_context
    ctx = ctx or default_context()
    cached = getattr(ctx, "_crossing", None)
    if cached is not None and cached.info["z0"] == z0:
        return cached
    h = eject_from_gamma(z0, ctx)
    h1 = h.at(1.0)
    target = 1 if h1(ExtPoint(z0, 0.0)).im > 0 else -1
    eps = 1e-2
    for _ in range(40):
        u0 = complex(z0, -target * eps)
        if target * gamma_side(*h1.apply_h(*to_hom(u0)))[0] > 0:
            break
        eps /= 2
    else:
        raise CrossingError("no perturbation of z0 keeps the endpoint side")
    times = np.linspace(0.0, 1.0, int(round(1 / dt)) + 1)
    P, Q = h.point_path(*to_hom(u0), times)
    sg = np.sign(target * gamma_side(P[:, 0], Q[:, 0]))
    minus = np.flatnonzero(sg < 0)
    i_m = int(minus[-1])
    plus_after = np.flatnonzero(sg[i_m + 1:] > 0)
    if plus_after.size == 0:
        raise CrossingError("path never enters the target hemisphere")
    i_p = i_m + 1 + int(plus_after[0])
    t_minus, t_hi = _bisect_time(h, u0, times[i_m], times[i_m + 1], -target)
    # generic case: one transversal crossing between neighbouring samples
    t_plus = t_minus if i_p == i_m + 1 else times[i_p]
    before = np.flatnonzero(sg[:i_m] >= 0)
    t_prev = times[before[-1]] if before.size else 0.0
    after = np.flatnonzero(sg[i_p:] <= 0)
    t_next = times[i_p + after[0]] if after.size else 1.0
    delta = min((t_minus - t_prev) / 2, (t_next - t_plus) / 2)
    mid = 0.5 * (t_minus + t_plus)
    Jt = restrict_shift(h, t_minus - delta, t_plus + delta)
    zt = h.point_path(*to_hom(u0), [mid])
    zt = complex(zt[0][0, 0] / zt[1][0, 0])
    arc = gamma_arc_of(zt.real)
    ztilde = ExtPoint(zt.real, 0.0)
    if target < 0:
        Jt = reverse(Jt)
    if arc == "01":
        J, zhat, M = Jt, ztilde, None
    else:
        a, b, c = {"1inf": (1.0, INF, 0.0), "inf0": (INF, 0.0, 1.0)}[arc]
        M = three_point_map(a, b, c)
        J = conjugate(M, Jt)
        zhat = M(ztilde)
        zhat = ExtPoint(zhat.re, 0.0)
    info = {"z0": z0, "u0": u0, "t_minus": t_minus, "t_plus": t_plus, "delta": delta,
            "sigma0": mid, "arc": arc, "conjugated": M is not None, "flipped": target < 0,
            "eject_conjugated": getattr(h, "conjugated", False)}
    res = CrossingResult(J=J, zhat=zhat, info=info)
    res.info["audit"] = certify_crossing(res)
    ctx._crossing = res
    return res


def certify_crossing(res: CrossingResult, steps=(1e-3, 1e-4), near: float = 1e-9) -> dict:
    J, zhat = res.J, res.zhat
    out = {"ok": True}
    cls = []
    for dt in steps:
        ts = np.linspace(-1.0, 1.0, int(round(2 / dt)) + 1)
        P, Q = J.trajectory(zhat, ts)
        z, inf = hom_to_complex(P, Q)
        nr = (~inf) & (np.abs(z.imag) < near)
        bad = nr & ~((z.real > 0) & (z.real < 1))
        out[f"near_real_outside_{dt:g}"] = int(bad.sum())
        out[f"near_real_count_{dt:g}"] = int(nr.sum())
        cls.append(crossing_arcs(P, Q))
        if bad.any() or inf.any():
            out["ok"] = False
        if dt == steps[-1]:
            out["start_side"] = float(gamma_side(P[0], Q[0]))
            out["end_side"] = float(gamma_side(P[-1], Q[-1]))
    out["arcs"] = cls[-1]
    out["arcs_agree"] = all(c == cls[0] for c in cls)
    out["hemispheres_ok"] = out["start_side"] < 0 < out["end_side"]
    out["identity_at_0"] = float(chordal_hom(*J.trajectory(zhat, [0.0]), *to_hom(zhat))[0])
    out["ok"] = bool(out["ok"] and out["arcs_agree"] and out["hemispheres_ok"]
                     and all(a == "01" for a in cls[-1]))
    return out
