"""The continuum chi built from three trajectories, accessibility paths,
4-transitivity, loop words in the thrice punctured sphere and the figure-8
certificate."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .crossing import (CrossingResult, PlanarCurve, crossing_arcs, crossing_isotopy,
                       eject_from_gamma, polyline_segments, segment_hits)
from .geom_core import (INF, ONE, ZERO, ExtPoint, chordal_hom, chordal_to_inf, ext,
                        gamma_arc_of, gamma_side, hom_to_complex, hom_to_sphere, to_hom)
from .isotopy import (Isotopy, SphereMap, backtrack, chain, concat_through_meeting, conjugate,
                      identity_isotopy, piecewise, verification_points)
from .mobius import T_01, T_0INF, three_point_map
from .trajectory import default_context, fundamental_isotopy, two_ended_isotopy


class MeetingNotFound(RuntimeError):
    def __init__(self, msg, nearest=None):
        super().__init__(msg)
        self.nearest = nearest


class PunctureCrossingError(ValueError):
    pass


class GrazingError(ValueError):
    pass


# ---------------------------------------------------------------- the carrier of chi

class ChiCarrier(Isotopy):
    """K_t: backward fundamental piece, the crossing isotopy J, forward piece."""

    def __init__(self, J: Isotopy, Iminus: Isotopy, Iplus: Isotopy):
        self.J, self.Im, self.Ip = J, Iminus, Iplus
        self.Jm, self.Jp = J.at(-1.0), J.at(1.0)
        self.t0, self.t1 = -1.0 - Iminus.t1, 1.0 + Iplus.t1
        self.name = "chi-carrier"

    def at(self, t) -> SphereMap:
        self.check_time(t)
        t = float(t)
        if t < -1:
            return self.Im.at(-1.0 - t).compose(self.Jm)
        if t > 1:
            return self.Ip.at(t - 1.0).compose(self.Jp)
        return self.J.at(t)

    def point_path(self, p, q, times):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        self.check_time(times)
        P = np.empty((len(times), np.size(p)), dtype=complex)
        Q = np.empty_like(P)
        lo, hi = times < -1, times > 1
        mid = ~(lo | hi)
        if lo.any():
            P[lo], Q[lo] = self.Im.point_path(*self.Jm.apply_h(p, q), -1.0 - times[lo])
        if hi.any():
            P[hi], Q[hi] = self.Ip.point_path(*self.Jp.apply_h(p, q), times[hi] - 1.0)
        if mid.any():
            P[mid], Q[mid] = self.J.point_path(p, q, times[mid])
        return P, Q


@dataclass
class ContinuumChi:
    crossing: CrossingResult
    K: ChiCarrier
    zhat: ExtPoint
    zminus: ExtPoint
    zplus: ExtPoint
    builds: tuple
    times: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    audit: dict = field(default_factory=dict)
    legs: dict = field(default_factory=dict, repr=False)

    def planar(self):
        return hom_to_complex(self.P, self.Q)[0]

    def segments(self, clip: float = 1e4):
        z, inf = hom_to_complex(self.P, self.Q)
        z = np.where(inf, np.inf, z)
        return polyline_segments(z, self.times, clip)

    def tree(self):
        return cKDTree(hom_to_sphere(self.P, self.Q))


def _sample_times(t0, t1, per_unit, fine_span=1.0, fine_step=1e-3):
    coarse = np.linspace(t0, t1, max(2, int(math.ceil((t1 - t0) * per_unit)) + 1))
    fine = np.arange(-fine_span, fine_span + fine_step / 2, fine_step)
    return np.unique(np.concatenate([coarse, fine[(fine >= t0) & (fine <= t1)]]))


def build_chi(ctx=None, K: int = 8, per_unit: int = 50) -> ContinuumChi:
    ctx = ctx or default_context()
    cached = getattr(ctx, "_chi", None)
    if cached is not None and cached.audit.get("K") == K:
        return cached
    cr = crossing_isotopy(ctx)
    J, zhat = cr.J, cr.zhat
    zm, zp = J.at(-1.0)(zhat), J.at(1.0)(zhat)
    Im_, bm = fundamental_isotopy(zm, K, ctx)
    Ip_, bp = fundamental_isotopy(zp, K, ctx)
    Kiso = ChiCarrier(J, Im_, Ip_)
    times = _sample_times(Kiso.t0, Kiso.t1, per_unit)
    P, Q = Kiso.trajectory(zhat, times)

    p, q = verification_points(100)
    splice = []
    for t, left in ((-1.0, Im_.at(0.0).compose(Kiso.Jm)), (1.0, Ip_.at(0.0).compose(Kiso.Jp))):
        right = J.at(t)
        splice.append(float(np.max(chordal_hom(*left.apply_h(p, q), *right.apply_h(p, q)))))
    z, inf = hom_to_complex(P, Q)
    near = (~inf) & (np.abs(z.imag) < 1e-9)
    steps = chordal_hom(P[1:], Q[1:], P[:-1], Q[:-1])
    audit = {
        "K": K,
        "splice": splice,
        "end_to_inf": [float(chordal_to_inf(P[0], Q[0])), float(chordal_to_inf(P[-1], Q[-1]))],
        "max_gap": float(steps.max()),
        "near_real_in_01": bool(np.all((z.real[near] > 0) & (z.real[near] < 1))),
        "gamma_arcs": crossing_arcs(P, Q),
    }
    audit["ok"] = bool(max(splice) < 1e-8 and max(audit["end_to_inf"]) < 0.1
                       and audit["near_real_in_01"] and all(a == "01" for a in audit["gamma_arcs"]))
    chi = ContinuumChi(crossing=cr, K=Kiso, zhat=zhat, zminus=zm, zplus=zp, builds=(bm, bp),
                       times=times, P=P, Q=Q, audit=audit)
    ctx._chi = chi
    return chi


def separation_check(chi: ContinuumChi, n: int = 100, seed: int = 0, tol: float = 1e-3) -> dict:
    """Random polylines from (inf, 0) to (1, inf) must come within tol of chi."""
    rng = np.random.default_rng(seed)
    a0, a1, _, _ = chi.segments()
    tree = chi.tree()
    hits, dists = 0, []
    for _ in range(n):
        verts = np.concatenate([[rng.uniform(-5.0, -0.1)],
                                rng.uniform(-6, 6, 3) + 1j * rng.uniform(-6, 6, 3),
                                [rng.uniform(1.1, 6.0)]])
        s = np.arange(len(verts), dtype=float)
        b0, b1, sb0, sb1 = polyline_segments(verts, s)
        if segment_hits(b0, b1, sb0, sb1, a0, a1, np.zeros(len(a0)), np.ones(len(a0))):
            d = 0.0
        else:
            fine = np.linspace(0, len(verts) - 1, 4000)
            path = np.interp(fine, s, verts.real) + 1j * np.interp(fine, s, verts.imag)
            d = float(tree.query(hom_to_sphere(*to_hom(path)))[0].min())
        dists.append(d)
        hits += d <= tol
    return {"n": n, "hits": int(hits), "max_dist": float(max(dists)), "ok": hits == n}


# ---------------------------------------------------------------- meetings of trajectories

def _traj_z(iso: Isotopy, z: ExtPoint, times):
    P, Q = iso.trajectory(z, np.asarray(times, dtype=float))
    w, inf = hom_to_complex(P, Q)
    return np.where(inf, np.inf, w)


def polish_meeting(A: Isotopy, za: ExtPoint, B: Isotopy, zb: ExtPoint, s: float, t: float,
                   h: float = 1e-6, iters: int = 40):
    """Newton on A_s(za) = B_t(zb); returns (s, t, chordal residual)."""
    def clamp(iso, x):
        return float(np.clip(x, iso.t0 + h, iso.t1 - h))

    s, t = clamp(A, s), clamp(B, t)
    for _ in range(iters):
        a = _traj_z(A, za, [s - h, s, s + h])
        b = _traj_z(B, zb, [t - h, t, t + h])
        F = a[1] - b[1]
        da, db = (a[2] - a[0]) / (2 * h), (b[2] - b[0]) / (2 * h)
        Jm = np.array([[da.real, -db.real], [da.imag, -db.imag]])
        step = np.linalg.lstsq(Jm, -np.array([F.real, F.imag]), rcond=None)[0]
        step = np.clip(step, -0.05, 0.05)
        s, t = clamp(A, s + step[0]), clamp(B, t + step[1])
        if abs(step[0]) + abs(step[1]) < 1e-14:
            break
    a = A.trajectory(za, [s])
    b = B.trajectory(zb, [t])
    return s, t, float(chordal_hom(a[0], a[1], b[0], b[1])[0])


def find_meetings(A: Isotopy, za: ExtPoint, a_times, B: Isotopy, zb: ExtPoint, b_times,
                  b_segments=None, tol: float = 1e-9):
    """All polished meetings (s, t) of the two sampled trajectories."""
    za_pts = _traj_z(A, za, a_times)
    segs_a = polyline_segments(za_pts, a_times)
    if b_segments is None:
        b_segments = polyline_segments(_traj_z(B, zb, b_times), b_times)
    raw = segment_hits(*segs_a, *b_segments)
    out = []
    for s, t in raw:
        s2, t2, r = polish_meeting(A, za, B, zb, s, t)
        if r < tol:
            out.append((s2, t2, r))
    return out, raw


@dataclass
class Leg:
    """Isotopy on [0, 1] whose endpoint sends z0 to the base point of chi."""
    iso: Isotopy
    z0: ExtPoint
    meeting: tuple
    endpoint: SphereMap


def accessible_leg(z0, chi: ContinuumChi, ctx=None, K: int = 8, per_unit: int = 20) -> Leg:
    ctx = ctx or default_context()
    z0 = ext(z0)
    key = (z0.re, z0.im, z0.infinite)
    if key in chi.legs:
        return chi.legs[key]
    if z0.infinite or z0 in (ZERO, ONE):
        raise ValueError("accessible paths need a point other than 0, 1, inf")
    if z0.im == 0.0:
        e = eject_from_gamma(z0, ctx)
        inner = accessible_leg(e.at(1.0)(z0), chi, ctx, K, per_unit)
        iso = chain(e, inner.iso)
        leg = Leg(iso, z0, inner.meeting, inner.endpoint.compose(e.at(1.0)))
        chi.legs[key] = leg
        return leg
    T = two_ended_isotopy(z0, ZERO, ONE, K, ctx)
    ts = np.linspace(T.t0, T.t1, int(math.ceil((T.t1 - T.t0) * per_unit)) + 1)
    meets, raw = find_meetings(T, z0, ts, chi.K, chi.zhat, chi.times, chi.segments())
    if not meets:
        near = float(chi.tree().query(hom_to_sphere(*T.trajectory(z0, ts)))[0].min())
        raise MeetingNotFound(f"trajectory of {z0} never meets chi ({len(raw)} raw hits)", near)
    a, b, r = min(meets, key=lambda m: abs(m[0]))
    iso = concat_through_meeting(T, a, chi.K, b, identity_isotopy())
    leg = Leg(iso, z0, (a, b, r), iso.endpoint)
    chi.legs[key] = leg
    return leg


def accessible_path(z0, w0, chi: ContinuumChi | None = None, ctx=None, K: int = 8) -> Isotopy:
    """Isotopy on [0, 1] from the identity to a map sending z0 to w0."""
    ctx = ctx or default_context()
    chi = chi or build_chi(ctx, K)
    z0, w0 = ext(z0), ext(w0)
    lz = accessible_leg(z0, chi, ctx, K)
    lw = accessible_leg(w0, chi, ctx, K)
    iso = chain(lz.iso, backtrack(lw.iso))
    iso.endpoint = lw.endpoint.inverse().compose(lz.endpoint)
    iso.residual = float(chordal_hom(*iso.endpoint.apply_h(*to_hom(z0)), *to_hom(w0))[0])
    p, q = to_hom([ZERO, ONE, INF])
    iso.pole_residual = float(np.max(chordal_hom(*iso.endpoint.apply_h(p, q), p, q)))
    iso.meetings = (lz.meeting, lw.meeting)
    return iso


@dataclass
class TransitivityResult:
    map: SphereMap
    residual: float
    path: Isotopy
    z0: ExtPoint
    w0: ExtPoint


def four_transitivity(src, dst, chi: ContinuumChi | None = None, ctx=None) -> TransitivityResult:
    src, dst = [ext(v) for v in src], [ext(v) for v in dst]
    if len(src) != 4 or len(dst) != 4:
        raise ValueError("need two 4-tuples")
    for tup in (src, dst):
        for i in range(4):
            for j in range(i):
                if chordal_hom(*to_hom(tup[i]), *to_hom(tup[j]))[0] < 1e-12:
                    raise ValueError("tuple points must be distinct")
    Mabc = three_point_map(*src[:3])
    Mpqr = three_point_map(*dst[:3])
    z0, w0 = Mabc(src[3]), Mpqr(dst[3])
    path = accessible_path(z0, w0, chi, ctx)
    f = SphereMap([Mabc, path.endpoint, Mpqr.inverse()])
    ps, qs = to_hom(src)
    pd, qd = to_hom(dst)
    res = float(np.max(chordal_hom(*f.apply_h(ps, qs), pd, qd)))
    return TransitivityResult(map=f, residual=res, path=path, z0=z0, w0=w0)


# ---------------------------------------------------------------- loop words

ARCS = ("01", "1inf", "inf0")


def free_reduce(letters) -> list:
    out = []
    for a, e in letters:
        if out and out[-1][0] == a and out[-1][1] == -e:
            out.pop()
        else:
            out.append((a, e))
    return out


@dataclass
class LoopWord:
    """Signed letters named by the meridian arc crossed; the tree arc gives none."""
    letters: list
    tree: str = "inf0"

    def __post_init__(self):
        self.letters = free_reduce([(a, int(e)) for a, e in self.letters])

    def __len__(self):
        return len(self.letters)

    def __eq__(self, other):
        return isinstance(other, LoopWord) and self.tree == other.tree and self.letters == other.letters

    def inverse(self) -> "LoopWord":
        return LoopWord([(a, -e) for a, e in reversed(self.letters)], self.tree)

    def cyclic(self) -> list:
        w = list(self.letters)
        while len(w) > 1 and w[0][0] == w[-1][0] and w[0][1] == -w[-1][1]:
            w = w[1:-1]
        return w

    def cyclically_equal(self, other: "LoopWord") -> bool:
        a, b = self.cyclic(), other.cyclic()
        if len(a) != len(b):
            return False
        return not a or any(a[i:] + a[:i] == b for i in range(len(a)))

    def __str__(self):
        if not self.letters:
            return "1"
        return " ".join(f"x[{a}]" + ("" if e > 0 else "^-1") for a, e in self.letters)

    def to_list(self):
        return [[a, e] for a, e in self.letters]


def _hom_refiner(func):
    """Adapt a planar curve evaluator to homogeneous output."""
    def f(s):
        return to_hom(np.atleast_1d(func(np.atleast_1d(s))))
    return f


def loop_word_h(P, Q, params=None, refine=None, tree: str = "inf0", punct_tol: float = 1e-6,
                close_tol: float = 1e-9) -> LoopWord:
    """Crossing-sequence word of a closed sampled path given homogeneously.

    refine(s) -> (p, q) re-evaluates the loop at parameters and is used to
    pin down each crossing between two samples.
    """
    if tree not in ARCS:
        raise ValueError(f"tree must be one of {ARCS}")
    P, Q = np.asarray(P, dtype=complex), np.asarray(Q, dtype=complex)
    params = np.arange(len(P), dtype=float) if params is None else np.asarray(params, dtype=float)
    if chordal_hom(P[0], Q[0], P[-1], Q[-1]) > close_tol:
        raise ValueError("loop is not closed")
    pp, pq = to_hom([ZERO, ONE, INF])
    dp = chordal_hom(P[:, None], Q[:, None], pp[None, :], pq[None, :])
    if dp.min() < punct_tol:
        raise PunctureCrossingError("loop passes within tolerance of a reference point")
    base_on_gamma = abs(gamma_side(P[0], Q[0])) < 1e-12
    if base_on_gamma:
        z, inf = hom_to_complex(P[:1], Q[:1])
        if inf[0] or gamma_arc_of(z[0].real) != tree:
            raise ValueError("a base point on the meridian must lie on the tree arc")
    sd = gamma_side(P, Q)
    sg = np.sign(np.where(np.abs(sd) < 1e-15, 0.0, sd))
    nz = np.flatnonzero(sg != 0)
    letters = []
    for i, j in zip(nz[:-1], nz[1:]):
        if sg[i] == sg[j]:
            if j > i + 1:
                raise GrazingError(f"loop touches the meridian without crossing near s={params[i]:g}")
            continue
        if refine is not None and j == i + 1:
            lo, hi = params[i], params[j]
            for _ in range(60):
                m = 0.5 * (lo + hi)
                pm, qm = refine(m)
                if np.sign(gamma_side(pm, qm)[0]) == sg[i]:
                    lo = m
                else:
                    hi = m
                if hi - lo < 1e-13 * max(1.0, abs(m)):
                    break
            pm, qm = refine(0.5 * (lo + hi))
        else:
            k = i + int(np.argmin(np.abs(sd[i:j + 1])))
            pm, qm = P[k:k + 1], Q[k:k + 1]
        if np.min(chordal_hom(pm[0], qm[0], pp, pq)) < punct_tol:
            raise PunctureCrossingError("crossing within tolerance of a reference point")
        z, inf = hom_to_complex(pm, qm)
        arc = gamma_arc_of(z[0].real)
        if arc != tree:
            letters.append((arc, 1 if sg[j] > 0 else -1))
    return LoopWord(letters, tree)


def loop_word(loop, basepoint=None, tree: str = "inf0", **kw) -> LoopWord:
    """Word of a closed PlanarCurve (or sampled (P, Q) pair) read from its first sample."""
    if isinstance(loop, PlanarCurve):
        if not loop.closed:
            raise ValueError("loop must be a closed curve")
        pts = np.append(loop.points, loop.points[:1])
        params = np.append(loop.params, loop.params[0] + loop.period)
        if basepoint is not None and abs(complex(ext(basepoint).z) - pts[0]) > 1e-9:
            raise ValueError("loop does not start at the base point")
        P, Q = to_hom(pts)
        refine = _hom_refiner(lambda s: loop.func(np.asarray(s)))
        return loop_word_h(P, Q, params, refine, tree, **kw)
    P, Q = loop
    return loop_word_h(P, Q, tree=tree, **kw)


def figure8_prototype(w: float, n: int = 2048) -> PlanarCurve:
    """Anticlockwise circle around 1, then clockwise circle around 0, both through w.

    The order is the one traced by F: the reversed phi-loop first, then the psi-loop."""
    if not 0 < w < 1:
        raise ValueError("base point must lie in (0, 1)")

    def f(s):
        s = np.asarray(s, dtype=float) % 1.0
        first = 1 - (1 - w) * np.exp(4j * np.pi * s)
        second = w * np.exp(-2j * np.pi * (2 * s - 1))
        return np.where(s < 0.5, first, second)

    return PlanarCurve.sample(f, 0.0, 1.0, n, closed=True)


# ---------------------------------------------------------------- figure-8 certificate

@dataclass
class FigureEightCertificate:
    w: ExtPoint
    F: Isotopy
    fixed_residuals: dict
    word: LoopWord
    oracle: LoopWord
    seams: dict
    ok: bool
    samples: tuple = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {"w": [self.w.re, self.w.im], "fixed_residuals": self.fixed_residuals,
                "word": self.word.to_list(), "oracle": self.oracle.to_list(),
                "word_str": str(self.word), "length": len(self.word),
                "seams": self.seams, "ok": self.ok}


def _gamma_times(chi: ContinuumChi):
    sd = gamma_side(chi.P, chi.Q)
    sg = np.sign(sd)
    idx = np.flatnonzero(sg[:-1] * sg[1:] <= 0)
    return chi.times[idx], chi.times[idx + 1]


def _adaptive_loop(iso: Isotopy, z: ExtPoint, n: int = 4001, max_step: float = 0.01, rounds: int = 8):
    ts = np.linspace(iso.t0, iso.t1, n)
    P, Q = iso.trajectory(z, ts)
    for _ in range(rounds):
        steps = chordal_hom(P[1:], Q[1:], P[:-1], Q[:-1])
        bad = np.flatnonzero(steps > max_step)
        if bad.size == 0:
            break
        mids = 0.5 * (ts[bad] + ts[bad + 1])
        Pm, Qm = iso.trajectory(z, mids)
        ts = np.concatenate([ts, mids])
        order = np.argsort(ts)
        ts, P, Q = ts[order], np.concatenate([P, Pm])[order], np.concatenate([Q, Qm])[order]
    return ts, P, Q


def build_figure_eight(ctx=None, K: int = 8, chi: ContinuumChi | None = None) -> FigureEightCertificate:
    ctx = ctx or default_context()
    chi = chi or build_chi(ctx, K)
    Kc, zhat = chi.K, chi.zhat
    L = conjugate(T_0INF, Kc)
    yhat = T_0INF(zhat)
    lam_times = chi.times
    g_lo, g_hi = _gamma_times(chi)
    t_first, t_last = float(g_lo[0]), float(g_hi[-1])

    chi_segs = chi.segments()
    before = lam_times[lam_times <= t_first]
    after = lam_times[lam_times >= t_last]
    m_before, _ = find_meetings(L, yhat, before, Kc, zhat, chi.times, chi_segs)
    m_after, _ = find_meetings(L, yhat, after, Kc, zhat, chi.times, chi_segs)
    m_before = [m for m in m_before if m[0] <= t_first]
    m_after = [m for m in m_after if m[0] >= t_last]
    if not m_before or not m_after:
        raise MeetingNotFound("the trajectory of y-hat misses chi on one side",
                              {"before": len(m_before), "after": len(m_after)})
    t_minus, b, rb = max(m_before, key=lambda m: m[0])
    t_plus, a, ra = min(m_after, key=lambda m: m[0])
    # a Gamma time of chi between a and b; the crossing time 0 when possible
    if min(a, b) < 0 < max(a, b):
        c = 0.0
    else:
        cand = [0.5 * (x + y) for x, y in zip(g_lo, g_hi) if min(a, b) < x < max(a, b)]
        if not cand:
            raise MeetingNotFound("no meridian time of chi between the seams")
        c = cand[0]
    w = Kc.at(c)(zhat)
    w = ExtPoint(w.re, 0.0)
    phi = piecewise([(Kc, c, b), (L, t_minus, t_plus), (Kc, a, c)])
    phi_close = float(chordal_hom(*phi.endpoint.apply_h(*to_hom(w)), *to_hom(w))[0])

    wprime = T_01(w)
    h = accessible_path(w, wprime, chi, ctx, K)
    h1 = h.endpoint
    psi = conjugate(SphereMap([T_01, h1.inverse()]), phi)
    F = chain(backtrack(phi), psi)
    F1 = F.at(1.0)
    fixed = {}
    for name, pt in (("w", w), ("0", ZERO), ("1", ONE), ("inf", INF)):
        fixed[name] = float(chordal_hom(*F1.apply_h(*to_hom(pt)), *to_hom(pt))[0])

    ts, P, Q = _adaptive_loop(F, w)
    # close the sampled loop exactly at the base point for the word reader
    P[-1], Q[-1] = to_hom(w)[0][0], to_hom(w)[1][0]

    word = loop_word_h(P, Q, ts, lambda s: F.trajectory(w, np.atleast_1d(s)), tree="01")
    oracle = loop_word(figure8_prototype(w.re), tree="01")
    seams = {"t_minus": t_minus, "t_plus": t_plus, "a": a, "b": b, "c": c,
             "meeting_residuals": [rb, ra], "phi_closure": phi_close,
             "h_residual": h.residual, "max_loop_step": float(np.max(
                 chordal_hom(P[1:], Q[1:], P[:-1], Q[:-1])))}
    ok = bool(max(fixed.values()) < 1e-6 and word == oracle and len(word) == 2)
    return FigureEightCertificate(w=w, F=F, fixed_residuals=fixed, word=word, oracle=oracle,
                                  seams=seams, ok=ok, samples=(ts, P, Q))
