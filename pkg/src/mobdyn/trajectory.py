"""The inductive isotopy dragging a point to infinity while 1 is renormalized,
its two-ended version, and trajectory sampling."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .cone_calculus import (ConeConstants, choose_alpha, escape_times, find_cone_constants,
                            stable_graph, stable_graph_sigma, stable_manifold_angle)
from .geom_core import (INF, ONE, ZERO, ExtPoint, axis_angle, chordal_hom, ext, from_hom,
                        hom_to_complex, normalize_hom, to_hom)
from .isotopy import (ExtensionIsotopy, Isotopy, SphereMap, conjugate, extension_isotopy,
                      make_model_diffeo, reverse)
from .mobius import MobiusMap, swap_map


class FundamentalError(RuntimeError):
    pass


class SaddleContext:
    """A model map, its extension isotopy g_t and cached cone data."""

    def __init__(self, kind: str = "shear", eps: float = 0.5, R: float = 4.0, seed: int = 0):
        self.kind, self.eps, self.R, self.seed = kind, eps, R, seed
        self.h = make_model_diffeo(kind, eps, R)
        self.ext: ExtensionIsotopy = extension_isotopy(self.h)
        self.g = self.ext.at(1.0)
        self.lam = self.ext.lam
        self._cones = {}
        self._graphs = {}
        self._ws = {}

    def cone_constants(self, alpha: float) -> ConeConstants:
        if alpha not in self._cones:
            c = find_cone_constants(self.ext, alpha, seed=self.seed)
            if c.tau is None:
                raise FundamentalError("endpoint of the extension isotopy is not a saddle")
            self._cones[alpha] = c
        return self._cones[alpha]

    def stable(self, rho: float, bound: float):
        # the sampled graph does not depend on the bound; only sigma does
        if rho not in self._graphs:
            self._graphs[rho] = stable_graph(self.g, rho, math.inf, lam=self.lam)
        sg = self._graphs[rho]
        return stable_graph_sigma(sg, bound)

    def w_s_angle(self, r: float, rho0: float) -> float:
        key = (r, rho0)
        if key not in self._ws:
            self._ws[key] = stable_manifold_angle(self.g, r, rho0, lam=self.lam)
        return self._ws[key]

    def meta(self) -> dict:
        return {"model": self.kind, "eps": self.eps, "R": self.R, "seed": self.seed}


@lru_cache(maxsize=8)
def default_context(kind: str = "shear", eps: float = 0.5, R: float = 4.0, seed: int = 0):
    return SaddleContext(kind, eps, R, seed)


@dataclass
class Stage:
    r: float
    tau: float
    n: int
    N: int                 # cumulative count after this stage
    z: complex             # z_k = f_{N_k}(z0)
    w: complex
    u: complex             # u_k = f_{N_k}(1)
    v: complex

    @property
    def M(self) -> MobiusMap:
        return MobiusMap.scaling(self.r * complex(math.cos(self.tau), math.sin(self.tau)))


@dataclass
class FundamentalBuild:
    z0: ExtPoint
    stages: list
    rho0: float
    rho1: float
    r1: float
    alpha: float
    beta_minus: float
    beta_plus: float
    tau: float
    delta: float
    sigma: float
    rho: float
    n0: int
    audit: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.stages[-1].N if self.stages else 0

    def decay_bound(self, k: int) -> float:
        return (self.rho1 / self.rho0) ** k

    def to_dict(self) -> dict:
        return {
            "z0": [self.z0.re, self.z0.im], "rho0": self.rho0, "rho1": self.rho1,
            "r1": self.r1, "alpha": self.alpha, "beta_minus": self.beta_minus,
            "beta_plus": self.beta_plus, "tau": self.tau, "delta": self.delta,
            "sigma": self.sigma, "rho": self.rho, "n0": self.n0,
            "stages": [{"r": s.r, "tau": s.tau, "n": s.n, "N": s.N} for s in self.stages],
            "audit": {k: v for k, v in self.audit.items() if not isinstance(v, np.ndarray)},
        }


def _g_orbit(g: SphereMap, z: complex, n: int) -> list:
    """[z, g(z), ..., g^n(z)] for one finite point."""
    out = [complex(z)]
    p, q = to_hom(complex(z))
    for _ in range(n):
        p, q = g.apply_h(p, q)
        out.append(complex(p[0] / q[0]))
    return out


def build_fundamental(z0, K: int = 8, ctx: SaddleContext | None = None) -> FundamentalBuild:
    z0 = ext(z0)
    if z0.infinite or z0.im == 0.0:
        raise FundamentalError("z0 must be finite and off the meridian")
    ctx = ctx or default_context()
    g = ctx.g
    R0, th0 = abs(z0.z), math.atan2(z0.im, z0.re)
    alpha = choose_alpha(th0)
    c = ctx.cone_constants(alpha)
    bound = min(c.tau, c.beta_minus)
    base = min(c.delta, c.rho, 1.0)
    sg = ctx.stable(base, bound)
    sigma = sg.sigma
    if sigma <= 0:
        raise FundamentalError("stable manifold leaves the cone on every sampled radius")
    rho0 = min(c.delta, c.rho, sigma, 1.0) / 2
    r1 = min(rho0, rho0 / R0) / 2
    rho1 = r1 * R0

    # n0 over a sample of K0: the two arcs of the circle of radius rho1 outside C_alpha
    a = np.linspace(alpha, math.pi - alpha, 256)
    k0 = rho1 * np.exp(1j * np.concatenate([a, -a]))
    n0 = int(escape_times(g, k0, rho0).max()) + 2

    stages = []
    zk, uk = z0.z, 1.0 + 0j
    N = 0
    for k in range(K):
        if k == 0:
            r = r1
            tau = ctx.w_s_angle(r1, rho0)
        else:
            r = rho1 / abs(zk)
            tau = ctx.w_s_angle(r * abs(uk), rho0) - math.atan2(uk.imag, uk.real)
        if abs(tau) > bound:
            raise FundamentalError(f"stage {k + 1}: rotation {tau:.3g} exceeds min(tau, beta-)")
        m = r * complex(math.cos(tau), math.sin(tau))
        w, v = m * zk, m * uk
        n = int(escape_times(g, [w], rho0)[0])
        if n > n0:
            raise FundamentalError(f"stage {k + 1}: escape time {n} exceeds n0 = {n0}")
        zs = _g_orbit(g, w, n)
        us = _g_orbit(g, v, n)
        N += n
        stages.append(Stage(r=r, tau=tau, n=n, N=N, z=zs[-1], w=w, u=us[-1], v=v))
        zk, uk = zs[-1], us[-1]

    b = FundamentalBuild(z0=z0, stages=stages, rho0=rho0, rho1=rho1, r1=r1, alpha=alpha,
                         beta_minus=c.beta_minus, beta_plus=c.beta_plus, tau=c.tau,
                         delta=c.delta, sigma=sigma, rho=c.rho, n0=n0)
    ws = np.array([s.w for s in stages])
    vs = np.array([s.v for s in stages])
    b.audit = {
        "w_radius_err": float(np.max(np.abs(np.abs(ws) - rho1) / rho1)),
        "w_outside_alpha": bool(np.all(axis_angle(ws) > alpha)),
        "v_on_Ws": float(max(abs(np.angle(s.v) - ctx.w_s_angle(abs(s.v), rho0)) for s in stages)),
        "n_le_n0": bool(all(s.n <= n0 for s in stages)),
        "r_lt_1": bool(all(s.r < 1 for s in stages[1:])),
        "decay_ok": bool(all(abs(s.v) <= b.decay_bound(k + 1) * (1 + 1e-9) or k == 0
                             for k, s in enumerate(stages))),
        "v_abs": np.abs(vs),
    }
    return b


class FundamentalIsotopy(Isotopy):
    """I_t = Mbar(f_t(1)) o f_t on [0, N_K]."""

    def __init__(self, build: FundamentalBuild, ctx: SaddleContext):
        self.build, self.ctx = build, ctx
        self.t0, self.t1, self.name = 0.0, float(build.N), "fundamental"
        self.g = ctx.g
        # f_{N_k} as composition lists, k = 0..K
        self._fN = [SphereMap()]
        for s in build.stages:
            self._fN.append(SphereMap([self._fN[-1], s.M, self.g.power(s.n)]))
        self._starts = np.array([0] + [s.N for s in build.stages])

    def locate(self, t: float):
        """(stage index k, integer steps j, fraction s) with f_t = g_s g^j M_{k+1} f_{N_k}."""
        if t <= 0:
            return None
        fl = math.floor(t)
        s = t - fl
        if s == 0.0:
            fl -= 1
            s = 1.0
        k = int(np.searchsorted(self._starts, fl, side="right") - 1)
        k = min(k, len(self.build.stages) - 1)
        return k, fl - int(self._starts[k]), s

    def f_at(self, t: float) -> SphereMap:
        self.check_time(t)
        loc = self.locate(t)
        if loc is None:
            return SphereMap()
        k, j, s = loc
        st = self.build.stages[k]
        return SphereMap([self._fN[k], st.M, self.g.power(j), self.ctx.ext.at(s)])

    def at(self, t) -> SphereMap:
        f = self.f_at(float(t))
        w = f(ONE)
        if w.infinite or w.z == 0:
            raise FundamentalError("companion point degenerated")
        return SphereMap([f, MobiusMap.scaling(1 / w.z)])

    def at_split(self, k: int, j: int, s: float) -> SphereMap:
        """Evaluate I with an exact integer stage position."""
        st = self.build.stages[k]
        f = SphereMap([self._fN[k], st.M, self.g.power(j), self.ctx.ext.at(s)])
        w = f(ONE)
        return SphereMap([f, MobiusMap.scaling(1 / w.z)])

    def point_path(self, p, q, times):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        self.check_time(times)
        p = np.concatenate([np.asarray(p, dtype=complex), [1.0 + 0j]])
        q = np.concatenate([np.asarray(q, dtype=complex), [1.0 + 0j]])
        P = np.empty((len(times), len(p)), dtype=complex)
        Q = np.empty_like(P)
        locs = [self.locate(float(t)) for t in times]
        zero = np.array([loc is None for loc in locs])
        P[zero], Q[zero] = p, q
        groups = {}
        for i, loc in enumerate(locs):
            if loc is not None:
                groups.setdefault(loc[:2], []).append(i)
        stage_pts = {}
        for (k, j), idx in sorted(groups.items()):
            if k not in stage_pts:
                pk, qk = self._fN[k].apply_h(p, q)
                stage_pts[k] = [self.build.stages[k].M.apply_h(pk, qk)]
            seq = stage_pts[k]
            while len(seq) <= j:
                seq.append(self.g.apply_h(*seq[-1]))
            base = seq[j]
            ss = np.array([locs[i][2] for i in idx])
            Pi, Qi = self.ctx.ext.point_path(base[0], base[1], ss)
            P[idx], Q[idx] = Pi, Qi
        # renormalize so the companion (last column) sits at 1
        pc, qc = P[:, -1:], Q[:, -1:]
        P, Q = normalize_hom(P[:, :-1] * qc, Q[:, :-1] * pc)
        return P, Q


def fundamental_isotopy(z0, K: int = 8, ctx: SaddleContext | None = None):
    ctx = ctx or default_context()
    b = build_fundamental(z0, K, ctx)
    return FundamentalIsotopy(b, ctx), b


def sample_times(iso: Isotopy, per_unit: int = 20, lo=None, hi=None) -> np.ndarray:
    lo = iso.t0 if lo is None else lo
    hi = iso.t1 if hi is None else hi
    n = max(2, int(math.ceil((hi - lo) * per_unit)) + 1)
    return np.linspace(lo, hi, n)


def splice_residuals(iso: FundamentalIsotopy, npts: int = 100, seed: int = 3) -> list:
    """Chordal gap between the two evaluations of I at each stage boundary."""
    from .isotopy import verification_points
    p, q = verification_points(npts, seed)
    out = []
    for k in range(1, len(iso.build.stages)):
        prev = iso.build.stages[k - 1]
        left = iso.at_split(k - 1, prev.n - 1, 1.0)
        right = iso.at_split(k, 0, 0.0)
        out.append(float(np.max(chordal_hom(*left.apply_h(p, q), *right.apply_h(p, q)))))
    return out


def fixed_point_residual(iso: Isotopy, times) -> float:
    p, q = to_hom([ZERO, ONE, INF])
    P, Q = iso.point_path(p, q, times)
    return float(np.max(chordal_hom(P, Q, p[None, :], q[None, :])))


# ---------------------------------------------------------------- trajectories

@dataclass
class Trajectory:
    times: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    @classmethod
    def of(cls, iso: Isotopy, z, times, meta=None):
        P, Q = iso.trajectory(z, times)
        return cls(times, P, Q, dict(meta or {}))

    @classmethod
    def from_points(cls, times, pts, meta=None):
        p, q = to_hom(list(pts))
        return cls(times, p, q, dict(meta or {}))

    def __len__(self):
        return len(self.times)

    def points(self):
        return from_hom(self.P, self.Q)

    def complex(self):
        return hom_to_complex(self.P, self.Q)

    def imag_sign(self):
        return np.sign((self.P * np.conj(self.Q)).imag)

    def steps(self):
        return chordal_hom(self.P[1:], self.Q[1:], self.P[:-1], self.Q[:-1])


def omega_limit_estimate(traj: Trajectory, tol: float = 0.05):
    if len(traj) < 10:
        raise ValueError("need at least 10 samples")
    k = int(math.floor(0.75 * len(traj)))
    d = chordal_hom(traj.P[k:], traj.Q[k:], traj.P[-1], traj.Q[-1])
    last = from_hom(traj.P[-1:], traj.Q[-1:])[0]
    return last, ("converged" if np.all(d < tol) else "inconclusive")


# ---------------------------------------------------------------- two-ended isotopy

def _swap_to_inf(b) -> MobiusMap:
    b = ext(b)
    return MobiusMap.identity() if b.infinite else swap_map(INF, b)


class TwoEndedIsotopy(Isotopy):
    """Backward half tends to a, forward half to b."""

    def __init__(self, z0, a, b, K: int = 8, ctx: SaddleContext | None = None):
        z0, a, b = ext(z0), ext(a), ext(b)
        if a == b:
            raise ValueError("a and b must differ")
        if z0.infinite or z0.im == 0.0:
            raise FundamentalError("z0 must be off the meridian")
        ctx = ctx or default_context()
        Tb, Ta = _swap_to_inf(b), _swap_to_inf(a)
        self.fwd_iso, self.fwd_build = fundamental_isotopy(Tb(z0), K, ctx)
        self.bwd_iso, self.bwd_build = fundamental_isotopy(Ta(z0), K, ctx)
        self.fwd = conjugate(Tb, self.fwd_iso)
        self.bwd = conjugate(Ta, reverse(self.bwd_iso))
        self.z0, self.a, self.b = z0, a, b
        self.t0, self.t1 = self.bwd.t0, self.fwd.t1
        self.name = "two-ended"

    def at(self, t) -> SphereMap:
        self.check_time(t)
        return self.fwd.at(t) if t >= 0 else self.bwd.at(t)

    def point_path(self, p, q, times):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        self.check_time(times)
        P = np.empty((len(times), np.size(p)), dtype=complex)
        Q = np.empty_like(P)
        pos = times >= 0
        if pos.any():
            P[pos], Q[pos] = self.fwd.point_path(p, q, times[pos])
        if (~pos).any():
            P[~pos], Q[~pos] = self.bwd.point_path(p, q, times[~pos])
        return P, Q


def two_ended_isotopy(z0, a, b, K: int = 8, ctx: SaddleContext | None = None) -> TwoEndedIsotopy:
    return TwoEndedIsotopy(z0, a, b, K, ctx)
