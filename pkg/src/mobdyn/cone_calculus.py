"""Search-then-audit realizations of the cone constants around a saddle:
(tau, delta), (beta-, beta+, rho), the stable-manifold angle and escape times."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geom_core import ZERO, axis_angle, ext, hom_to_complex, to_hom
from .isotopy import Isotopy, SphereMap

ESCAPE_CAP = 100_000


class ConeSearchError(RuntimeError):
    def __init__(self, msg, sample=None):
        super().__init__(msg)
        self.sample = sample


class EscapeCapExceeded(RuntimeError):
    pass


def _images(f, z):
    """Finite complex images of complex points (inf becomes a huge value)."""
    w, inf = hom_to_complex(*f.apply_h(*to_hom(z)))
    w[inf] = 1e300
    return w


def _outside_sample(rng, n, alpha, rho, rmin_frac=1e-6):
    """Points with 0 < |z| < rho outside the alpha-cone; log-uniform radius."""
    r = rho * np.exp(rng.uniform(math.log(rmin_frac), 0.0, n))
    th = rng.uniform(alpha, math.pi - alpha, n)
    th = np.where(rng.random(n) < 0.5, th, -th)
    # keep a few points hugging the cone edge
    k = max(1, n // 100)
    th[:k] = np.sign(th[:k]) * alpha * (1 + 1e-9)
    return r * np.exp(1j * th)


def _inside_sample(rng, n, beta, rho, rmin_frac=1e-6):
    r = rho * np.exp(rng.uniform(math.log(rmin_frac), 0.0, n))
    th = rng.uniform(-beta, beta, n)
    th = np.where(rng.random(n) < 0.5, th, th + math.pi)
    k = max(1, n // 100)
    th[:k] = beta
    return r * np.exp(1j * th)


def _check_saddle(g, tol=1e-8):
    A = SphereMap.of(g).differential(ZERO)
    lam = A[0, 0]
    ok = (abs(A[0, 1]) <= tol and abs(A[1, 0]) <= tol and 0 < lam < 1
          and abs(A[1, 1] * lam - 1) <= tol)
    if not ok:
        raise ValueError(f"differential at 0 is not a diagonal saddle: {A.tolist()}")
    return lam


def find_tau_delta(g, alpha: float, cap: float = 1.0, n: int = 10_000, seed: int = 0,
                   omega_steps: int = 64, max_halvings: int = 40):
    """Largest grid-verified (tau, delta): z outside C_alpha with |z| < delta keeps
    R_omega(g(z)) outside C_alpha for |omega| < tau."""
    g = SphereMap.of(g)
    _check_saddle(g)
    rng = np.random.default_rng(seed)
    delta = cap
    for _ in range(max_halvings):
        z = _outside_sample(rng, n, alpha, delta)
        ang = axis_angle(_images(g, z))
        margin = float(np.min(ang - alpha))
        if margin > 0:
            tau = margin / 1.1
            w = _images(g, z)
            omegas = np.linspace(-tau, tau, omega_steps + 2)[1:-1]
            ok = all(np.all(axis_angle(w * np.exp(1j * om)) > alpha) for om in omegas)
            if ok:
                return tau, delta
        delta /= 2
    raise ConeSearchError("no (tau, delta) found within the halving budget")


@dataclass
class ConeConstants:
    alpha: float
    beta_minus: float
    beta_plus: float
    rho: float
    tau: float | None = None
    delta: float | None = None
    resolution: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0 < self.beta_minus < self.beta_plus < self.alpha):
            raise ValueError("need 0 < beta- < beta+ < alpha")
        if self.rho <= 0:
            raise ValueError("rho must be positive")


def _linear_betas(f: Isotopy, alpha: float, times):
    """beta_t of the linear problem, min over the time grid."""
    va = np.array([math.cos(alpha), math.sin(alpha)])
    vs = np.array([math.cos(alpha), -math.sin(alpha)])
    out = alpha
    for t in times:
        A = f.at(float(t)).differential(ZERO)
        if abs(A[1, 0]) > 1e-9 * max(1.0, np.abs(A).max()):
            raise ValueError(f"Df_t(0) does not preserve the x-axis at t={t}")
        for v in (va, vs):
            w = A @ v
            out = min(out, float(axis_angle(complex(w[0], w[1]))))
    return out


def _path_angles(f: Isotopy, z, times):
    P, Q = f.point_path(*to_hom(z), times)
    w, inf = hom_to_complex(P, Q)
    ang = axis_angle(w)
    ang[inf] = math.pi / 2
    r = np.abs(w)
    r[inf] = np.inf
    return ang, r


def audit_cone_constants(f: Isotopy, c: ConeConstants, n: int = 10_000, ntimes: int = 101,
                         seed: int = 1) -> dict:
    """Re-check both cone statements on a fresh sample.

    Interior points are those 10% inside every margin: |z| <= 0.9 rho and
    z at least 10% deeper inside the relevant cone or its complement.
    """
    rng = np.random.default_rng(seed)
    times = np.linspace(f.t0, f.t1, ntimes)
    z1 = _outside_sample(rng, n, c.alpha, c.rho)
    a1, _ = _path_angles(f, z1, times)
    bad1 = np.any(a1 <= c.beta_plus, axis=0)
    z2 = _inside_sample(rng, n, c.beta_minus, c.rho)
    a2, _ = _path_angles(f, z2, times)
    bad2 = np.any(a2 > c.beta_plus, axis=0)
    in1 = (np.abs(z1) <= 0.9 * c.rho) & (axis_angle(z1) >= min(1.1 * c.alpha, math.pi / 2))
    in2 = (np.abs(z2) <= 0.9 * c.rho) & (axis_angle(z2) <= 0.9 * c.beta_minus)
    res = {
        "violations": int(bad1.sum() + bad2.sum()),
        "violation_rate": float((bad1.sum() + bad2.sum()) / (2 * n)),
        "interior_violations": int((bad1 & in1).sum() + (bad2 & in2).sum()),
        "n": n, "ntimes": ntimes, "seed": seed,
    }
    res["ok"] = res["interior_violations"] == 0 and res["violation_rate"] <= 1e-3
    bad = np.concatenate([z1[bad1], z2[bad2]])
    res["worst_sample"] = [complex(v) for v in bad[:5]]
    return res


def find_cone_constants(f: Isotopy, alpha: float, cap: float = 1.0, n: int = 10_000,
                        ntimes: int = 101, seed: int = 0, max_halvings: int = 20,
                        with_tau_delta: bool = True) -> ConeConstants:
    if not 0 < alpha < math.pi / 2:
        raise ValueError("alpha must lie in (0, pi/2)")
    times = np.linspace(f.t0, f.t1, ntimes)
    beta_lin = _linear_betas(f, alpha, times)
    rng = np.random.default_rng(seed)
    rho = cap
    last = None
    for _ in range(max_halvings + 1):
        z1 = _outside_sample(rng, n, alpha, rho)
        a1, _ = _path_angles(f, z1, times)
        m1 = float(a1.min())
        if m1 > 0:
            beta_plus = min(m1, beta_lin) / 1.1
            beta_minus = beta_plus / 2
            for _ in range(30):
                z2 = _inside_sample(rng, n, beta_minus, rho)
                a2, _ = _path_angles(f, z2, times)
                if float(a2.max()) <= beta_plus / 1.1:
                    break
                beta_minus /= 2
            else:
                beta_minus = None
            if beta_minus is not None:
                c = ConeConstants(alpha, beta_minus, beta_plus, rho,
                                  resolution={"n": n, "ntimes": ntimes, "seed": seed,
                                              "margin": 0.1})
                audit = audit_cone_constants(f, c, n=n, ntimes=ntimes, seed=seed + 1)
                if audit["ok"]:
                    c.resolution["audit"] = audit
                    if with_tau_delta:
                        g = f.at(f.t1)
                        try:
                            c.tau, c.delta = find_tau_delta(g, alpha, cap=cap, n=n, seed=seed)
                        except ValueError:
                            c.tau = c.delta = None
                    return c
                last = audit["worst_sample"]
        else:
            last = [complex(z1[np.argmin(a1.min(axis=0))])]
        rho /= 2
    raise ConeSearchError("cone constants failed the audit after the shrink budget", last)


# ---------------------------------------------------------------- stable manifold

def stay_budget(lam: float, r: float, rho0: float, n_stay: int = 50) -> int:
    """Iterates used to call an orbit 'staying'. An angle known to double
    precision leaves W^s by about 4e-16 r lam^-n, so the count is the
    precision-limited one; it is at least n_stay whenever that is reachable."""
    if not 0 < lam < 1:
        return n_stay
    reach = math.log(rho0 / (r * 4e-16)) / math.log(1 / lam)
    return max(5, int(reach) - 3)


def _classify(g, z, rho0, n_stay):
    """+1 / -1 for orbits leaving the disk above / below, 0 for staying."""
    z = np.asarray(z, dtype=complex)
    out = np.zeros(z.shape, dtype=int)
    live = np.ones(z.shape, dtype=bool)
    r0 = np.abs(z)
    cur = z.copy()
    for _ in range(n_stay):
        if not live.any():
            break
        cur[live] = _images(g, cur[live])
        esc = live & (np.abs(cur) > rho0)
        out[esc] = np.where(cur[esc].imag >= 0, 1, -1)
        live &= ~esc
    # staying orbits must also have come closer to 0
    stuck = live & (np.abs(cur) >= r0)
    out[stuck] = np.where(cur[stuck].imag >= 0, 1, -1)
    return out


def stable_manifold_angle(g, r: float, rho0: float, n_stay: int = 50, side: int = 1,
                          lam: float | None = None, rounds: int = 40, width: int = 256) -> float:
    """Angle tau with r e^{i tau} on the local stable manifold (right branch;
    side=-1 gives the branch through the negative x-axis, angle measured from pi)."""
    g = SphereMap.of(g)
    if lam is None:
        lam = float(g.differential(ZERO)[0, 0])
    n_eff = stay_budget(lam, r, rho0, n_stay)
    base = 0.0 if side > 0 else math.pi
    sgn = 1 if side > 0 else -1

    def cls(angles):
        return sgn * _classify(g, r * np.exp(1j * (base + np.asarray(angles))), rho0, n_eff)

    lo, hi = -math.pi / 4, math.pi / 4
    c = cls([lo, hi])
    if not (c[0] == -1 and c[1] == 1):
        raise ConeSearchError("no escape-side bracket within |angle| <= pi/4")
    for _ in range(rounds):
        a = np.linspace(lo, hi, width + 2)[1:-1]
        c = cls(a)
        zeros = np.flatnonzero(c == 0)
        if zeros.size:
            return float(sgn * a[zeros[zeros.size // 2]])
        up = np.flatnonzero(c == 1)
        i = up[0] if up.size else len(a)
        lo_new = a[i - 1] if i > 0 else lo
        hi_new = a[i] if i < len(a) else hi
        lo, hi = lo_new, hi_new
        if hi - lo < 1e-15:
            break
    return float(sgn * 0.5 * (lo + hi))


@dataclass
class StableGraph:
    sigma: float
    lipschitz: float
    radii: np.ndarray
    angles: np.ndarray


def stable_graph(g, rho0: float, bound: float, n_levels: int = 12, lam=None) -> StableGraph:
    """Sample W^s on a geometric radius grid and find the largest sigma with
    W^s inside the bound-cone on the disk of radius sigma."""
    g = SphereMap.of(g)
    radii = rho0 * 2.0 ** -np.arange(1, n_levels + 1)
    angs = np.array([[stable_manifold_angle(g, r, rho0, side=s, lam=lam) for r in radii]
                     for s in (1, -1)])
    okr = np.all(np.abs(angs) <= bound, axis=0)
    sigma = 0.0
    for r, ok in zip(radii[::-1], okr[::-1]):
        if not ok:
            break
        sigma = r
    pts = radii * np.exp(1j * angs[0])
    x, y = pts.real, pts.imag
    dx = np.abs(x[:, None] - x[None, :])
    dy = np.abs(y[:, None] - y[None, :])
    with np.errstate(invalid="ignore", divide="ignore"):
        L = float(np.nanmax(np.where(dx > 0, dy / dx, 0.0)))
    return StableGraph(sigma=float(sigma), lipschitz=L, radii=radii, angles=angs)


def stable_graph_sigma(sg: StableGraph, bound: float) -> StableGraph:
    """Re-derive sigma for a new cone bound from already sampled angles."""
    okr = np.all(np.abs(sg.angles) <= bound, axis=0)
    sigma = 0.0
    for r, ok in zip(sg.radii[::-1], okr[::-1]):
        if not ok:
            break
        sigma = r
    return StableGraph(sigma=float(sigma), lipschitz=sg.lipschitz, radii=sg.radii,
                       angles=sg.angles)


# ---------------------------------------------------------------- escape times

@dataclass
class EscapeRecord:
    point: object
    n: int
    bound: int | None = None


def escape_times(g, z, rho0: float, cap: int = ESCAPE_CAP) -> np.ndarray:
    """Minimal n with |g^n(z)| >= rho0 for each point; reaching the boundary
    circle counts as leaving."""
    g = SphereMap.of(g)
    cur = np.atleast_1d(np.asarray(z, dtype=complex)).copy()
    if np.any(np.abs(cur) >= rho0):
        raise ValueError("escape_time needs |z| < rho0")
    n = np.zeros(cur.shape, dtype=int)
    live = np.ones(cur.shape, dtype=bool)
    for k in range(1, cap + 1):
        cur[live] = _images(g, cur[live])
        esc = live & (np.abs(cur) >= rho0)
        n[esc] = k
        live &= ~esc
        if not live.any():
            return n
    raise EscapeCapExceeded(f"no escape within {cap} iterates; point is numerically on W^s")


def escape_time(g, z, rho0: float, cap: int = ESCAPE_CAP) -> EscapeRecord:
    zz = ext(z)
    n = int(escape_times(g, [zz.z], rho0, cap)[0])
    return EscapeRecord(point=zz, n=n)


def choose_alpha(theta0: float, base: float = math.pi / 6, max_k: int = 40) -> float:
    """Largest pi/6 * 2^-k with the direction theta0 outside C_{2 alpha}."""
    m = min(abs(theta0), math.pi - abs(theta0))
    for k in range(max_k):
        a = base * 2.0 ** -k
        if 2 * a < m:
            return a
    raise ValueError("point direction too close to the x-axis")
