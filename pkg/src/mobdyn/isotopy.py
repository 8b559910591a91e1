"""Sphere maps as composition lists, model diffeomorphisms, isotopies and
their algebra (conjugation, reversal, rebasing, three-piece concatenation)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geom_core import (INF, ZERO, ExtPoint, chordal_hom, ext, from_hom, hom_to_complex,
                        normalize_hom, to_hom)
from .mobius import MobiusMap
from .saddle_normal import ConformalInputError, conformal_defect, saddle_normalize


# ---------------------------------------------------------------- model diffeomorphisms

def _smoothstep(u):
    return u * u * (3 - 2 * u)


def bump(r, R):
    """C^1 profile: 1 on [0, R/2], 0 on [R, inf), cubic in between."""
    u = np.clip((np.asarray(r, dtype=float) - R / 2) / (R / 2), 0.0, 1.0)
    return 1.0 - _smoothstep(u)


def bump_deriv(r, R):
    u = np.clip((np.asarray(r, dtype=float) - R / 2) / (R / 2), 0.0, 1.0)
    return -6 * u * (1 - u) / (R / 2)


def eps_max(kind: str, n: int = 200001) -> float:
    """Largest eps keeping the model a diffeomorphism; independent of R.

    Shear: det = 1 + eps xy b'(r)/r >= 1 - eps sup(r |b'|)/2.
    Stretch: det >= 1 + eps min(b + r b').  Both sup/min over the profile.
    """
    u = np.linspace(0, 1, n)
    rb = (1 + u) * 6 * u * (1 - u)      # r |b'(r)| with r = (1 + u) R/2
    if kind == "shear":
        return float(1.0 / (0.5 * rb.max()))
    if kind == "stretch":
        m = float(np.min(1 - _smoothstep(u) - rb))
        return float(-1.0 / m)
    raise ValueError(f"unknown model kind {kind!r}")


class ModelDiffeo:
    """Compactly supported shear (x += eps y b) or stretch (x += eps x b)."""

    def __init__(self, kind: str = "shear", eps: float = 0.5, R: float = 4.0, check: bool = True):
        if kind not in ("shear", "stretch"):
            raise ValueError(f"unknown model kind {kind!r}")
        if not (eps > 0 and R > 0):
            raise ValueError("eps and R must be positive")
        self.kind, self.eps, self.R = kind, float(eps), float(R)
        if check:
            if eps >= eps_max(kind):
                raise ValueError(f"eps={eps} too large: Jacobian sign check fails "
                                 f"(eps_max={eps_max(kind):.6f})")
            self._check_jacobian()

    def __repr__(self):
        return f"ModelDiffeo({self.kind!r}, eps={self.eps}, R={self.R})"

    def _check_jacobian(self, n=301):
        xs = np.linspace(-self.R, self.R, n)
        X, Y = np.meshgrid(xs, xs)
        det = self._det(X.ravel(), Y.ravel())
        if det.min() <= 0:
            raise ValueError("eps too large: Jacobian determinant not positive on grid")

    def _fx(self, x, y):
        r = np.hypot(x, y)
        b = bump(r, self.R)
        return x + self.eps * (y if self.kind == "shear" else x) * b

    def _dfx(self, x, y):
        """d(x')/dx and d(x')/dy."""
        r = np.hypot(x, y)
        b = bump(r, self.R)
        db = bump_deriv(r, self.R)
        with np.errstate(invalid="ignore", divide="ignore"):
            cx = np.where(r > 0, x / r, 0.0)
            cy = np.where(r > 0, y / r, 0.0)
        e = self.eps
        if self.kind == "shear":
            return e * y * db * cx + 1.0, e * b + e * y * db * cy
        return 1.0 + e * b + e * x * db * cx, e * x * db * cy

    def _det(self, x, y):
        return self._dfx(x, y)[0]

    def _inside(self, p, q):
        return np.abs(p) < self.R * np.abs(q)

    def apply_h(self, p, q):
        p = np.array(p, dtype=complex)
        q = np.array(q, dtype=complex)
        m = self._inside(p, q)
        if np.any(m):
            z = p[m] / q[m]
            x = self._fx(z.real, z.imag)
            p[m] = x + 1j * z.imag
            q[m] = 1.0
        return normalize_hom(p, q)

    def _solve_x(self, X, Y):
        """The unique x with fx(x, Y) = X (fx is increasing in x)."""
        e = self.eps
        # where the bump is flat the map is linear and the inverse explicit
        x = X - e * Y if self.kind == "shear" else X / (1 + e)
        todo = np.flatnonzero(np.hypot(x, Y) > self.R / 2)
        if todo.size == 0:
            return x
        Xa, Ya = X[todo], Y[todo]
        if self.kind == "shear":
            lo, hi = Xa - e * np.abs(Ya), Xa + e * np.abs(Ya)
            xa = Xa.copy()
        else:
            a, b = Xa / (1 + e), Xa
            lo, hi = np.minimum(a, b), np.maximum(a, b)
            xa = Xa.copy()
        idx = np.arange(todo.size)
        for _ in range(100):
            xs, Xs, Ys = xa[idx], Xa[idx], Ya[idx]
            F = self._fx(xs, Ys) - Xs
            l, h = lo[idx], hi[idx]
            l = np.where(F < 0, xs, l)
            h = np.where(F > 0, xs, h)
            lo[idx], hi[idx] = l, h
            xn = xs - F / self._dfx(xs, Ys)[0]
            xn = np.where((xn > l) & (xn < h), xn, 0.5 * (l + h))
            xa[idx] = xn
            tol = 4e-16 * np.maximum(1.0, np.abs(xn))
            live = (np.abs(xn - xs) > tol) & (h - l > tol) & (F != 0)
            idx = idx[live]
            if idx.size == 0:
                break
        x[todo] = xa
        return x

    def inverse(self):
        return _ModelInverse(self)

    def jac(self, z: complex) -> np.ndarray:
        z = complex(z)
        if abs(z) >= self.R:
            return np.eye(2)
        a, b = self._dfx(np.array([z.real]), np.array([z.imag]))
        return np.array([[a[0], b[0]], [0.0, 1.0]])

    def differential(self, z):
        return self.jac(ext(z).z)


class _ModelInverse:
    def __init__(self, f: ModelDiffeo):
        self.f = f

    def __repr__(self):
        return f"inverse({self.f!r})"

    def apply_h(self, p, q):
        f = self.f
        p = np.array(p, dtype=complex)
        q = np.array(q, dtype=complex)
        m = f._inside(p, q)
        if np.any(m):
            w = p[m] / q[m]
            x = f._solve_x(w.real, w.imag)
            p[m] = x + 1j * w.imag
            q[m] = 1.0
        return normalize_hom(p, q)

    def inverse(self):
        return self.f

    def jac(self, z: complex) -> np.ndarray:
        p, q = self.apply_h(*to_hom(complex(z)))
        return np.linalg.inv(self.f.jac(complex(p[0] / q[0])))


class LinearMap:
    """A real-linear plane map with det > 0, extended by fixing inf.

    Only a homeomorphism of the sphere; used as an exact saddle oracle.
    """

    def __init__(self, A):
        A = np.asarray(A, dtype=float).reshape(2, 2)
        if np.linalg.det(A) <= 0:
            raise ValueError("LinearMap needs det > 0")
        self.A = A

    def __repr__(self):
        return f"LinearMap({self.A.tolist()})"

    def apply_h(self, p, q):
        p = np.array(p, dtype=complex)
        q = np.array(q, dtype=complex)
        fin = q != 0
        z = p[fin] / q[fin]
        A = self.A
        p[fin] = (A[0, 0] * z.real + A[0, 1] * z.imag) + 1j * (A[1, 0] * z.real + A[1, 1] * z.imag)
        q[fin] = 1.0
        return normalize_hom(p, q)

    def inverse(self):
        return LinearMap(np.linalg.inv(self.A))

    def jac(self, z) -> np.ndarray:
        return self.A.copy()


def make_model_diffeo(kind: str = "shear", eps: float = 0.5, R: float = 4.0) -> "SphereMap":
    return SphereMap([ModelDiffeo(kind, eps, R)])


def model_for_mu(mu: float, kind: str = "shear", R: float = 4.0) -> "SphereMap":
    """A power h^m of a model map whose saddle normal form has rate mu.

    Shear powers have differential [[1, m eps], [0, 1]] and rate 1/sigma_max,
    so m eps = 1/mu - mu; stretch powers have rate (1 + eps)^(-m/2).
    """
    if not 0 < mu < 1:
        raise ValueError("mu must lie in (0, 1)")
    if kind == "shear":
        s = 1 / mu - mu
        m = max(1, math.ceil(s / 0.8))
        eps = s / m
    elif kind == "stretch":
        target = 1 / mu ** 2
        m = max(1, math.ceil(math.log(target) / math.log(1.4)))
        eps = target ** (1 / m) - 1
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    h = ModelDiffeo(kind, eps, R)
    return SphereMap([h] * m)


# ---------------------------------------------------------------- sphere maps

class SphereMap:
    """Composition of primitives (Moebius maps, model maps, their inverses).

    ``parts`` is in application order: the first part acts first.
    """

    def __init__(self, parts=()):
        flat = []
        for p in parts:
            if isinstance(p, SphereMap):
                flat.extend(p.parts)
            else:
                flat.append(p)
        merged = []
        for p in flat:
            if merged and isinstance(p, MobiusMap) and isinstance(merged[-1], MobiusMap):
                merged[-1] = p.compose(merged[-1])
            else:
                merged.append(p)
        self.parts = tuple(m for m in merged
                           if not (isinstance(m, MobiusMap) and m.is_identity(0.0)))

    @staticmethod
    def of(f) -> "SphereMap":
        return f if isinstance(f, SphereMap) else SphereMap([f])

    @staticmethod
    def identity() -> "SphereMap":
        return SphereMap()

    def __repr__(self):
        return f"SphereMap({list(self.parts)!r})"

    def __len__(self):
        return len(self.parts)

    def apply_h(self, p, q):
        p, q = np.asarray(p, dtype=complex), np.asarray(q, dtype=complex)
        for part in self.parts:
            p, q = part.apply_h(p, q)
        return p, q

    def __call__(self, z) -> ExtPoint:
        return from_hom(*self.apply_h(*to_hom(ext(z))))[0]

    def apply_many(self, zs):
        return from_hom(*self.apply_h(*to_hom(zs)))

    def compose(self, other) -> "SphereMap":
        """self o other."""
        return SphereMap(list(SphereMap.of(other).parts) + list(self.parts))

    def __matmul__(self, other):
        return self.compose(other)

    def inverse(self) -> "SphereMap":
        return SphereMap([p.inverse() for p in reversed(self.parts)])

    def power(self, n: int) -> "SphereMap":
        base = self if n >= 0 else self.inverse()
        return SphereMap(list(base.parts) * abs(n))

    def differential(self, z) -> np.ndarray:
        """Real 2x2 differential at a finite point, by the chain rule."""
        z = ext(z)
        if z.infinite:
            raise ValueError("differential is taken in the planar chart; use a chart swap at inf")
        J = np.eye(2)
        p, q = to_hom(z)
        for part in self.parts:
            w, inf = hom_to_complex(p, q)
            if inf[0]:
                raise ValueError("intermediate image at inf; differential needs a chart change")
            J = part.jac(complex(w[0])) @ J
            p, q = part.apply_h(p, q)
        return J

    def is_mobius(self) -> bool:
        return all(isinstance(p, MobiusMap) for p in self.parts)

    def primitive_kinds(self) -> set:
        return {type(p).__name__ for p in self.parts}


def as_map(f) -> SphereMap:
    return SphereMap.of(f)


def rotation(theta: float) -> MobiusMap:
    return MobiusMap.rotation(theta)


# ---------------------------------------------------------------- isotopies

class Isotopy:
    """A family t -> f_t on [t0, t1] with f_0 = id.

    Subclasses provide ``at``; ``point_path`` may be overridden with a batched
    evaluation of the trajectories of a set of points.
    """

    t0: float = 0.0
    t1: float = 1.0
    name: str = "isotopy"

    def check_time(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.t0 - 1e-12) or np.any(t > self.t1 + 1e-12):
            raise ValueError(f"time outside [{self.t0}, {self.t1}] for {self.name}")

    def at(self, t) -> SphereMap:
        raise NotImplementedError

    def __call__(self, t, z) -> ExtPoint:
        return self.at(t)(z)

    def point_path(self, p, q, times):
        """Homogeneous trajectories, arrays of shape (len(times), npoints)."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        self.check_time(times)
        P = np.empty((len(times), np.size(p)), dtype=complex)
        Q = np.empty_like(P)
        for i, t in enumerate(times):
            P[i], Q[i] = self.at(float(t)).apply_h(p, q)
        return P, Q

    def trajectory(self, z, times):
        p, q = to_hom(ext(z))
        P, Q = self.point_path(p, q, times)
        return P[:, 0], Q[:, 0]

    def bounded_interval(self, cap: float = 1e6):
        return max(self.t0, -cap), min(self.t1, cap)


class FuncIsotopy(Isotopy):
    def __init__(self, fn, t0=0.0, t1=1.0, name="isotopy", path=None):
        if not t0 <= 0 <= t1:
            raise ValueError("isotopy interval must contain 0")
        self.fn, self.t0, self.t1, self.name, self._path = fn, t0, t1, name, path

    def at(self, t) -> SphereMap:
        self.check_time(t)
        return self.fn(float(t))

    def point_path(self, p, q, times):
        if self._path is None:
            return super().point_path(p, q, times)
        times = np.atleast_1d(np.asarray(times, dtype=float))
        self.check_time(times)
        return self._path(np.asarray(p, dtype=complex), np.asarray(q, dtype=complex), times)


def identity_isotopy(t0=0.0, t1=1.0) -> Isotopy:
    def path(p, q, times):
        return np.tile(p, (len(times), 1)), np.tile(q, (len(times), 1))
    return FuncIsotopy(lambda t: SphereMap(), t0, t1, "identity", path)


def _apply_rows(f, P, Q):
    """Apply one map to every row of a (m, n) homogeneous array."""
    shape = P.shape
    p, q = f.apply_h(P.ravel(), Q.ravel())
    return p.reshape(shape), q.reshape(shape)


def conjugate(M, f: Isotopy) -> Isotopy:
    """t -> M o f_t o M^-1."""
    M = SphereMap.of(M)
    Mi = M.inverse()

    def path(p, q, times):
        p, q = Mi.apply_h(p, q)
        return _apply_rows(M, *f.point_path(p, q, times))

    return FuncIsotopy(lambda t: M.compose(f.at(t)).compose(Mi), f.t0, f.t1,
                       f"conj({f.name})", path)


def reverse(f: Isotopy) -> Isotopy:
    """t -> f_{-t} on the mirrored interval."""
    def path(p, q, times):
        return f.point_path(p, q, -np.asarray(times))
    return FuncIsotopy(lambda t: f.at(-t), -f.t1, -f.t0, f"rev({f.name})", path)


def restrict_shift(f: Isotopy, s0: float, s1: float, t0: float = -1.0, t1: float = 1.0) -> Isotopy:
    """t -> f_{sigma(t)} o f_{sigma(0)}^-1 with sigma the increasing affine
    bijection [t0, t1] -> [s0, s1]."""
    if not (t0 <= 0 <= t1 and t0 < t1 and s0 < s1):
        raise ValueError("bad restrict_shift intervals")
    f.check_time([s0, s1])

    def sigma(t):
        return s0 + (s1 - s0) * (np.asarray(t, dtype=float) - t0) / (t1 - t0)

    base_inv = f.at(float(sigma(0.0))).inverse()

    def path(p, q, times):
        p, q = base_inv.apply_h(p, q)
        return f.point_path(p, q, sigma(times))

    iso = FuncIsotopy(lambda t: f.at(float(sigma(t))).compose(base_inv), t0, t1,
                      f"shift({f.name})", path)
    iso.sigma = sigma
    return iso


def chain(f: Isotopy, g: Isotopy) -> Isotopy:
    """f on [0, 1/2] (double speed), then g_{2t-1} o f_1; both given on [0, 1]."""
    f1 = f.at(1.0)

    def at(t):
        if t <= 0.5:
            return f.at(2 * t)
        return g.at(2 * t - 1).compose(f1)

    def path(p, q, times):
        times = np.asarray(times)
        P = np.empty((len(times), np.size(p)), dtype=complex)
        Q = np.empty_like(P)
        lo = times <= 0.5
        if np.any(lo):
            P[lo], Q[lo] = f.point_path(p, q, 2 * times[lo])
        if np.any(~lo):
            pp, qq = f1.apply_h(p, q)
            P[~lo], Q[~lo] = g.point_path(pp, qq, 2 * times[~lo] - 1)
        return P, Q

    return FuncIsotopy(at, 0.0, 1.0, f"chain({f.name},{g.name})", path)


def concat_through_meeting(f: Isotopy, a: float, h: Isotopy, b: float, g: Isotopy) -> Isotopy:
    """Three-piece isotopy on [0, 1] ending at g_1 o h_b^-1 o f_a.

    If f_a(z) = h_b(w) the endpoint sends z to g_1(w).  The middle third runs
    h backwards from time b to 0 so that the pieces agree at t = 1/3 and 2/3.
    """
    f.check_time(a)
    h.check_time(b)
    g.check_time([0.0, 1.0])
    fa = f.at(a)
    hbi = h.at(b).inverse()
    base = hbi.compose(fa)

    def at(t):
        if not 0 <= t <= 1:
            raise ValueError("time outside [0, 1]")
        if t <= 1 / 3:
            return f.at(3 * a * t)
        if t <= 2 / 3:
            return h.at((2 - 3 * t) * b).compose(base)
        return g.at(3 * t - 2).compose(base)

    def path(p, q, times):
        times = np.asarray(times)
        if np.any(times < 0) or np.any(times > 1):
            raise ValueError("time outside [0, 1]")
        P = np.empty((len(times), np.size(p)), dtype=complex)
        Q = np.empty_like(P)
        s1 = times <= 1 / 3
        s2 = (times > 1 / 3) & (times <= 2 / 3)
        s3 = times > 2 / 3
        if np.any(s1):
            P[s1], Q[s1] = f.point_path(p, q, 3 * a * times[s1])
        if np.any(s2 | s3):
            pb, qb = base.apply_h(p, q)
            if np.any(s2):
                P[s2], Q[s2] = h.point_path(pb, qb, (2 - 3 * times[s2]) * b)
            if np.any(s3):
                P[s3], Q[s3] = g.point_path(pb, qb, 3 * times[s3] - 2)
        return P, Q

    iso = FuncIsotopy(at, 0.0, 1.0, "concat", path)
    iso.endpoint = g.at(1.0).compose(base)
    return iso


def backtrack(f: Isotopy) -> Isotopy:
    """t -> f_{1-t} o f_1^-1 on [0, 1]: retraces f and ends at f_1^-1."""
    f.check_time([0.0, 1.0])
    f1i = f.at(1.0).inverse()

    def path(p, q, times):
        p, q = f1i.apply_h(p, q)
        return f.point_path(p, q, 1.0 - np.asarray(times, dtype=float))

    iso = FuncIsotopy(lambda t: f.at(1.0 - t).compose(f1i), 0.0, 1.0, f"back({f.name})", path)
    iso.endpoint = f1i
    return iso


def piecewise(segments) -> Isotopy:
    """Run isotopies one after another on equal subintervals of [0, 1].

    Each segment (f, s0, s1) moves f's time from s0 to s1 and contributes
    f_s o f_{s0}^-1 on top of everything accumulated before it.
    """
    segs = []
    acc = SphereMap()
    for f, s0, s1 in segments:
        f.check_time([s0, s1])
        start = f.at(s0).inverse().compose(acc)
        segs.append((f, float(s0), float(s1), start))
        acc = f.at(s1).compose(start)
    n = len(segs)
    if n == 0:
        raise ValueError("piecewise needs at least one segment")

    def _split(t):
        j = min(int(np.floor(t * n)), n - 1)
        f, s0, s1, start = segs[j]
        return j, s0 + (t * n - j) * (s1 - s0)

    def at(t):
        if not 0 <= t <= 1:
            raise ValueError("time outside [0, 1]")
        j, s = _split(t)
        return segs[j][0].at(s).compose(segs[j][3])

    def path(p, q, times):
        times = np.asarray(times, dtype=float)
        if np.any(times < 0) or np.any(times > 1):
            raise ValueError("time outside [0, 1]")
        P = np.empty((len(times), np.size(p)), dtype=complex)
        Q = np.empty_like(P)
        js = np.minimum(np.floor(times * n).astype(int), n - 1)
        for j in np.unique(js):
            f, s0, s1, start = segs[j]
            m = js == j
            pb, qb = start.apply_h(p, q)
            P[m], Q[m] = f.point_path(pb, qb, s0 + (times[m] * n - j) * (s1 - s0))
        return P, Q

    iso = FuncIsotopy(at, 0.0, 1.0, "piecewise", path)
    iso.endpoint = acc
    iso.segments = [(f, s0, s1) for f, s0, s1, _ in segs]
    return iso


# ---------------------------------------------------------------- verification helpers

def verification_points(n: int = 100, seed: int = 0):
    """Deterministic finite test points spread over the sphere."""
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1)[:, None]
    z = (v[:, 0] + 1j * v[:, 1]) / (1 - v[:, 2])
    return to_hom(z)


def identity_residual(f: Isotopy, t: float = 0.0, pts=None) -> float:
    p, q = verification_points() if pts is None else pts
    P, Q = f.point_path(p, q, [t])
    return float(np.max(chordal_hom(P[0], Q[0], p, q)))


def continuity_modulus(f: Isotopy, pts=None, dt: float = 1e-3, span=None):
    """Largest chordal step between consecutive grid times."""
    p, q = verification_points(20) if pts is None else pts
    lo, hi = span if span is not None else f.bounded_interval(50.0)
    n = max(2, int(round((hi - lo) / dt)) + 1)
    times = np.linspace(lo, hi, n)
    P, Q = f.point_path(p, q, times)
    steps = chordal_hom(P[1:], Q[1:], P[:-1], Q[:-1])
    return float(np.max(steps))


def check_isotopy(f: Isotopy, threshold: float = 0.1, dt: float = 1e-3, span=None) -> dict:
    r0 = identity_residual(f)
    mod = continuity_modulus(f, dt=dt, span=span)
    return {"identity_residual": r0, "max_step": mod,
            "ok": bool(r0 < 1e-10 and mod < threshold)}


# ---------------------------------------------------------------- extension isotopy

def theta_of(s, mu):
    """Polar angle of diag(mu, 1/mu)^-1 R_s e_x."""
    return np.arctan2(mu * mu * np.sin(s), np.cos(s))


@dataclass
class NormalizedSaddle:
    g: SphereMap
    mu: float
    factorization: object


def normalize_map(h) -> NormalizedSaddle:
    """g = R^-1 o H_rho o R2 o R1 o h o R, with Dg(0) = diag(mu, 1/mu)."""
    h = SphereMap.of(h)
    for pt in (ZERO, INF):
        w = h(pt)
        if w != pt and not (pt.infinite and w.infinite):
            p1, q1 = to_hom(w)
            p2, q2 = to_hom(pt)
            if chordal_hom(p1, q1, p2, q2)[0] > 1e-12:
                raise ValueError("map must fix 0 and inf")
    A = h.differential(ZERO)
    if conformal_defect(A) <= 1e-9:
        raise ConformalInputError("map is conformal at 0")
    fac = saddle_normalize(A)
    post = (MobiusMap.rotation(-fac.R) @ MobiusMap.homothety(fac.rho)
            @ MobiusMap.rotation(fac.R2) @ MobiusMap.rotation(fac.R1))
    g = SphereMap([MobiusMap.rotation(fac.R)] + list(h.parts) + [post])
    return NormalizedSaddle(g=g, mu=fac.lam, factorization=fac)


class ExtensionIsotopy(Isotopy):
    """g_t = R_{-theta(pi t/2)} o g^-1 o R_{pi t/2} o g on [0, 1]."""

    def __init__(self, h):
        ns = normalize_map(h)
        self.ghat, self.mu, self.factorization = ns.g, ns.mu, ns.factorization
        self.ghat_inv = self.ghat.inverse()
        self.t0, self.t1, self.name = 0.0, 1.0, "extension"

    @property
    def lam(self) -> float:
        return self.mu ** 2

    def at(self, t) -> SphereMap:
        self.check_time(t)
        s = math.pi * t / 2
        th = float(theta_of(s, self.mu))
        return SphereMap([self.ghat, MobiusMap.rotation(s), self.ghat_inv, MobiusMap.rotation(-th)])

    def linear_part(self, t) -> np.ndarray:
        """C_s = R_{-theta(s)} A^-1 R_s A, the differential of g_t at 0."""
        from .saddle_normal import rot
        s = math.pi * t / 2
        A = np.diag([self.mu, 1 / self.mu])
        return rot(-float(theta_of(s, self.mu))) @ np.linalg.inv(A) @ rot(s) @ A

    def point_path(self, p, q, times):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        self.check_time(times)
        p, q = self.ghat.apply_h(p, q)
        s = np.pi * times / 2
        rot_s = np.exp(1j * s)[:, None]
        P = rot_s * p[None, :]
        Q = np.broadcast_to(q[None, :], P.shape).copy()
        P, Q = _apply_rows(self.ghat_inv, P, Q)
        P = P * np.exp(-1j * theta_of(s, self.mu))[:, None]
        return normalize_hom(P, Q)


def extension_isotopy(h) -> ExtensionIsotopy:
    return ExtensionIsotopy(h)


# ---------------------------------------------------------------- C^1 convergence probe

def rescaled_circle_c1_gap(g, r: float, n: int = 1024) -> float:
    """C^1([0,1]) distance between s -> g(r e^{2 pi i s})/r and s -> Dg(0) e^{2 pi i s}.

    The s-derivative uses the chain-rule differential of g, so linear maps give 0 exactly."""
    g = SphereMap.of(g)
    A = g.differential(ZERO)
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    e = np.vstack([np.cos(th), np.sin(th)])
    w, inf = hom_to_complex(*g.apply_h(*to_hom(r * np.exp(1j * th))))
    if np.any(inf):
        raise ValueError("circle image passes through inf")
    lin = A @ e
    val = np.abs(w / r - (lin[0] + 1j * lin[1]))
    # d/ds of the rescaled curve is 2 pi Dg(r e^{i th}) (i e^{i th}); r cancels
    tang = np.vstack([-e[1], e[0]])
    D = np.array([g.differential(r * complex(c, s_)) for c, s_ in e.T])
    dv = np.einsum("kij,jk->ik", D, tang) - A @ tang
    der = 2 * np.pi * np.hypot(dv[0], dv[1])
    return float(val.max() + der.max())
