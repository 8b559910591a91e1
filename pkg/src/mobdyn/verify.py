"""Self-audit suites behind `mobdyn verify-all`. Each returns a dict with "ok" and "seconds"."""
from __future__ import annotations

import math
import time

import numpy as np

from .geom_core import ZERO, chordal_to_inf, ext


def _timed(fn):
    def run(*a, **kw):
        t = time.perf_counter()
        out = fn(*a, **kw)
        out["seconds"] = time.perf_counter() - t
        out["ok"] = bool(out["ok"])
        return out
    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


def random_saddle_matrices(n: int, family: str, seed: int = 0) -> np.ndarray:
    """Nonconformal det > 0 matrices: S J S^-1 with J a Jordan block or a
    diagonal with distinct eigenvalues of one sign."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        S = rng.normal(size=(2, 2))
        if abs(np.linalg.det(S)) < 0.1:
            continue
        l = rng.uniform(0.2, 3.0) * rng.choice([-1, 1])
        if family == "defective":
            J = np.array([[l, rng.uniform(0.2, 2.0)], [0, l]])
        else:
            l2 = l * rng.uniform(1.2, 4.0) ** rng.choice([-1, 1])
            J = np.diag([l, l2])
        A = S @ J @ np.linalg.inv(S)
        if np.linalg.cond(A) < 1e6:
            out.append(A)
    return np.array(out)


@_timed
def saddle_suite(seed: int = 0, n: int = 500) -> dict:
    from .saddle_normal import saddle_normalize
    res, lams, cases = [], [], set()
    for fam, s in (("defective", seed), ("distinct", seed + 1)):
        for A in random_saddle_matrices(n, fam, s):
            f = saddle_normalize(A)
            res.append(f.residual)
            lams.append(f.lam)
            cases.add(f.case_tag)
    return {"max_residual": max(res), "lam_range": [min(lams), max(lams)], "cases": sorted(cases),
            "ok": max(res) < 1e-9 and 0 < min(lams) and max(lams) < 1 and len(cases) == 2}


@_timed
def extension_suite(mus=(0.3, 0.5, 0.8), kinds=("shear", "stretch")) -> dict:
    from .isotopy import extension_isotopy, identity_residual, model_for_mu, verification_points
    rows = []
    for kind in kinds:
        for mu in mus:
            e = extension_isotopy(model_for_mu(mu, kind))
            D1 = np.asarray(e.at(1.0).differential(ZERO))
            ts = np.linspace(0, 1, 101)
            Ds = [np.asarray(e.at(t).differential(ZERO)) for t in ts]
            det = max(abs(np.linalg.det(D) - 1) for D in Ds)
            # Dg_t(0) keeps the x-axis direction: second entry of D e_x vanishes
            axis = max(abs(D[1, 0]) / np.hypot(D[0, 0], D[1, 0]) for D in Ds)
            rows.append({"kind": kind, "mu": mu,
                         "D1_err": float(np.abs(D1 - np.diag([mu * mu, mu ** -2])).max()),
                         "det_err": float(det), "axis_err": float(axis),
                         "g0": identity_residual(e, 0.0, verification_points(100))})
    ok = all(r["D1_err"] < 1e-8 and r["det_err"] < 1e-8 and r["axis_err"] < 1e-9
             and r["g0"] < 1e-12 for r in rows)
    return {"rows": rows, "ok": ok}


@_timed
def cone_suite(ctx) -> dict:
    from .cone_calculus import audit_cone_constants
    c = ctx.cone_constants(math.pi / 6)
    a = audit_cone_constants(ctx.ext, c, seed=ctx.seed + 101)
    return {"beta_minus": c.beta_minus, "beta_plus": c.beta_plus, "rho": c.rho,
            "interior_violations": a["interior_violations"], "ok": a["interior_violations"] == 0}


@_timed
def fundamental_suite(ctx, K: int = 8) -> dict:
    from .trajectory import fixed_point_residual, fundamental_isotopy, sample_times, splice_residuals
    z0 = 0.3 * complex(math.cos(5 * math.pi / 12), math.sin(5 * math.pi / 12))
    iso, b = fundamental_isotopy(z0, K, ctx)
    ts = sample_times(iso, per_unit=20)
    P, Q = iso.trajectory(ext(z0), ts)
    im = (P * np.conj(Q)).imag
    out = {"N": b.N, "min_im": float(im.min()),
           "final_to_inf": float(chordal_to_inf(P[-1:], Q[-1:])[0]),
           "splice": float(max(splice_residuals(iso))),
           "fixed": fixed_point_residual(iso, ts[::10])}
    out["ok"] = (out["min_im"] > 0 and out["final_to_inf"] < 0.1 and out["splice"] < 1e-8
                 and out["fixed"] < 1e-9)
    return out


@_timed
def crossing_suite(ctx) -> dict:
    from .crossing import certify_crossing, crossing_isotopy, four_point_isotopy
    k, r0, cert = four_point_isotopy(ctx)
    res = crossing_isotopy(ctx)
    c = certify_crossing(res)
    return {"r0": r0, "n_intersections": len(cert), "certificate": c,
            "ok": len(cert) == 4 and c["ok"]}


@_timed
def transitivity_suite(ctx, n: int = 20, seed: int = 0) -> dict:
    from .cli import _random_tuple
    from .homotopy8 import build_chi, four_transitivity
    chi = build_chi(ctx)
    rng = np.random.default_rng(seed)
    res = [four_transitivity(_random_tuple(rng), _random_tuple(rng), chi, ctx).residual
           for _ in range(n)]
    return {"residuals": res, "ok": max(res) < 1e-6}


@_timed
def figure_eight_suite(ctx) -> dict:
    from .homotopy8 import build_figure_eight
    c = build_figure_eight(ctx)
    d = c.to_dict()
    return {"word": d["word_str"], "oracle": str(c.oracle), "fixed": d["fixed_residuals"],
            "ok": c.ok}


@_timed
def conformality_suite() -> dict:
    from .isotopy import SphereMap, make_model_diffeo
    from .mobius import MobiusMap, pole_fixing_map
    from .saddle_normal import circle_roundness, conformality_at_origin_test
    rows = []
    for name, g in (("rotation", SphereMap([MobiusMap.rotation(0.7)])),
                    ("pole-fixing", SphereMap([pole_fixing_map(0.6 + 0.3j, 1.7 - 0.4j)]))):
        v = conformality_at_origin_test(g)
        rows.append({"map": name, "conformal": v.conformal, "defect": v.defect,
                     "roundness": circle_roundness(g, 0.5), "corroborated": v.corroborated})
    ok = all(r["conformal"] and r["defect"] < 1e-12 and abs(r["roundness"] - 1) < 1e-9
             and r["corroborated"] for r in rows)
    v = conformality_at_origin_test(make_model_diffeo("shear", 0.5, 4.0))
    # the shear differential at 0 is [[1, eps], [0, 1]]
    s = np.linalg.svd(np.array([[1.0, 0.5], [0.0, 1.0]]), compute_uv=False)
    oracle = s[0] / s[1] - 1
    rows.append({"map": "shear", "conformal": v.conformal, "defect": v.defect, "oracle": oracle,
                 "corroborated": v.corroborated})
    ok = ok and not v.conformal and abs(v.defect - oracle) < 1e-6 and v.corroborated
    return {"rows": rows, "ok": ok}


def curved_shear(eps: float = 0.5, R: float = 4.0):
    """The shear model conjugated by z -> z / (1 + z/4), so it is nonlinear at 0."""
    from .isotopy import SphereMap, make_model_diffeo
    from .mobius import MobiusMap
    P = MobiusMap(1, 0, 0.25, 1)
    return SphereMap([P, make_model_diffeo("shear", eps, R), P.inverse()])


@_timed
def c1_suite() -> dict:
    from .isotopy import rescaled_circle_c1_gap
    from .mobius import MobiusMap
    from .isotopy import SphereMap
    rs = 2.0 ** -np.arange(8)
    gaps = [rescaled_circle_c1_gap(curved_shear(), r) for r in rs]
    lin = SphereMap([MobiusMap.scaling(0.8 * np.exp(0.4j))])
    lgaps = [rescaled_circle_c1_gap(lin, r) for r in rs]
    return {"gaps": gaps, "linear": lgaps,
            "ok": all(b < a for a, b in zip(gaps, gaps[1:])) and max(lgaps) < 1e-12}


@_timed
def intersection_suite() -> dict:
    from .crossing import PlanarCurve, curve_intersections
    ell = PlanarCurve.sample(lambda s: 2 * np.cos(2 * np.pi * s) + 0.5j * np.sin(2 * np.pi * s),
                             0.0, 1.0, 512, closed=True)
    circ = PlanarCurve.circle(0, 1, 512)
    cert = curve_intersections(ell, circ)
    # 4cos^2 + sin^2/4 = 1 on the ellipse parameter gives cos^2 = 1/5
    err = float(np.max(np.abs(np.cos(2 * np.pi * cert.s1) ** 2 - 0.2)))
    return {"n": len(cert), "cos2_err": err, "ok": len(cert) == 4 and err < 1e-9}


def run_all(full: bool = False, seed: int = 0, model: str = "shear", eps: float = 0.5,
            R: float = 4.0) -> list:
    from .trajectory import default_context
    ctx = default_context(model, eps, R, seed)
    out = [("saddle", saddle_suite(seed)), ("extension", extension_suite()),
           ("cones", cone_suite(ctx)), ("fundamental", fundamental_suite(ctx)),
           ("crossing", crossing_suite(ctx)), ("conformality", conformality_suite()),
           ("c1", c1_suite()), ("intersections", intersection_suite())]
    if full:
        out += [("transitivity", transitivity_suite(ctx, seed=seed)),
                ("figure_eight", figure_eight_suite(ctx))]
    return out
