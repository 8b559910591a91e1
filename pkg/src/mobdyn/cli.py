"""mobdyn command line: run the constructions, write JSON/SVG/PNG artifacts, audit them."""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, (np.bool_, bool)):
        return bool(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating, float)):
        o = float(o)
        return o if math.isfinite(o) else str(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    if hasattr(o, "re") and hasattr(o, "im"):
        return "inf" if getattr(o, "infinite", False) else [o.re, o.im]
    return o


def _complex(text: str) -> complex:
    t = text.strip().lower()
    if t in ("inf", "infinity", "oo"):
        return complex(math.inf, 0)
    t = t.replace("i", "j")
    try:
        return complex(t)
    except ValueError:
        raise UsageError(f"not a complex number: {text!r}") from None


def _point(text: str):
    from .geom_core import INF, ext
    z = _complex(text)
    return INF if math.isinf(z.real) else ext(z)


def _tuple4(text: str):
    parts = text.split(",")
    if len(parts) != 4:
        raise UsageError("a 4-tuple needs four comma separated points")
    return [_point(p) for p in parts]


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("MOBDYN_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"MOBDYN_SEED must be an integer, got {env!r}") from None


def _ctx(args):
    from .trajectory import default_context
    if args.eps <= 0 or args.R <= 0:
        raise UsageError("eps and R must be positive")
    if args.K < 1:
        raise UsageError("K must be at least 1")
    return default_context(args.model, float(args.eps), float(args.R), _seed(args))


def _meta(args) -> dict:
    return {"seed": _seed(args), "model": args.model, "eps": args.eps, "R": args.R}


def _emit(args, payload: dict):
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True)
    if getattr(args, "out", None):
        Path(args.out).write_text(text + "\n")
    else:
        print(text)


def _outdir(args) -> Path | None:
    d = getattr(args, "outdir", None)
    if d is None:
        return None
    d = Path(d)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _fail(msg: str, payload: dict | None = None, args=None) -> int:
    if payload is not None and args is not None:
        _emit(args, payload)
    print(f"certification failed: {msg}", file=sys.stderr)
    return EXIT_FAIL


# ---------------------------------------------------------------- commands

def cmd_normalize_saddle(args) -> int:
    from .saddle_normal import ConformalInputError, saddle_normalize
    try:
        vals = [float(v) for v in args.matrix.split(",")]
    except ValueError:
        raise UsageError("matrix entries must be numbers") from None
    if len(vals) != 4:
        raise UsageError("--matrix takes a,b,c,d")
    A = np.array(vals).reshape(2, 2)
    if np.linalg.det(A) <= 0:
        raise UsageError("matrix must have positive determinant")
    try:
        f = saddle_normalize(A)
    except ConformalInputError as e:
        print(str(e), file=sys.stderr)
        return EXIT_FAIL
    _emit(args, f.to_dict())
    return EXIT_OK if f.residual < 1e-9 else _fail("reconstruction residual too large")


def cmd_extension_isotopy(args) -> int:
    from .geom_core import ZERO
    from .isotopy import extension_isotopy, identity_residual, model_for_mu
    if not 0 < args.mu < 1:
        raise UsageError("mu must lie in (0, 1)")
    ext_ = extension_isotopy(model_for_mu(args.mu, args.model, args.R))
    D1 = np.asarray(ext_.at(1.0).differential(ZERO))
    ts = np.linspace(0, 1, 101)
    dets = [float(np.linalg.det(ext_.at(t).differential(ZERO))) for t in ts]
    target = np.diag([args.mu ** 2, args.mu ** -2])
    out = {"mu": args.mu, "lambda": ext_.lam, "Dg1": D1, "Dg1_err": float(np.abs(D1 - target).max()),
           "det_err": float(np.max(np.abs(np.array(dets) - 1))),
           "g0_residual": identity_residual(ext_, 0.0)}
    out["ok"] = out["Dg1_err"] < 1e-8 and out["det_err"] < 1e-8 and out["g0_residual"] < 1e-12
    _emit(args, out)
    return EXIT_OK if out["ok"] else _fail("extension isotopy audit")


def cmd_cone_constants(args) -> int:
    from .cone_calculus import audit_cone_constants
    ctx = _ctx(args)
    c = ctx.cone_constants(args.alpha)
    audit = audit_cone_constants(ctx.ext, c, seed=ctx.seed + 1)
    out = {"alpha": c.alpha, "beta_minus": c.beta_minus, "beta_plus": c.beta_plus,
           "rho": c.rho, "tau": c.tau, "delta": c.delta, "audit": audit}
    _emit(args, out)
    return EXIT_OK if audit.get("ok", False) else _fail("cone constants re-audit")


def cmd_fundamental(args) -> int:
    from .report import emit_trajectory, plot_trajectory
    from .trajectory import (Trajectory, fixed_point_residual, fundamental_isotopy,
                             sample_times, splice_residuals)
    from .geom_core import chordal_to_inf
    ctx = _ctx(args)
    z0 = _point(args.z0)
    iso, b = fundamental_isotopy(z0, args.K, ctx)
    ts = sample_times(iso, per_unit=args.per_unit)
    traj = Trajectory.of(iso, z0, ts, meta=_meta(args))
    im = (traj.P * np.conj(traj.Q)).imag
    out = b.to_dict()
    out.update({
        "samples": len(traj), "min_im_sign": float(np.min(np.sign(im))),
        "final_chordal_to_inf": float(chordal_to_inf(traj.P[-1:], traj.Q[-1:])[0]),
        "splice_max": float(max(splice_residuals(iso))),
        "fixed_point_residual": fixed_point_residual(iso, ts[:: max(1, len(ts) // 200)]),
    })
    out["ok"] = bool(np.all(im > 0) and out["final_chordal_to_inf"] < 0.1
                     and out["splice_max"] < 1e-8 and out["fixed_point_residual"] < 1e-9)
    if args.json:
        emit_trajectory(traj, args.json, "json")
    if args.svg:
        emit_trajectory(traj, args.svg, "svg")
    d = _outdir(args)
    if d is not None:
        emit_trajectory(traj, d / "fundamental.json", "json")
        emit_trajectory(traj, d / "fundamental.svg", "svg")
        plot_trajectory(traj, d / "fundamental.png", title="trajectory of z0")
        plot_trajectory(traj, d / "fundamental_zoom.png", title="near the origin", lim=1.0)
    _emit(args, out)
    return EXIT_OK if out["ok"] else _fail("fundamental trajectory audit")


def cmd_crossing(args) -> int:
    from .crossing import certify_crossing, crossing_isotopy, four_point_isotopy
    from .report import emit_trajectory, planar, plot_curves
    from .trajectory import Trajectory
    ctx = _ctx(args)
    k, r0, cert = four_point_isotopy(ctx)
    res = crossing_isotopy(ctx)
    audit = certify_crossing(res)
    out = {"r0": r0, "intersections": len(cert.points), "min_sin": cert.min_sin,
           "zhat": res.zhat, "info": res.info, "certificate": audit}
    out["ok"] = bool(audit["ok"] and len(cert.points) == 4)
    d = _outdir(args)
    if d is not None:
        ts = np.linspace(-1, 1, 2001)
        traj = Trajectory.of(res.J, res.zhat, ts, meta=_meta(args))
        emit_trajectory(traj, d / "crossing.json", "json")
        emit_trajectory(traj, d / "crossing.svg", "svg")
        s = np.linspace(0, 2 * np.pi, 721)
        circ = r0 * np.exp(1j * s)
        img = ctx.g.apply_h(circ, np.ones_like(circ))
        plot_curves([circ, img[0] / img[1]], d / "four_point.png", lim=3 * r0,
                    labels=["S_r0", "g(S_r0)"], title="four transversal intersections")
        plot_curves([planar(traj.P, traj.Q)], d / "crossing.png", lim=2.0, title="crossing trajectory")
    _emit(args, out)
    return EXIT_OK if out["ok"] else _fail("crossing certificate")


def cmd_chi(args) -> int:
    from .homotopy8 import build_chi, separation_check
    from .report import plot_curves
    ctx = _ctx(args)
    chi = build_chi(ctx, args.K)
    sep = separation_check(chi, seed=_seed(args))
    out = {"audit": chi.audit, "separation": sep, "zhat": chi.zhat,
           "zminus": chi.zminus, "zplus": chi.zplus, "samples": len(chi.times)}
    out["ok"] = bool(chi.audit["ok"] and sep["ok"])
    d = _outdir(args)
    if d is not None:
        from .report import planar
        plot_curves([planar(chi.P, chi.Q)], d / "chi.png", title="continuum chi")
    _emit(args, out)
    return EXIT_OK if out["ok"] else _fail("chi audit")


def _random_tuple(rng):
    while True:
        z = rng.normal(size=4) + 1j * rng.normal(size=4)
        d = np.abs(z[:, None] - z[None, :]) + np.eye(4)
        if d.min() > 0.05 and np.all(np.abs(z.imag) > 1e-3):
            return list(z)


def cmd_four_transitivity(args) -> int:
    from .homotopy8 import build_chi, four_transitivity
    ctx = _ctx(args)
    chi = build_chi(ctx, args.K)
    if args.src or args.dst:
        if not (args.src and args.dst):
            raise UsageError("--src and --dst go together")
        pairs = [(_tuple4(args.src), _tuple4(args.dst))]
    else:
        rng = np.random.default_rng(_seed(args))
        pairs = [(_random_tuple(rng), _random_tuple(rng)) for _ in range(args.count)]
    rows = []
    for src, dst in pairs:
        t = time.perf_counter()
        r = four_transitivity(src, dst, chi, ctx)
        rows.append({"src": src, "dst": dst, "residual": r.residual,
                     "seconds": time.perf_counter() - t})
    worst = max(r["residual"] for r in rows)
    out = {"cases": rows, "max_residual": worst, "ok": worst < args.tol}
    _emit(args, out)
    return EXIT_OK if out["ok"] else _fail(f"residual {worst:.3g} above {args.tol:g}")


def cmd_figure_eight(args) -> int:
    from .homotopy8 import build_figure_eight, figure8_prototype
    from .report import plot_curves
    ctx = _ctx(args)
    cert = build_figure_eight(ctx, args.K)
    out = cert.to_dict()
    d = _outdir(args)
    if d is not None and cert.samples is not None:
        from .report import planar
        z = planar(cert.samples[1], cert.samples[2])
        proto = figure8_prototype(cert.w.re)
        plot_curves([z], d / "figure_eight.png", lim=2.0, title="orbit of w under F")
        plot_curves([proto.points], d / "figure_eight_prototype.png", lim=2.0,
                    title="prototype wedge")
    _emit(args, out)
    return EXIT_OK if cert.ok else _fail("figure-8 word or fixed points")


def _conformality_map(name: str, args):
    from .isotopy import SphereMap, make_model_diffeo
    from .mobius import MobiusMap, pole_fixing_map
    if name == "rotation":
        return SphereMap([MobiusMap.rotation(args.theta)])
    if name == "pole-fixing":
        return SphereMap([pole_fixing_map(0.6 + 0.3j, 1.7 - 0.4j)])
    if name in ("shear", "stretch"):
        return make_model_diffeo(name, args.eps, args.R)
    raise UsageError(f"unknown map {name!r}")


def cmd_conformality(args) -> int:
    from .saddle_normal import circle_roundness, conformality_at_origin_test
    g = _conformality_map(args.map, args)
    v = conformality_at_origin_test(g)
    out = {"map": args.map, "verdict": str(v), "conformal": v.conformal, "defect": v.defect,
           "limit": v.limit, "ratios": v.ratios, "corroborated": v.corroborated,
           "roundness": circle_roundness(g, 0.5)}
    _emit(args, out)
    return EXIT_OK if v.corroborated else _fail("ratio trend does not corroborate the verdict")


def cmd_verify_all(args) -> int:
    """Run every suite and print one line per suite; slow suites need --full."""
    from . import verify
    results = verify.run_all(full=args.full, seed=_seed(args), model=args.model,
                             eps=args.eps, R=args.R)
    ok = True
    for name, r in results:
        ok &= r["ok"]
        print(f"{'PASS' if r['ok'] else 'FAIL'} {name} ({r['seconds']:.1f}s)")
    if args.out:
        Path(args.out).write_text(json.dumps(_jsonable(dict(results)), indent=2) + "\n")
    return EXIT_OK if ok else _fail("some suites failed")


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mobdyn", description=__doc__)
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="default: $MOBDYN_SEED or 0")
    common.add_argument("--model", choices=("shear", "stretch"), default="shear")
    common.add_argument("--eps", type=float, default=0.5)
    common.add_argument("--R", type=float, default=4.0)
    common.add_argument("--K", type=int, default=8, help="stage budget")
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    common.add_argument("--outdir", help="directory for trajectory JSON/SVG and PNG figures")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    s = sub.add_parser("normalize-saddle", parents=[common], help="rotation/scaling normal form diag(lam, 1/lam) of a 2x2 matrix")
    s.add_argument("--matrix", required=True, help="a,b,c,d row-major")
    s.set_defaults(fn=cmd_normalize_saddle)

    s = sub.add_parser("extension-isotopy", parents=[common], help="isotopy from the identity to a map with differential diag(mu^2, mu^-2) at 0")
    s.add_argument("--mu", type=float, default=0.5)
    s.set_defaults(fn=cmd_extension_isotopy)

    s = sub.add_parser("cone-constants", parents=[common], help="audited cone constants (beta-, beta+, rho) for the extension isotopy")
    s.add_argument("--alpha", type=float, default=math.pi / 6)
    s.set_defaults(fn=cmd_cone_constants)

    s = sub.add_parser("fundamental", parents=[common], help="staged isotopy pushing z0 in the upper half-plane towards infinity")
    s.add_argument("--z0", default="0.07764571353075622+0.2897777478867205j",
                   help="default 0.3 exp(5 pi i / 12)")
    s.add_argument("--per-unit", type=int, default=20)
    s.add_argument("--json", help="trajectory JSON path")
    s.add_argument("--svg", help="trajectory SVG path")
    s.set_defaults(fn=cmd_fundamental)

    s = sub.add_parser("crossing", parents=[common], help="four-point isotopy and the meridian crossing certificate")
    s.set_defaults(fn=cmd_crossing)

    s = sub.add_parser("chi", parents=[common], help="continuum chi separating two arcs of the real meridian")
    s.set_defaults(fn=cmd_chi)

    s = sub.add_parser("four-transitivity", parents=[common], help="isotopies matching 4-tuples of points")
    s.add_argument("--src", help="four comma separated points, e.g. 0,1,inf,2+1j")
    s.add_argument("--dst")
    s.add_argument("--count", type=int, default=20, help="random pairs when no tuples given")
    s.add_argument("--tol", type=float, default=1e-6)
    s.set_defaults(fn=cmd_four_transitivity)

    s = sub.add_parser("figure-eight", parents=[common], help="figure-eight loop certificate for the point set {w, 0, 1, inf}")
    s.set_defaults(fn=cmd_figure_eight)

    s = sub.add_parser("conformality", parents=[common], help="conformality verdict for a map fixing 0")
    s.add_argument("--map", default="shear", choices=("rotation", "pole-fixing", "shear", "stretch"))
    s.add_argument("--theta", type=float, default=0.7)
    s.set_defaults(fn=cmd_conformality)

    s = sub.add_parser("verify-all", parents=[common], help="run the self-audit suites")
    s.add_argument("--full", action="store_true", help="include chi, 4-transitivity and figure-8")
    s.set_defaults(fn=cmd_verify_all)
    return p


def run_command(argv) -> int:
    try:
        args = build_parser().parse_args(argv)
        _seed(args)
        return args.fn(args)
    except UsageError as e:
        print(f"mobdyn: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"mobdyn: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:          # construction failures are certification failures
        print(f"mobdyn: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL


def main(argv=None) -> int:
    return run_command(sys.argv[1:] if argv is None else argv)
