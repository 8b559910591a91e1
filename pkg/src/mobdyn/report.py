"""Trajectory serialization: JSON samples, static SVG plots and matplotlib figures."""
from __future__ import annotations

import json
import math
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np

from .geom_core import hom_to_complex

VIEW = 4.0          # planar viewport is [-VIEW, VIEW]^2
SVG_PX = 600


def _num(x: float) -> str:
    x = float(x) + 0.0      # -0.0 -> 0.0, so written files are canonical
    if not math.isfinite(x):
        raise ValueError("non-finite sample")
    return format(x, ".17g")


def _samples(traj):
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    z, inf = hom_to_complex(traj.P, traj.Q)
    return traj.times, z, inf


def trajectory_json(traj, meta: dict) -> str:
    """Schema {"meta": {...}, "samples": [{"t", "re", "im", "infinite"}]}.

    Floats carry 17 significant digits; the point at infinity is written as
    re = im = 0 with "infinite": true.
    """
    t, z, inf = _samples(traj)
    m = {"seed": int(meta.get("seed", 0)), "model": str(meta.get("model", "shear")),
         "eps": float(meta.get("eps", 0.5)), "R": float(meta.get("R", 4.0))}
    head = ('{"meta":{"seed":%d,"model":%s,"eps":%s,"R":%s},"samples":['
            % (m["seed"], json.dumps(m["model"]), _num(m["eps"]), _num(m["R"])))
    rows = []
    for ti, zi, fi in zip(t, z, inf):
        rows.append('{"t":%s,"re":%s,"im":%s,"infinite":%s}' % (
            _num(ti), _num(0.0 if fi else zi.real), _num(0.0 if fi else zi.imag),
            "true" if fi else "false"))
    return head + ",".join(rows) + "]}\n"


def read_trajectory_json(text: str):
    from .trajectory import Trajectory
    d = json.loads(text)
    s = d["samples"]
    if not s:
        raise ValueError("empty trajectory")
    # pairs (z, 1) and (1, 0), left unnormalized so that p / q is the stored value bit for bit
    inf = np.array([r["infinite"] for r in s])
    z = np.array([complex(r["re"], r["im"]) for r in s])
    P = np.where(inf, 1.0 + 0j, z)
    Q = np.where(inf, 0j, 1.0 + 0j)
    return Trajectory(np.array([r["t"] for r in s], dtype=float), P, Q, dict(d["meta"])), d["meta"]


def emit_trajectory(traj, path, fmt: str | None = None, meta: dict | None = None,
                    refs=(0.0, 1.0)):
    """Write a trajectory as JSON or SVG, chosen by fmt or the file suffix."""
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".").lower()
    meta = dict(traj.meta, **(meta or {}))
    if fmt == "json":
        text = trajectory_json(traj, meta)
    elif fmt == "svg":
        text = trajectory_svg(traj, refs=refs)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    path.write_text(text)
    return path


# ---------------------------------------------------------------- svg

def _px(z):
    s = SVG_PX / (2 * VIEW)
    return (z.real + VIEW) * s, (VIEW - z.imag) * s


def _runs(z, inf):
    """Split samples into maximal runs that stay inside the viewport."""
    inside = ~inf & (np.abs(z.real) <= VIEW) & (np.abs(z.imag) <= VIEW)
    runs, cur, clipped = [], [], []
    for k, ok in enumerate(inside):
        if ok:
            cur.append(k)
        else:
            if cur:
                runs.append(cur)
                cur = []
            clipped.append(k)
    if cur:
        runs.append(cur)
    return runs, clipped


def trajectory_svg(traj, refs=(0.0, 1.0), extra=()) -> str:
    t, z, inf = _samples(traj)
    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(SVG_PX),
                     height=str(SVG_PX), viewBox=f"0 0 {SVG_PX} {SVG_PX}")
    ET.SubElement(svg, "rect", width="100%", height="100%", fill="white")
    x0, y0 = _px(complex(-VIEW, 0))
    x1, _ = _px(complex(VIEW, 0))
    ET.SubElement(svg, "line", {"class": "gamma", "x1": f"{x0:.3f}", "y1": f"{y0:.3f}",
                                "x2": f"{x1:.3f}", "y2": f"{y0:.3f}", "stroke": "#888"})
    cx, cy = _px(0j)
    ET.SubElement(svg, "circle", {"class": "unit", "cx": f"{cx:.3f}", "cy": f"{cy:.3f}",
                                  "r": f"{SVG_PX / (2 * VIEW):.3f}", "fill": "none",
                                  "stroke": "#bbb", "stroke-dasharray": "4 3"})
    for r in refs:
        px, py = _px(complex(r))
        ET.SubElement(svg, "circle", {"class": "ref", "cx": f"{px:.3f}", "cy": f"{py:.3f}",
                                      "r": "3", "fill": "black"})
    runs, clipped = _runs(z, inf)
    for run in runs:
        pts = " ".join("%.3f,%.3f" % _px(z[k]) for k in run)
        ET.SubElement(svg, "polyline", {"class": "traj", "points": pts, "fill": "none",
                                        "stroke": "#c0392b", "stroke-width": "1.2"})
    # samples near infinity: marker on the border in the direction of the point
    for k in clipped:
        w = z[k]
        if inf[k] or w == 0:
            px, py = SVG_PX - 8.0, 8.0
        else:
            s = VIEW / max(abs(w.real), abs(w.imag))
            px, py = _px(w * s)
        ET.SubElement(svg, "circle", {"class": "clip", "cx": f"{px:.3f}", "cy": f"{py:.3f}",
                                      "r": "2", "fill": "none", "stroke": "#2c3e50"})
    for z_ in extra:
        px, py = _px(complex(z_))
        ET.SubElement(svg, "circle", {"class": "mark", "cx": f"{px:.3f}", "cy": f"{py:.3f}",
                                      "r": "3", "fill": "#2980b9"})
    return ET.tostring(svg, encoding="unicode") + "\n"


def svg_polylines(text: str) -> list:
    """Planar coordinates of every trajectory polyline in an emitted SVG."""
    root = ET.fromstring(text)
    s = SVG_PX / (2 * VIEW)
    out = []
    for el in root.iter("{http://www.w3.org/2000/svg}polyline"):
        xy = np.array([[float(v) for v in p.split(",")] for p in el.get("points").split()])
        out.append(xy[:, 0] / s - VIEW + 1j * (VIEW - xy[:, 1] / s))
    return out


# ---------------------------------------------------------------- matplotlib

def _axes(ax, lim=VIEW):
    th = np.linspace(0, 2 * np.pi, 400)
    ax.axhline(0, color="0.6", lw=0.8)
    ax.plot(np.cos(th), np.sin(th), color="0.75", lw=0.8, ls="--")
    ax.plot([0, 1], [0, 0], "ko", ms=3)
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.set_aspect("equal")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")


def _clip(z, lim):
    z = np.asarray(z, dtype=complex).copy()
    z[~np.isfinite(z) | (np.abs(z) > 10 * lim)] = np.nan
    return z


def plot_curves(curves, path, title=None, lim=VIEW, labels=None):
    """PNG of planar curves (complex arrays, inf allowed) in the standard chart."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 5), dpi=120)
    _axes(ax, lim)
    for i, c in enumerate(curves):
        c = _clip(c, lim)
        ax.plot(c.real, c.imag, lw=1.0, label=None if labels is None else labels[i])
    if labels:
        ax.legend(loc="upper right", fontsize=8, frameon=False)
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def planar(P, Q):
    """Planar coordinates with the point at infinity as nan, ready for plotting."""
    z, inf = hom_to_complex(P, Q)
    z[inf] = np.nan
    return z


def plot_trajectory(traj, path, title=None, lim=VIEW):
    return plot_curves([planar(traj.P, traj.Q)], path, title=title, lim=lim)
