import json
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mobdyn.cli import main
from mobdyn.geom_core import INF
from mobdyn.report import (emit_trajectory, read_trajectory_json, svg_polylines, trajectory_json,
                           trajectory_svg)
from mobdyn.trajectory import Trajectory

META = {"seed": 3, "model": "shear", "eps": 0.5, "R": 4.0}
fl = st.floats(-1e6, 1e6, allow_nan=False)


def test_two_samples_schema(tmp_path):
    tr = Trajectory.from_points([0.0, 0.5], [0.1 + 0.2j, INF])
    path = emit_trajectory(tr, tmp_path / "t.json", meta=META)
    d = json.loads(path.read_text())
    assert set(d) == {"meta", "samples"} and d["meta"] == META
    assert len(d["samples"]) == 2
    for s in d["samples"]:
        assert set(s) == {"t", "re", "im", "infinite"}
    assert d["samples"][1]["infinite"] is True


@given(st.lists(st.tuples(fl, fl), min_size=1, max_size=20))
@settings(max_examples=50)
def test_json_roundtrip_bit_exact(pts):
    z = [complex(a, b) for a, b in pts]
    tr = Trajectory.from_points(np.arange(len(z)) * 0.1, z)
    text = trajectory_json(tr, META)
    back, meta = read_trajectory_json(text)
    zb = back.complex()[0]
    z0 = tr.complex()[0]
    assert np.array_equal(zb.view(float), z0.view(float))
    assert json.loads(text)["samples"] == json.loads(trajectory_json(back, meta))["samples"]
    assert np.array_equal(back.times, tr.times)
    assert trajectory_json(back, meta) == text


def test_empty_trajectory_rejected():
    tr = Trajectory(np.zeros(0), np.zeros(0, complex), np.zeros(0, complex))
    with pytest.raises(ValueError):
        trajectory_json(tr, META)


def test_svg_clips_far_points():
    tr = Trajectory.from_points([0, 1, 2, 3], [0.5j, 1 + 1j, 100 + 0j, INF])
    text = trajectory_svg(tr)
    lines = svg_polylines(text)
    assert len(lines) == 1 and np.allclose(lines[0], [0.5j, 1 + 1j], atol=0.02)
    assert text.count('class="clip"') == 2


def test_cli_normalize():
    assert main(["normalize-saddle", "--matrix", "2,0,0,3"]) == 0
    assert main(["normalize-saddle", "--matrix", "1,0,0,1"]) == 1
    assert main(["normalize-saddle", "--matrix", "1,2"]) == 2
    assert main(["no-such-command"]) == 2


def test_cli_normalize_output(capsys):
    main(["normalize-saddle", "--matrix", "2,0,0,3"])
    d = json.loads(capsys.readouterr().out)
    assert d["lambda"] == pytest.approx(math.sqrt(2 / 3), rel=1e-12)
    main(["normalize-saddle", "--matrix", "1,0,0,1"])
    assert "conformal input" in capsys.readouterr().err


def test_cli_env_seed(monkeypatch, capsys):
    monkeypatch.setenv("MOBDYN_SEED", "nope")
    assert main(["conformality"]) == 2
    monkeypatch.setenv("MOBDYN_SEED", "4")
    assert main(["conformality", "--map", "rotation"]) == 0


def test_cli_fundamental_artifacts(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    svg = tmp_path / "f.svg"
    assert main(["fundamental", "--json", str(a), "--svg", str(svg), "--out",
                 str(tmp_path / "r.json"), "--outdir", str(tmp_path / "figs")]) == 0
    assert main(["fundamental", "--json", str(b), "--out", str(tmp_path / "r2.json")]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = svg_polylines(svg.read_text())
    assert lines and all(np.all(l.imag > 0) for l in lines)
    assert (tmp_path / "figs" / "fundamental.png").stat().st_size > 1000


def test_console_entry():
    r = subprocess.run([sys.executable, "-m", "mobdyn", "normalize-saddle", "--matrix", "1,0,0,1"],
                       capture_output=True, text=True)
    assert r.returncode == 1 and "conformal input" in r.stderr


@pytest.mark.parametrize("text", ["inf", "Infinity", "oo"])
def test_point_parses_infinity(text):
    from mobdyn.cli import _point
    assert _point(text) is INF


def test_point_parses_i_suffix():
    from mobdyn.cli import _point
    assert _point("2+1i").z == 2 + 1j


def test_json_negative_zero_canonical():
    tr = Trajectory(np.array([0.0]), np.array([complex(0.0, -0.0)]), np.array([1 + 0j]))
    text = trajectory_json(tr, {"seed": 0})
    assert '"im":0,' in text
    assert trajectory_json(read_trajectory_json(text)[0], {"seed": 0}) == text
