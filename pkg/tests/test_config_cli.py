from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from subframe import cli
from subframe.config import PipelineConfig, load_config
from subframe.errors import ArtifactError, ConfigError, InfeasibleError
from subframe.spectral import BandFunction, SpectralBasis


def test_precedence(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("J: 2\nseed: 3\nmetric: riemann\n")
    cfg = load_config(p, {"seed": 7}, env={"SUBFRAME_J": "0", "SUBFRAME_SEED": "5"})
    assert (cfg.J, cfg.seed, cfg.metric) == (0, 7, "riemann")
    assert load_config(p, env={}).J == 2
    assert load_config(env={"SUBFRAME_ALLOW_EXTENDED": "yes", "SUBFRAME_J": "3"}).J == 3


def test_config_errors(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("colour: red\n")
    with pytest.raises(ConfigError):
        load_config(p, env={})
    p.write_text("J: [1, 2]\n")
    with pytest.raises(ConfigError):
        load_config(p, env={})
    p.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(p, env={})
    with pytest.raises(ConfigError):
        load_config(env={"SUBFRAME_J": "two"})
    with pytest.raises(ConfigError):
        load_config(env={}, overrides={"J": 5})
    with pytest.raises(ArtifactError):
        load_config(tmp_path / "missing.yaml", env={})


def test_hash_ignores_output_fields():
    a = PipelineConfig()
    assert a.hash() == a.replace(out="elsewhere", jobs=4, format="csv").hash()
    assert a.hash() != a.replace(seed=1).hash()
    assert len(a.hash()) == 16


def _run(*args):
    return subprocess.run([sys.executable, "-m", "subframe.cli", *args], capture_output=True, text=True)


def _run_inproc(monkeypatch, *args) -> int:
    monkeypatch.setattr(sys, "argv", ["subframe", *args])
    with pytest.raises(SystemExit) as info:
        cli.run()
    return info.value.code


def test_exit_codes(tmp_path, monkeypatch):
    assert _run("frame", "build", "--J", "5").returncode == 2
    assert _run("lattice", "--r", "1e-4", "--mesh-level", "3").returncode == 3
    assert _run("frame", "report", "--parseval", "--out", str(tmp_path)).returncode == 5
    assert _run("nonsense").returncode == 2

    def boom(*a, **k):
        raise InfeasibleError("no positive rule", history=[(0.5, 1e-3)])

    monkeypatch.setattr(cli.fr, "build_frame_level", boom)
    assert _run_inproc(monkeypatch, "cubature", "--level", "0") == 4


def test_basis_csv_and_json(tmp_path):
    out = _run("basis", "--omega", "3", "--format", "csv")
    lines = out.stdout.strip().splitlines()
    assert out.returncode == 0 and lines[0] == "l,m,eigen_elliptic,eigen_sub" and len(lines) == 9
    js = json.loads(_run("basis", "--omega", "6", "--kind", "elliptic").stdout)
    assert js["size"] == 9
    res = _run("basis", "--omega", "1", "--out", str(tmp_path))
    assert (tmp_path / "basis_sub.json").exists() and res.stdout.strip().endswith("basis_sub.json")


def test_weyl_and_sharpness():
    js = json.loads(_run("weyl", "--log2-min", "4", "--log2-max", "8").stdout)
    assert js["rows"][0]["count_elliptic"] == sum(2 * l + 1 for l in range(17) if l * (l + 1) <= 16)
    sh = json.loads(_run("besov", "sharpness", "--alpha", "1", "--delta", "1", "--Lcut", "1000").stdout)
    assert sh["gamma"] == -1.25
    assert _run("besov", "sharpness", "--alpha", "1", "--delta", "0.4").returncode == 2


def test_frame_build_cached_and_apply(tmp_path):
    args = ["--J", "0", "--mesh-level", "5", "--out", str(tmp_path)]
    first = _run("frame", "build", *args)
    assert first.returncode == 0, first.stderr
    man = json.loads(first.stdout)
    assert not any(s["cached"] for s in man["stages"]) and man["failed_stage"] is None
    again = json.loads(_run("frame", "build", *args).stdout)
    assert all(s["cached"] for s in again["stages"]) and again["config_hash"] == man["config_hash"]

    # the J = 0 frame covers E_1 of the sub-Laplacian
    f = BandFunction.random(SpectralBasis(4), "sub", 1.0, np.random.default_rng(0))
    fpath = tmp_path / "f.json"
    fpath.write_text(json.dumps(f.to_json()))
    res = _run("frame", "analyze", "--in", str(fpath), *args)
    assert res.returncode == 0, res.stderr
    coeffs = tmp_path / "coeffs.csv"
    assert coeffs.read_text().startswith("j,k,s")
    res = _run("frame", "synth", "--in", str(coeffs), *args)
    assert res.returncode == 0, res.stderr
    g = BandFunction.from_json(json.loads((tmp_path / "synth.json").read_text()))
    assert g.norm() == pytest.approx(f.norm(), rel=1e-5)
    sn = json.loads(_run("besov", "spectral", "--in", str(fpath), "--alpha", "0").stdout)
    assert sn["norm"] == pytest.approx(f.norm(), rel=1e-12)
