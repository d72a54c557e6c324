"""Five-stage run: mesh -> lattices -> cubature -> frame -> reports, cached by config hash."""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .errors import ArtifactError, SubframeError
from .frame import (
    Frame,
    build_frame_level,
    eigen_kind,
    level_radius,
    localization_report,
    parseval_report,
    validate_J,
)
from .geometry import build_mesh, mesh_level_for_radius
from .lattice import build_lattice, verify_lattice
from .spectral import BandFunction, weyl_count

log = logging.getLogger(__name__)

STAGES = ("mesh", "lattices", "cubature", "frame", "reports")


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _clean(o):
    if isinstance(o, float) and not math.isfinite(o):
        return None
    if isinstance(o, dict):
        return {k: _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    return o


def dumps(obj) -> str:
    """Stable serialization: sorted keys, no NaN/Inf, trailing newline."""
    obj = json.loads(json.dumps(obj, default=_default))
    return json.dumps(_clean(obj), sort_keys=True, indent=1, allow_nan=False) + "\n"


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps(obj))
    except OSError as err:
        raise ArtifactError(f"cannot write {path}: {err}") from err
    return path


def read_json(path: Path, producer: str | None = None):
    path = Path(path)
    if not path.exists():
        hint = f" (produce it with `subframe {producer}`)" if producer else ""
        raise ArtifactError(f"missing artifact {path}{hint}")
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise ArtifactError(f"cannot parse {path}: {err}") from err


@dataclass
class StageRecord:
    name: str
    artifacts: list
    seconds: float = 0.0
    cached: bool = False
    diagnostics: dict = field(default_factory=dict)


@dataclass
class RunManifest:
    config_hash: str
    config: dict
    directory: str
    stages: list = field(default_factory=list)
    failed_stage: str | None = None
    error: str | None = None

    def to_json(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "config": self.config,
            "directory": self.directory,
            "failed_stage": self.failed_stage,
            "error": self.error,
            "stages": [s.__dict__ for s in self.stages],
        }

    @property
    def all_cached(self) -> bool:
        return bool(self.stages) and all(s.cached for s in self.stages)


def level_mesh_level(cfg: PipelineConfig, j: int) -> int:
    return max(cfg.mesh_level, mesh_level_for_radius(level_radius(j, cfg.metric)))


def _build_level(args):
    j, J, metric, mesh_level, tol, seed = args
    mesh = build_mesh(mesh_level)
    return build_frame_level(j, J, metric, mesh=mesh, tol=tol, seed=seed)


def build_levels(cfg: PipelineConfig):
    tasks = [(j, cfg.J, cfg.metric, level_mesh_level(cfg, j), cfg.tol, cfg.seed) for j in range(cfg.J + 1)]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.jobs, len(tasks))) as pool:
            return list(pool.map(_build_level, tasks))
    return [_build_level(t) for t in tasks]


def _artifacts_ok(paths) -> bool:
    for p in paths:
        try:
            read_json(p) if str(p).endswith(".json") else Path(p).read_text()
        except ArtifactError:
            return False
        except OSError:
            return False
    return True


def run_pipeline(cfg: PipelineConfig, force: bool = False) -> RunManifest:
    """Run every stage; stages whose artifacts exist for this config hash are cache hits."""
    validate_J(cfg.J, cfg.allow_extended)
    root = Path(cfg.out) / cfg.hash()
    manifest = RunManifest(cfg.hash(), cfg.semantic(), str(root))
    planned = {
        "mesh": [root / "mesh.json"],
        "lattices": [root / f"lattice_{j}.json" for j in range(cfg.J + 1)],
        "cubature": [root / f"cubature_{j}.json" for j in range(cfg.J + 1)],
        "frame": [root / "frame.json"],
        "reports": [root / "parseval.json", root / "localization.json", root / "weyl.csv"],
    }
    cached = {name: (not force) and _artifacts_ok(paths) for name, paths in planned.items()}
    if all(cached.values()):
        old = read_json(root / "manifest.json") if (root / "manifest.json").exists() else {"stages": []}
        diag = {s["name"]: s.get("diagnostics", {}) for s in old.get("stages", [])}
        manifest.stages = [StageRecord(n, [str(p) for p in planned[n]], 0.0, True, diag.get(n, {})) for n in STAGES]
        write_json(root / "manifest.json", manifest.to_json())
        return manifest

    state: dict = {}
    stage_fns = {
        "mesh": _stage_mesh,
        "lattices": _stage_lattices,
        "cubature": _stage_cubature,
        "frame": _stage_frame,
        "reports": _stage_reports,
    }
    for name in STAGES:
        t0 = time.perf_counter()
        try:
            diag = stage_fns[name](cfg, root, state, write=not cached[name])
        except SubframeError as err:
            manifest.failed_stage = name
            manifest.error = f"{type(err).__name__}: {err}"
            manifest.stages.append(StageRecord(name, [], time.perf_counter() - t0, False,
                                               {"history": getattr(err, "history", [])}))
            write_json(root / "manifest.json", manifest.to_json())
            err.stage = name
            raise
        manifest.stages.append(
            StageRecord(name, [str(p) for p in planned[name]], round(time.perf_counter() - t0, 3), cached[name], diag)
        )
        log.info("stage %s done in %.1fs%s", name, manifest.stages[-1].seconds, " (cached)" if cached[name] else "")
    write_json(root / "manifest.json", manifest.to_json())
    return manifest


def _stage_mesh(cfg, root, state, write=True):
    mesh = build_mesh(cfg.mesh_level)
    state["mesh"] = mesh
    if write:
        write_json(root / "mesh.json", mesh.to_json())
    return {"level": mesh.level, "vertices": mesh.n_vertices, "area_sum": float(mesh.areas.sum())}


def _stage_lattices(cfg, root, state, write=True):
    info = {}
    meshes = {cfg.mesh_level: state["mesh"]}
    lats = []
    for j in range(cfg.J + 1):
        lvl = level_mesh_level(cfg, j)
        if lvl not in meshes:
            meshes[lvl] = build_mesh(lvl)
        lat = build_lattice(meshes[lvl], cfg.metric, level_radius(j, cfg.metric), seed=cfg.seed)
        rep = verify_lattice(lat)
        if write:
            write_json(root / f"lattice_{j}.json", lat.to_json(rep))
        info[f"level_{j}"] = rep.to_json()
        lats.append(lat)
    state["lattices"] = lats
    return info


def _stage_cubature(cfg, root, state, write=True):
    # frame levels carry their own rules; build them here so the frame stage only assembles
    levels = []
    if cfg.jobs > 1:
        levels = build_levels(cfg)
    else:
        for j, lat in enumerate(state["lattices"]):
            levels.append(build_frame_level(j, cfg.J, cfg.metric, tol=cfg.tol, seed=cfg.seed, lattice=lat))
    info = {}
    for lev in levels:
        if write:
            write_json(root / f"cubature_{lev.j}.json", lev.rule.to_json())
        info[f"level_{lev.j}"] = {"residual": lev.rule.residual, "method": lev.rule.method,
                                  "ratio_bounds": list(lev.rule.ratio_bounds), "points": lev.size}
    state["levels"] = levels
    return info


def _stage_frame(cfg, root, state, write=True):
    frame = Frame(cfg.J, cfg.metric, state["levels"])
    state["frame"] = frame
    if write:
        write_json(root / "frame.json", frame.to_json())
    return {"atoms": [lev.size for lev in frame.levels], "band_sizes": [int(lev.band.size) for lev in frame.levels]}


def _stage_reports(cfg, root, state, write=True):
    frame = state["frame"]
    rng = np.random.default_rng(cfg.seed)
    fs = [BandFunction.random(frame.basis, eigen_kind(cfg.metric), frame.omega, rng) for _ in range(cfg.n_samples)]
    par = parseval_report(frame, fs)
    locs = [localization_report(lev, cfg.localization_N, mesh=state["mesh"]).to_json() for lev in frame.levels if lev.j >= 1]
    if write:
        write_json(root / "parseval.json", par.to_json())
        write_json(root / "localization.json", {"N": cfg.localization_N, "levels": locs})
        write_weyl_csv(root / "weyl.csv")
    return {
        "parseval_max_frame_deviation": par.max_frame,
        "max_reconstruction_error": par.max_reconstruction,
        "reconstruction_ok": par.max_reconstruction <= cfg.recon_tol,
        "localization": {str(d["j"]): d["C_emp"] for d in locs},
    }


def weyl_rows(log2_min: int = 4, log2_max: int = 12, per_octave: int = 4):
    ws = 2.0 ** np.linspace(log2_min, log2_max, (log2_max - log2_min) * per_octave + 1)
    for w in ws:
        yield float(w), weyl_count("elliptic", w), weyl_count("sub", w)


def write_weyl_csv(path: Path, **kw) -> Path:
    lines = ["omega,count_elliptic,count_sub"]
    lines += [f"{w!r},{a},{b}" for w, a, b in weyl_rows(**kw)]
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as err:
        raise ArtifactError(f"cannot write {path}: {err}") from err
    return Path(path)
