"""Command line interface (``subframe``)."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import besov as bv
from . import frame as fr
from .config import load_config
from .errors import ArtifactError, SubframeError
from .geometry import (
    EPS_SCHEDULE,
    build_mesh,
    cc_distance_field,
    refined_ball_volume,
    volume_slope,
)
from .lattice import build_lattice, partition_cover, verify_lattice
from .pipeline import dumps, read_json, run_pipeline, weyl_rows, write_json
from .spectral import BandFunction, SpectralBasis, band_lm, eigenvalue, weyl_slope


def _emit(ctx, name: str, obj, rows=None, header=None):
    """Write ``obj`` as JSON (or ``rows`` as CSV with --format csv) to --out, or stdout."""
    cfg = ctx.obj["cfg"]
    use_csv = cfg.format == "csv" and rows is not None
    text = dumps(obj) if not use_csv else "\n".join([",".join(header)] + [",".join(map(str, r)) for r in rows]) + "\n"
    if ctx.obj["out_given"]:
        path = Path(cfg.out) / (name + (".csv" if use_csv else ".json"))
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
        except OSError as err:
            raise ArtifactError(f"cannot write {path}: {err}") from err
        click.echo(str(path))
    else:
        click.echo(text, nl=False)


_SHARED = [
    click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="Flat YAML config file."),
    click.option("--mesh-level", type=int, default=None),
    click.option("--J", "J", type=int, default=None, help="Finest frame level."),
    click.option("--metric", type=click.Choice(["cc", "riemann"]), default=None),
    click.option("--tol", type=float, default=None, help="Cubature moment tolerance."),
    click.option("--seed", type=int, default=None),
    click.option("--jobs", type=int, default=None),
    click.option("--out", type=click.Path(file_okay=False), default=None),
    click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default=None),
    click.option("-v", "--verbose", is_flag=True, default=None),
]
_SHARED_NAMES = ("config_path", "mesh_level", "J", "metric", "tol", "seed", "jobs", "out", "fmt", "verbose")


def _settings(ctx, given: dict):
    """Merge shared options given here with those given to the parent group."""
    merged = dict(ctx.obj.get("given", {})) if ctx.obj else {}
    merged.update({k: v for k, v in given.items() if v is not None})
    logging.basicConfig(level=logging.INFO if merged.get("verbose") else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: merged.get(k) for k in ("mesh_level", "J", "metric", "tol", "seed", "jobs", "out")}
    overrides["format"] = merged.get("fmt")
    ctx.obj = {
        "given": merged,
        "cfg": load_config(merged.get("config_path"), overrides),
        "out_given": merged.get("out") is not None or merged.get("config_path") is not None,
    }


def shared(f):
    """Accept the shared options on a command and fold them into ``ctx.obj``."""
    import functools

    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        _settings(ctx, {k: kwargs.pop(k) for k in _SHARED_NAMES})
        return f(ctx, *args, **kwargs)

    for opt in reversed(_SHARED):
        wrapper = opt(wrapper)
    return wrapper


def _group_options(f):
    for opt in reversed(_SHARED):
        f = opt(f)
    return f


@click.group()
@_group_options
@click.pass_context
def main(ctx, **given):
    """Sub-Riemannian Parseval frames on the 2-sphere."""
    ctx.obj = {}
    _settings(ctx, given)


@main.command()
@click.option("--omega", type=float, required=True)
@click.option("--kind", type=click.Choice(["sub", "elliptic"]), default="sub")
@shared
def basis(ctx, omega, kind):
    """List the band {(l, m): eigenvalue <= omega}."""
    lm = band_lm(kind, omega)
    rows = [(l, m, eigenvalue("elliptic", l, m), eigenvalue("sub", l, m)) for l, m in lm]
    _emit(ctx, f"basis_{kind}", {"kind": kind, "omega": omega, "size": len(lm),
                                  "band": [{"l": a, "m": b, "eigen_elliptic": c, "eigen_sub": d} for a, b, c, d in rows]},
          rows, ["l", "m", "eigen_elliptic", "eigen_sub"])


@main.command()
@shared
def mesh(ctx):
    """Build the icosphere mesh."""
    cfg = ctx.obj["cfg"]
    _emit(ctx, f"mesh_{cfg.mesh_level}", build_mesh(cfg.mesh_level).to_json())


@main.command()
@click.option("--r", "r", type=float, required=True)
@shared
def lattice(ctx, r):
    """Build and verify a metric r-lattice with its disjoint cover."""
    cfg = ctx.obj["cfg"]
    lat = build_lattice(build_mesh(cfg.mesh_level), cfg.metric, r, seed=cfg.seed)
    rep = verify_lattice(lat)
    part = partition_cover(lat)
    data = lat.to_json(rep)
    data["partition"] = part.to_json()
    data["cover_violations"] = part.uncovered.tolist()
    _emit(ctx, f"lattice_{cfg.metric}_{r:g}", data)


@main.command()
@click.option("--level", "j", type=int, required=True)
@shared
def cubature(ctx, j):
    """Positive cubature for the products of frame level j."""
    cfg = ctx.obj["cfg"]
    lev = fr.build_frame_level(j, j, cfg.metric, mesh_level=cfg.mesh_level, tol=cfg.tol, seed=cfg.seed)
    _emit(ctx, f"cubature_{j}", lev.rule.to_json())


@main.group()
@click.pass_context
def frame(ctx):
    """Build, apply and check the frame."""


def _frame_path(cfg) -> Path:
    return Path(cfg.out) / cfg.hash() / "frame.json"


def _load_frame(cfg) -> fr.Frame:
    return fr.Frame.from_json(read_json(_frame_path(cfg), producer="frame build"))


@frame.command("build")
@shared
def frame_build(ctx):
    """Run the full pipeline (cached by config hash) and print the manifest."""
    cfg = ctx.obj["cfg"]
    man = run_pipeline(cfg)
    click.echo(dumps(man.to_json()), nl=False)


@frame.command("analyze")
@click.option("--in", "inp", type=click.Path(exists=True, dir_okay=False), required=True, help="BandFunction JSON.")
@shared
def frame_analyze(ctx, inp):
    """Frame coefficients (j, k, s) of a band function."""
    cfg = ctx.obj["cfg"]
    f = BandFunction.from_json(read_json(inp))
    s = _load_frame(cfg).analyze(f)
    rows = list(s.to_rows())
    ctx.obj["cfg"] = cfg.replace(format="csv")
    _emit(ctx, "coeffs", None, rows, ["j", "k", "s"])


@frame.command("synth")
@click.option("--in", "inp", type=click.Path(exists=True, dir_okay=False), required=True, help="Coefficient CSV.")
@shared
def frame_synth(ctx, inp):
    """Band function (JSON) synthesized from coefficients."""
    cfg = ctx.obj["cfg"]
    frm = _load_frame(cfg)
    s = fr.FrameCoefficients.read_csv(inp, sizes=[lev.size for lev in frm.levels])
    _emit(ctx, "synth", frm.synthesize(s).to_json())


@frame.command("report")
@click.option("--parseval", is_flag=True)
@click.option("--localization", "N", type=float, default=None)
@shared
def frame_report(ctx, parseval, N):
    """Parseval deviations and/or localization constants for the built frame."""
    cfg = ctx.obj["cfg"]
    frm = _load_frame(cfg)
    out = {}
    if parseval:
        rng = np.random.default_rng(cfg.seed)
        fs = [BandFunction.random(frm.basis, fr.eigen_kind(frm.metric), frm.omega, rng) for _ in range(cfg.n_samples)]
        out["parseval"] = fr.parseval_report(frm, fs).to_json()
    if N is not None:
        m = build_mesh(cfg.mesh_level)
        out["localization"] = [fr.localization_report(lev, N, mesh=m).to_json() for lev in frm.levels if lev.j >= 1]
    _emit(ctx, "frame_report", out)


@main.group()
@click.pass_context
def besov(ctx):
    """Sobolev/Besov norms and the sectoral witness."""


@besov.command("spectral")
@click.option("--in", "inp", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--alpha", type=float, required=True)
@click.option("--kind", type=click.Choice(["sub", "elliptic"]), default="sub")
@click.option("--weight", type=click.Choice(["degree", "eigenvalue"]), default="degree")
@shared
def besov_spectral(ctx, inp, alpha, kind, weight):
    f = BandFunction.from_json(read_json(inp))
    _emit(ctx, "besov_spectral", {"alpha": alpha, "kind": kind, "weight": weight,
                                  "norm": bv.spectral_norm(f, alpha, kind, weight)})


@besov.command("seq")
@click.option("--in", "inp", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--alpha", type=float, required=True)
@click.option("--p", type=float, default=2.0)
@click.option("--q", type=float, default=2.0)
@shared
def besov_seq(ctx, inp, alpha, p, q):
    cfg = ctx.obj["cfg"]
    frm = _load_frame(cfg)
    f = BandFunction.from_json(read_json(inp))
    params = bv.BesovParams(alpha, p, q)
    seq = bv.besov_sequence_norm(frm.analyze(f), [lev.ball_volumes for lev in frm.levels], params)
    _emit(ctx, "besov_seq", {"alpha": alpha, "p": p, "q": q, "norm": seq,
                             "spectral_norm": bv.spectral_norm(f, alpha, "sub")})


@besov.command("sharpness")
@click.option("--alpha", type=float, required=True)
@click.option("--delta", type=float, required=True)
@click.option("--Lcut", "L_cut", type=int, default=10_000)
@click.option("--gamma", type=float, default=None)
@shared
def besov_sharpness(ctx, alpha, delta, L_cut, gamma):
    w = bv.sharpness_witness(alpha, delta, L_cut, gamma)
    rows = list(w.rows())
    _emit(ctx, "sharpness", {"alpha": alpha, "delta": delta, "gamma": w.gamma,
                             "sub_partial": w.sub_partial[-1], "elliptic_partial": w.elliptic_partial[-1],
                             "sub_tail_bound": w.sub_tail_bound(L_cut)},
          rows, ["L", "sub_partial", "elliptic_partial"])


@main.command()
@click.option("--log2-min", type=int, default=4)
@click.option("--log2-max", type=int, default=12)
@shared
def weyl(ctx, log2_min, log2_max):
    """Eigenvalue counts of both operators and their fitted growth exponents."""
    rows = list(weyl_rows(log2_min, log2_max))
    ws = [r[0] for r in rows]
    _emit(ctx, "weyl", {"rows": [{"omega": a, "count_elliptic": b, "count_sub": c} for a, b, c in rows],
                        "slope_elliptic": weyl_slope("elliptic", ws), "slope_sub": weyl_slope("sub", ws)},
          rows, ["omega", "count_elliptic", "count_sub"])


@main.command()
@click.argument("kind", type=click.Choice(["parseval", "localization", "besov", "weyl", "geometry"]))
@click.option("--N", "N", type=float, default=5.0, help="Localization exponent.")
@click.option("--alpha", type=float, default=1.0)
@shared
def report(ctx, kind, N, alpha):
    """Plot-ready report data."""
    cfg = ctx.obj["cfg"]
    if kind == "weyl":
        return ctx.invoke(weyl)
    if kind == "geometry":
        radii = np.geomspace(0.05, 0.4, 8)
        rows = []
        for name, lat in (("pole", np.pi / 2), ("equator", 0.0)):
            for r in radii:
                rows.append((name, float(np.log(r)), float(np.log(refined_ball_volume(lat, float(r))))))
        slopes = {n: volume_slope(radii, [np.exp(v) for m, _, v in rows if m == n]) for n in ("pole", "equator")}
        return _emit(ctx, "geometry", {"rows": [{"center": a, "log_r": b, "log_volume": c} for a, b, c in rows],
                                       "slopes": slopes, "epsilon": EPS_SCHEDULE[-1]},
                     rows, ["center", "log_r", "log_volume"])
    frm = _load_frame(cfg)
    if kind == "parseval":
        rng = np.random.default_rng(cfg.seed)
        fs = [BandFunction.random(frm.basis, fr.eigen_kind(frm.metric), frm.omega, rng) for _ in range(cfg.n_samples)]
        rep = fr.parseval_report(frm, fs)
        rows = [(i, a, b) for i, (a, b) in enumerate(zip(rep.frame_deviation, rep.reconstruction_error))]
        return _emit(ctx, "report_parseval", rep.to_json(), rows, ["sample", "frame_deviation", "reconstruction_error"])
    if kind == "localization":
        m = build_mesh(cfg.mesh_level)
        reps = [fr.localization_report(lev, N, mesh=m) for lev in frm.levels if lev.j >= 1]
        rows = [(r.j, r.N, r.C_emp) for r in reps]
        return _emit(ctx, "report_localization", [r.to_json() for r in reps], rows, ["j", "N", "C_emp"])
    if kind == "besov":
        basis = frm.basis
        fs = bv.zonal_family(basis, [0.5, 1.0, 2.0, 3.0], frm.omega)
        params = bv.BesovParams(alpha)
        rep = bv.equivalence_report(frm, fs, params)
        rows = [(i, float(x)) for i, x in enumerate(rep.ratios)]
        return _emit(ctx, "report_besov", rep.to_json(), rows, ["function", "ratio"])


def run():
    """Entry point mapping library errors to exit codes."""
    try:
        main.main(standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(1)
    except click.ClickException as err:
        err.show()
        sys.exit(2)
    except SubframeError as err:
        stage = getattr(err, "stage", None)
        prefix = f"[stage {stage}] " if stage else ""
        click.echo(f"error: {prefix}{type(err).__name__}: {err}", err=True)
        if getattr(err, "history", None):
            click.echo(f"history: {json.dumps(err.history)}", err=True)
        sys.exit(err.exit_code)
    except click.exceptions.Exit as e:
        sys.exit(e.exit_code)


if __name__ == "__main__":
    run()
