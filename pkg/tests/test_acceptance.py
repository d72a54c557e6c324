"""Acceptance checks, one test per criterion, each at its stated tolerance and runtime.

Run standalone with ``python3 tests/test_acceptance.py``; a summary line per
criterion is printed at the end of the pytest report. Runtimes for criteria 8
and 9 include building the shared frame they use.
"""

from __future__ import annotations

import time

import numpy as np
import pytest

from subframe.besov import sharpness_witness
from subframe.cubature import plancherel_polya_ratio
from subframe.frame import (
    build_frame_level,
    localization_report,
    parseval_report,
    partition_of_unity,
)
from subframe.geometry import build_mesh, refined_ball_volume, volume_slope
from subframe.lattice import build_lattice, partition_cover, verify_lattice
from subframe.pipeline import weyl_rows
from subframe.spectral import (
    BandFunction,
    SpectralBasis,
    band_lm,
    eigen_fd_errors,
    embedding_check,
    l_max_needed,
    product_band_check,
    weyl_slope,
)

pytestmark = pytest.mark.slow


def test_window_partition_of_unity(record):
    t0 = time.perf_counter()
    worst = 0.0
    for J in (1, 2, 3):
        s = np.linspace(0.0, 2.0 ** (2 * J), 100_000)
        worst = max(worst, float(np.max(np.abs(partition_of_unity(J, s) - 1.0))))
    dt = (time.perf_counter() - t0) / 3
    ok = record(1, worst <= 1e-13 and dt < 1.0, f"max |sum F_j^2 - 1| = {worst:.2e}, {dt:.2f}s per J")
    assert ok


def test_eigenstructure_fd(record):
    t0 = time.perf_counter()
    mesh = build_mesh(7)
    err = eigen_fd_errors(SpectralBasis(10), mesh.vertices, "sub")
    dt = time.perf_counter() - t0
    ok = record(2, err.max() <= 1e-4 and dt < 60, f"max relative error {err.max():.2e} on {mesh.n_vertices} vertices, {dt:.1f}s")
    assert ok


def test_product_property(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    basis = SpectralBasis(l_max_needed("elliptic", 6.0))
    worst = 0.0
    for _ in range(50):
        f = BandFunction.random(basis, "elliptic", 6.0, rng)
        g = BandFunction.random(basis, "elliptic", 6.0, rng)
        chk = product_band_check(f, g)
        lam = chk.product.basis.eigenvalues("elliptic")
        worst = max(worst, float(np.linalg.norm(chk.product.coeffs[lam > 72.0])))
    dt = time.perf_counter() - t0
    ok = record(3, worst <= 1e-10 and dt < 60, f"max norm outside E_72 = {worst:.2e}, {dt:.1f}s")
    assert ok


def test_embeddings(record):
    t0 = time.perf_counter()
    reps = [embedding_check(w) for w in (1.0, 4.0, 16.0, 64.0)]
    c = max(r.sub_to_elliptic_c for r in reps)
    C = max(r.elliptic_to_sub_C for r in reps)
    # the inclusions themselves, on index sets
    incl = all(
        set(band_lm("sub", w)) <= set(band_lm("elliptic", r.sub_to_elliptic_c * w**2))
        and set(band_lm("elliptic", w)) <= set(band_lm("sub", r.elliptic_to_sub_C * w))
        for w, r in zip((1.0, 4.0, 16.0, 64.0), reps)
    )
    dt = time.perf_counter() - t0
    ok = record(4, incl and c <= 2 and C <= 2 and dt < 1.0, f"c = {c:.4f}, C = {C:.4f}, {dt:.2f}s")
    assert ok


def test_lattice_axioms(record):
    t0 = time.perf_counter()
    meshes = {lvl: build_mesh(lvl) for lvl in (6, 7)}
    fails, parts = [], []
    for metric in ("riemann", "cc"):
        for r in (0.6, 0.3):
            reps = {lvl: verify_lattice(build_lattice(m, metric, r)) for lvl, m in meshes.items()}
            mults = [reps[lvl].multiplicity for lvl in (6, 7)]
            for lvl, rep in reps.items():
                if rep.min_separation < r / 2 * 0.98:
                    fails.append(f"{metric} r={r} L{lvl} separation {rep.min_separation:.3f}")
                if rep.covering_radius > r / 2 * 1.02:
                    fails.append(f"{metric} r={r} L{lvl} covering {rep.covering_radius:.3f}")
                if rep.multiplicity > 8:
                    fails.append(f"{metric} r={r} L{lvl} multiplicity {rep.multiplicity}")
            if abs(mults[0] - mults[1]) > 1:
                fails.append(f"{metric} r={r} multiplicity unstable {mults}")
            parts.append(f"{metric}/{r}: mult {mults}")
    dt = time.perf_counter() - t0
    ok = record(5, not fails and dt < 300, f"{'; '.join(parts)}; {dt:.0f}s" + (f"; violations: {len(fails)}" if fails else ""))
    assert ok, fails


def test_cubature_level1(record):
    t0 = time.perf_counter()
    lev = build_frame_level(1, 1, "cc")
    rule = lev.rule
    dt = time.perf_counter() - t0
    ok = record(
        6,
        rule.residual <= 1e-9 and np.all(rule.weights > 0) and rule.ratio_spread <= 100 and dt < 600,
        f"residual {rule.residual:.1e}, min weight {rule.weights.min():.2e}, spread {rule.ratio_spread:.2f}, {dt:.0f}s",
    )
    assert ok


def test_plancherel_polya(record):
    t0 = time.perf_counter()
    spreads = []
    for r, lvl in ((0.25, 6), (0.125, 6), (0.0625, 7)):
        lat = build_lattice(build_mesh(lvl), "cc", r)
        pp = plancherel_polya_ratio("sub", 16.0, lat, partition_cover(lat), n_samples=200, rng=0)
        assert np.isfinite(pp.min) and np.isfinite(pp.max) and pp.min > 0
        spreads.append(pp.spread)
    mono = all(b <= a * 1.05 for a, b in zip(spreads, spreads[1:]))
    dt = time.perf_counter() - t0
    ok = record(7, max(spreads) <= 10 and mono and dt < 600,
                f"spreads {', '.join(f'{s:.4f}' for s in spreads)}, {dt:.0f}s")
    assert ok


def test_parseval_reconstruction(record, frame_j1):
    frame, build_s = frame_j1
    t0 = time.perf_counter() - build_s
    rng = np.random.default_rng(1)
    fs = [BandFunction.random(frame.basis, "sub", frame.omega, rng) for _ in range(100)]
    rep = parseval_report(frame, fs)
    dt = time.perf_counter() - t0
    ok = record(
        8,
        rep.max_frame <= 1e-6 and rep.max_reconstruction <= 1e-6 and rep.out_of_band == 0 and dt < 600,
        f"frame deviation {rep.max_frame:.1e}, reconstruction {rep.max_reconstruction:.1e}, {dt:.0f}s",
    )
    assert ok


def test_localization_levels(record, frame_j2):
    frame, build_s = frame_j2
    t0 = time.perf_counter() - build_s
    mesh = build_mesh(6)
    C = [localization_report(frame.levels[j], 5.0, mesh=mesh).C_emp for j in (1, 2)]
    dt = time.perf_counter() - t0
    finite = all(np.isfinite(C))
    ratio = max(C) / min(C)
    ok = record(9, finite and ratio <= 2 and dt < 600,
                f"C_emp(N=5) = {C[0]:.1f} (j=1), {C[1]:.1f} (j=2), ratio {ratio:.2f}, {dt:.0f}s")
    assert ok


def test_weyl_slopes(record):
    t0 = time.perf_counter()
    ws = [w for w, _, _ in weyl_rows(4, 12)]
    se, ss = weyl_slope("elliptic", ws), weyl_slope("sub", ws)
    dt = time.perf_counter() - t0
    ok = record(10, abs(se - 1.0) <= 0.1 and abs(ss - 1.5) <= 0.1 and dt < 10,
                f"elliptic {se:.3f}, sub {ss:.3f}, {dt:.2f}s")
    assert ok


def test_ball_volume_anisotropy(record):
    t0 = time.perf_counter()
    radii = np.geomspace(0.05, 0.4, 8)
    pole = volume_slope(radii, [refined_ball_volume(np.pi / 2, float(r)) for r in radii])
    eq = volume_slope(radii, [refined_ball_volume(0.0, float(r)) for r in radii])
    dt = time.perf_counter() - t0
    ok = record(11, abs(pole - 2) <= 0.2 and abs(eq - 3) <= 0.3 and dt < 300,
                f"pole slope {pole:.3f}, equator slope {eq:.3f}, {dt:.1f}s")
    assert ok


def test_sharpness_witness(record):
    t0 = time.perf_counter()
    w = sharpness_witness(1.0, 1.0, 10_000, gamma=-1.4)
    s200 = w.partial_at(200)[0]
    increment = float(np.max(np.abs(w.sub_partial[200:] - s200)))
    tail = w.sub_tail_bound(200)
    growth = w.partial_at(10_000)[1] / w.partial_at(1_000)[1]
    dt = time.perf_counter() - t0
    ok = record(12, increment <= 1e-2 and tail <= 1e-2 and growth >= 1.5 and dt < 10,
                f"sub tail increment {increment:.2e} (bound {tail:.2e}), elliptic growth {growth:.3f}, {dt:.2f}s")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-rN"]))
