from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.sparse.csgraph import dijkstra

from subframe.errors import ResolutionError
from subframe.geometry import build_mesh, riemann_distance
from subframe.lattice import build_lattice, latitude_density, metric_search, partition_cover, verify_lattice


@pytest.fixture(scope="module")
def mesh4():
    return build_mesh(4)


@pytest.fixture(scope="module")
def mesh5():
    return build_mesh(5)


def _full_distances(lat):
    """Oracle: complete distance rows from every lattice point."""
    if lat.metric == "riemann":
        return riemann_distance(lat.points[:, None], lat.mesh.vertices[None])
    return dijkstra(lat.mesh.graph(lat.eps), directed=False, indices=lat.indices)


def test_huge_radius_single_point(mesh4):
    for metric in ("riemann", "cc"):
        lat = build_lattice(mesh4, metric, 2 * math.pi)
        assert lat.size == 1 and lat.indices[0] == 0
        part = partition_cover(lat)
        assert part.measures[0] == pytest.approx(1.0, abs=1e-12)


def test_riemann_count_bracket(mesh5):
    lat = build_lattice(mesh5, "riemann", 1.0)
    cap = lambda rho: (1 - math.cos(rho)) / 2
    assert 1 / cap(0.5) <= lat.size <= 1 / cap(0.25)


def test_cc_denser_at_equator(mesh5):
    cc = latitude_density(build_lattice(mesh5, "cc", 0.6))
    rm = latitude_density(build_lattice(mesh5, "riemann", 0.6))
    mid = len(cc) // 2
    assert cc[mid] / cc[[0, -1]].mean() > rm[mid] / rm[[0, -1]].mean()
    assert cc[mid] > rm[mid]


@pytest.mark.parametrize("metric,r", [("riemann", 0.6), ("cc", 0.6), ("cc", 0.9)])
def test_verify_against_all_pairs(mesh4, metric, r):
    lat = build_lattice(mesh4, metric, r)
    rep = verify_lattice(lat)
    D = _full_distances(lat)
    P = D[:, lat.indices]
    off = P[~np.eye(lat.size, dtype=bool)]
    assert rep.min_separation == pytest.approx(min(off.min(), r), rel=1e-12)
    assert rep.covering_radius == pytest.approx(D.min(axis=0).max(), rel=1e-12)
    assert rep.multiplicity == int((D < r).sum(axis=0).max())
    assert rep.ok and rep.min_separation >= r / 2 and rep.covering_radius <= r / 2


def test_riemann_multiplicity_stable():
    for r in (0.6, 0.3):
        m = [verify_lattice(build_lattice(build_mesh(lvl), "riemann", r)).multiplicity for lvl in (5, 6)]
        assert abs(m[0] - m[1]) <= 1


def test_resolution_error(mesh4):
    with pytest.raises(ResolutionError):
        build_lattice(mesh4, "cc", 2 * mesh4.max_edge)
    with pytest.raises(ValueError):
        metric_search(mesh4, "taxicab")


def test_deterministic(mesh4):
    a = build_lattice(mesh4, "cc", 0.7, seed=5)
    b = build_lattice(mesh4, "cc", 0.7, seed=5)
    assert np.array_equal(a.indices, b.indices) and a.indices[0] == 5


@settings(max_examples=10)
@given(st.sampled_from(["cc", "riemann"]), st.floats(0.45, 1.5), st.integers(0, 2561))
def test_partition_properties(metric, r, seed):
    mesh = build_mesh(4)
    lat = build_lattice(mesh, metric, r, seed=seed)
    part = partition_cover(lat)
    assert part.uncovered.size == 0 and np.all(part.owners >= 0)
    assert abs(part.total - 1.0) <= 1e-9
    D = _full_distances(lat)
    n = np.arange(mesh.n_vertices)
    # U_k within B(x_k, r/2), and B(x_k, r/4) inside U_k
    assert np.all(D[part.owners, n] <= r / 2)
    inner = D < r / 4
    k_in, v_in = np.nonzero(inner)
    assert np.all(part.owners[v_in] == k_in)
    # measures bracketed by ball measures
    lo = (inner * mesh.areas).sum(axis=1)
    hi = ((D <= r / 2) * mesh.areas).sum(axis=1)
    assert np.all(part.measures >= lo - 1e-12) and np.all(part.measures <= hi + 1e-12)


def test_json(mesh4):
    lat = build_lattice(mesh4, "riemann", 0.8)
    js = lat.to_json()
    assert js["r"] == 0.8 and js["points"] == lat.indices.tolist()
    assert set(js) >= {"r", "metric", "points", "separations", "covering_radius", "multiplicity"}
    pj = partition_cover(lat).to_json()
    assert len(pj["owners"]) == mesh4.n_vertices and len(pj["measures"]) == lat.size
