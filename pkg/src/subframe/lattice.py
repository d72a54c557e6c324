"""Metric r-lattices on a mesh and the disjoint cover built from them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._graph import BoundedSearch
from .errors import ResolutionError
from .geometry import DEFAULT_RINGS, EPS_SCHEDULE, MetricMesh, riemann_distance

METRICS = ("cc", "riemann")


class _RiemannSearch:
    """Exact great-circle balls through a KD-tree on the vertices."""

    def __init__(self, mesh: MetricMesh):
        self.mesh = mesh

    def __call__(self, source: int, limit: float):
        v = self.mesh.vertices
        if limit >= math.pi:
            idx = np.arange(v.shape[0])
        else:
            idx = np.asarray(self.mesh._tree.query_ball_point(v[source], 2.0 * math.sin(limit / 2.0)), dtype=np.int64)
        d = riemann_distance(v[source][None], v[idx])
        d[idx == source] = 0.0
        keep = d < limit
        return idx[keep], d[keep]


def metric_search(mesh: MetricMesh, metric: str, eps: float = EPS_SCHEDULE[-1], rings: int = DEFAULT_RINGS):
    """A callable ``(source, limit) -> (vertices, distances)`` for the chosen metric."""
    if metric == "cc":
        return BoundedSearch(mesh.graph(eps, rings))
    if metric == "riemann":
        return _RiemannSearch(mesh)
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


@dataclass
class Lattice:
    """Greedy farthest-point r-lattice on mesh vertices.

    ``nbr_ptr / nbr_idx / nbr_d`` hold, in CSR layout, every vertex at distance
    below ``r`` from each lattice point; this is all later stages need.
    """

    mesh: MetricMesh = field(repr=False)
    r: float
    metric: str
    indices: np.ndarray
    nbr_ptr: np.ndarray = field(repr=False)
    nbr_idx: np.ndarray = field(repr=False)
    nbr_d: np.ndarray = field(repr=False)
    covering_radius: float
    eps: float = EPS_SCHEDULE[-1]
    seed: int = 0

    @property
    def size(self) -> int:
        return int(self.indices.size)

    @property
    def points(self) -> np.ndarray:
        return self.mesh.vertices[self.indices]

    def neighbors(self, k: int):
        s = slice(self.nbr_ptr[k], self.nbr_ptr[k + 1])
        return self.nbr_idx[s], self.nbr_d[s]

    def owners_list(self):
        """Lattice index of each stored (point, vertex) pair, aligned with ``nbr_idx``."""
        return np.repeat(np.arange(self.size), np.diff(self.nbr_ptr))

    def to_json(self, report: "LatticeReport | None" = None) -> dict:
        report = report or verify_lattice(self)
        return {
            "r": self.r,
            "metric": self.metric,
            "mesh_level": self.mesh.level,
            "epsilon": self.eps if self.metric == "cc" else None,
            "seed": int(self.seed),
            "points": self.indices.tolist(),
            "separations": {"min": report.min_separation},
            "covering_radius": report.covering_radius,
            "multiplicity": report.multiplicity,
        }


def build_lattice(
    mesh: MetricMesh,
    metric: str = "cc",
    r: float = 0.5,
    seed: int = 0,
    eps: float = EPS_SCHEDULE[-1],
    rings: int = DEFAULT_RINGS,
    min_edges: float = 4.0,
) -> Lattice:
    """Farthest-point sampling until no vertex is farther than r/2 from the set.

    ``seed`` is the first vertex (vertex 0 is the north pole). Ties in the
    farthest distance are broken by lowest vertex index (``argmax``).
    """
    if r <= 0:
        raise ValueError("r must be > 0")
    if r < min_edges * mesh.max_edge:
        raise ResolutionError(
            f"r = {r:.4g} is below {min_edges:g} mesh edges ({mesh.max_edge:.4g}) at level {mesh.level}"
        )
    search = metric_search(mesh, metric, eps, rings)
    n = mesh.n_vertices
    mind = np.full(n, np.inf)
    chosen, ptr, nb_i, nb_d = [], [0], [], []
    nxt, far = int(seed), np.inf
    while True:
        chosen.append(nxt)
        v, d = search(nxt, max(far, r) if math.isfinite(far) else np.inf)
        upd = d < mind[v]
        mind[v[upd]] = d[upd]
        near = d < r
        order = np.argsort(v[near], kind="stable")
        nb_i.append(v[near][order])
        nb_d.append(d[near][order])
        ptr.append(ptr[-1] + int(near.sum()))
        nxt = int(np.argmax(mind))
        far = float(mind[nxt])
        if far <= r / 2:
            break
    return Lattice(
        mesh=mesh,
        r=float(r),
        metric=metric,
        indices=np.asarray(chosen, dtype=np.int64),
        nbr_ptr=np.asarray(ptr, dtype=np.int64),
        nbr_idx=np.concatenate(nb_i),
        nbr_d=np.concatenate(nb_d),
        covering_radius=far,
        eps=float(eps),
        seed=int(seed),
    )


@dataclass
class LatticeReport:
    min_separation: float
    covering_radius: float
    multiplicity: int
    r: float
    size: int

    @property
    def ok(self) -> bool:
        return self.min_separation >= self.r / 2 - 1e-12 and self.covering_radius <= self.r / 2 + 1e-12

    def to_json(self) -> dict:
        return self.__dict__.copy()


def verify_lattice(lat: Lattice) -> LatticeReport:
    """Separation, covering radius and multiplicity of ``{B(x_k, r)}`` on the mesh."""
    n = lat.mesh.n_vertices
    owners = lat.owners_list()
    # separation: lattice points inside another point's r-ball
    is_pt = np.full(n, -1, dtype=np.int64)
    is_pt[lat.indices] = np.arange(lat.size)
    hit = (is_pt[lat.nbr_idx] >= 0) & (is_pt[lat.nbr_idx] != owners)
    min_sep = float(lat.nbr_d[hit].min()) if hit.any() else float(lat.r)
    # covering radius over all vertices (vertices outside every r-ball count as uncovered)
    best = np.full(n, np.inf)
    np.minimum.at(best, lat.nbr_idx, lat.nbr_d)
    cover = float(best.max())
    mult = int(np.bincount(lat.nbr_idx, minlength=n).max())
    return LatticeReport(min_sep, cover, mult, lat.r, lat.size)


@dataclass
class CoverPartition:
    owners: np.ndarray  # lattice index owning each mesh vertex
    measures: np.ndarray  # |U_k|
    uncovered: np.ndarray  # vertices no r/2-ball reaches (empty for a valid lattice)

    @property
    def total(self) -> float:
        return float(self.measures.sum())

    def to_json(self) -> dict:
        return {"owners": self.owners.tolist(), "measures": self.measures.tolist()}


def partition_cover(lat: Lattice) -> CoverPartition:
    """Disjoint cells ``U_k``: a vertex in some ``B(x_i, r/4)`` belongs to that i,
    otherwise to the lowest-index k with the vertex in ``B(x_k, r/2)``.

    The r/4-balls are pairwise disjoint, so the first rule is unambiguous.
    """
    n = lat.mesh.n_vertices
    owners_pairs = lat.owners_list()
    owner = np.full(n, -1, dtype=np.int64)
    for inside in (lat.nbr_d < lat.r / 4, lat.nbr_d <= lat.r / 2):
        cand = np.full(n, np.iinfo(np.int64).max)
        np.minimum.at(cand, lat.nbr_idx[inside], owners_pairs[inside])
        fill = (owner < 0) & (cand < np.iinfo(np.int64).max)
        owner[fill] = cand[fill]
    uncovered = np.flatnonzero(owner < 0)
    measures = np.bincount(owner[owner >= 0], weights=lat.mesh.areas[owner >= 0], minlength=lat.size)
    return CoverPartition(owner, measures, uncovered)


def latitude_density(lat: Lattice, bins: int = 9) -> np.ndarray:
    """Lattice points per unit measure in equal-area latitude bands (z bands)."""
    z = lat.points[:, 2]
    edges = np.linspace(-1, 1, bins + 1)
    counts = np.histogram(z, edges)[0]
    return counts / (2.0 / bins / 2.0 * lat.mesh.areas.sum())
