"""Discrete Carnot-Caratheodory geometry on S^2 for the horizontal fields Y1 = X_{2,3}, Y2 = X_{1,3}.

The CC distance is approximated by shortest paths for a penalized Riemannian
metric. At a unit vector ``x`` a tangent vector ``w`` is written as
``a Y1 + b Y2 + c Y3`` and costs ``min sqrt(a^2 + b^2 + (c/eps)^2)`` over all
such representations. Because ``Y1 Y1^T + Y2 Y2^T + Y3 Y3^T`` is the tangent
projector, this has the closed form::

    |w|_eps^2 = |w|^2 + (1 - eps^2) (Y3(x).w)^2 / (x3^2 + eps^2 (x1^2 + x2^2))

``eps = 1`` is the round metric; ``eps -> 0`` charges the bracket direction
without bound and the metric increases monotonically to the sub-Riemannian one.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from .errors import CapacityError, ResolutionWarning
from .spectral import TOTAL_MASS

MESH_LEVEL_CAP = 8
DEFAULT_MESH_LEVEL = 6
EPS_SCHEDULE = (0.2, 0.1, 0.05, 0.02, 0.01)
DEFAULT_RINGS = 3

_GL_T, _GL_W = np.polynomial.legendre.leggauss(6)
_GL_T = 0.5 * (_GL_T + 1.0)
_GL_W = 0.5 * _GL_W


@dataclass(frozen=True)
class HorizontalFrame:
    point: np.ndarray
    Y1: np.ndarray
    Y2: np.ndarray
    Y3: np.ndarray

    def rank(self, tol=1e-12) -> int:
        return int(np.linalg.matrix_rank(np.stack([self.Y1, self.Y2]), tol=tol))


def horizontal_frame(x) -> HorizontalFrame:
    x = np.asarray(x, dtype=float)
    x1, x2, x3 = x
    return HorizontalFrame(
        point=x,
        Y1=np.array([0.0, -x3, x2]),
        Y2=np.array([-x3, 0.0, x1]),
        Y3=np.array([-x2, x1, 0.0]),
    )


def riemann_distance(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    cross = np.linalg.norm(np.cross(x, y), axis=-1)
    return np.arctan2(cross, np.sum(x * y, axis=-1))


def penalized_norm(x, w, eps: float):
    """Length of tangent vector(s) ``w`` at ``x`` in the eps-penalized metric."""
    x = np.atleast_2d(x)
    w = np.atleast_2d(w)
    y3w = -x[:, 1] * w[:, 0] + x[:, 0] * w[:, 1]
    denom = x[:, 2] ** 2 + eps * eps * (x[:, 0] ** 2 + x[:, 1] ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        extra = np.where(y3w == 0.0, 0.0, (1.0 - eps * eps) * y3w * y3w / denom)
    return np.sqrt(np.sum(w * w, axis=1) + extra)


def _graded_rule(levels: int = 10):
    """Nodes/weights on [0, 1] on dyadic intervals shrinking toward 0."""
    edges = np.r_[0.0, 2.0 ** -np.arange(levels - 1, -1, -1.0)]
    a, b = edges[:-1, None], edges[1:, None]
    return (a + (b - a) * _GL_T).ravel(), ((b - a) * _GL_W).ravel()


_GRADED_T, _GRADED_W = _graded_rule()


def arc_costs(u, v, eps: float) -> np.ndarray:
    """Penalized length of the great-circle arcs from rows of ``u`` to rows of ``v``.

    Along a great circle with unit normal ``n`` the bracket component of the unit
    tangent is the constant ``n3``, so only ``x3`` varies under the integral. The
    integrand peaks on a width ~eps around ``x3 = 0``; arcs that pass near it are
    integrated on intervals graded toward the peak.
    """
    u = np.atleast_2d(u)
    v = np.atleast_2d(v)
    cr = np.cross(u, v)
    sin_t = np.linalg.norm(cr, axis=1)
    theta = np.arctan2(sin_t, np.sum(u * v, axis=1))
    if eps == 1.0:
        return theta
    with np.errstate(invalid="ignore", divide="ignore"):
        n3 = np.where(sin_t > 0, cr[:, 2] / sin_t, 0.0)
    n3sq = n3 * n3
    u3, v3 = u[:, 2], v[:, 2]

    def mean_speed(sel, t, w):
        # t, w: (k,) nodes or (n_sel, k); returns the weighted sum of the speed
        th = theta[sel][:, None]
        st = sin_t[sel][:, None]
        with np.errstate(invalid="ignore", divide="ignore"):
            x3 = np.where(st > 0, (np.sin((1 - t) * th) * u3[sel][:, None] + np.sin(t * th) * v3[sel][:, None]) / st,
                          u3[sel][:, None])
            denom = x3 * x3 + eps * eps * (1.0 - x3 * x3)
            q = n3sq[sel][:, None]
            f = np.sqrt(1.0 + np.where(q == 0.0, 0.0, (1.0 - eps * eps) * q / denom))
        return np.sum(w * f, axis=1)

    everyone = np.ones(theta.size, dtype=bool)
    out = theta * mean_speed(everyone, _GL_T[None], _GL_W[None])
    cross = u3 * v3 < 0
    lo = np.where(cross, 0.0, np.minimum(np.abs(u3), np.abs(v3)))
    sharp = (np.abs(v3 - u3) > 0.25 * (lo + eps)) & (n3sq > 0) & (sin_t > 0)
    if np.any(sharp):
        th = theta[sharp]
        a3, b3 = u3[sharp], v3[sharp]
        den = a3 * np.cos(th) - b3
        with np.errstate(invalid="ignore", divide="ignore"):
            t_cross = np.arctan(a3 * np.sin(th) / den) / th
        anchor = np.where(cross[sharp], t_cross, np.where(np.abs(a3) <= np.abs(b3), 0.0, 1.0))
        anchor = np.clip(np.nan_to_num(anchor, nan=0.0), 0.0, 1.0)[:, None]
        right = 1.0 - anchor
        total = right[:, 0] * mean_speed(sharp, anchor + right * _GRADED_T, _GRADED_W[None])
        total += anchor[:, 0] * mean_speed(sharp, anchor - anchor * _GRADED_T, _GRADED_W[None])
        out[sharp] = th * total
    return out


def edge_cost(u, v, eps: float) -> float:
    """Penalized length of the arc from ``u`` to ``v`` (a single mesh edge)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.allclose(u, v, atol=0, rtol=0):
        raise ValueError("edge endpoints coincide")
    if eps <= 0:
        raise ValueError("eps must be > 0")
    return float(arc_costs(u[None], v[None], eps)[0])


def _icosahedron():
    z = 1.0 / math.sqrt(5.0)
    rho = 2.0 / math.sqrt(5.0)
    k = np.arange(5)
    upper = np.stack([rho * np.cos(2 * np.pi * k / 5), rho * np.sin(2 * np.pi * k / 5), np.full(5, z)], 1)
    lower = np.stack(
        [rho * np.cos(2 * np.pi * k / 5 + np.pi / 5), rho * np.sin(2 * np.pi * k / 5 + np.pi / 5), np.full(5, -z)], 1
    )
    verts = np.vstack([[0, 0, 1.0], [0, 0, -1.0], upper, lower])
    U = 2 + k
    Lw = 7 + k
    k1 = (k + 1) % 5
    faces = np.vstack(
        [
            np.stack([np.zeros(5, int), U, U[k1]], 1),
            np.stack([np.ones(5, int), Lw[k1], Lw], 1),
            np.stack([U, Lw, U[k1]], 1),
            np.stack([Lw, Lw[k1], U[k1]], 1),
        ]
    )
    return verts, faces


def _unique_edges(e, n):
    lo = np.minimum(e[:, 0], e[:, 1]).astype(np.int64)
    hi = np.maximum(e[:, 0], e[:, 1]).astype(np.int64)
    keys, inv = np.unique(lo * n + hi, return_inverse=True)
    return np.stack([keys // n, keys % n], 1), inv.ravel()


def _subdivide(verts, faces):
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    uniq, inv = _unique_edges(e, verts.shape[0])
    mid = verts[uniq[:, 0]] + verts[uniq[:, 1]]
    mid /= np.linalg.norm(mid, axis=1)[:, None]
    n_f = faces.shape[0]
    n_v = verts.shape[0]
    ab, bc, ca = (inv[:n_f] + n_v, inv[n_f : 2 * n_f] + n_v, inv[2 * n_f :] + n_v)
    a, b, c = faces.T
    new_faces = np.vstack(
        [np.stack([a, ab, ca], 1), np.stack([b, bc, ab], 1), np.stack([c, ca, bc], 1), np.stack([ab, bc, ca], 1)]
    )
    return np.vstack([verts, mid]), new_faces


def spherical_triangle_areas(verts, faces) -> np.ndarray:
    a, b, c = verts[faces[:, 0]], verts[faces[:, 1]], verts[faces[:, 2]]
    triple = np.abs(np.sum(a * np.cross(b, c), axis=1))
    denom = 1.0 + np.sum(a * b, 1) + np.sum(b * c, 1) + np.sum(c * a, 1)
    return 2.0 * np.arctan2(triple, denom)


@dataclass
class MetricMesh:
    """Icosphere carrying cell areas (barycentric thirds of spherical face areas)."""

    vertices: np.ndarray
    faces: np.ndarray
    edges: np.ndarray
    areas: np.ndarray
    level: int
    measure: str = "normalized"
    _graphs: dict = field(default_factory=dict, repr=False)
    _stencils: dict = field(default_factory=dict, repr=False)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @cached_property
    def edge_chords(self) -> np.ndarray:
        return np.linalg.norm(self.vertices[self.edges[:, 0]] - self.vertices[self.edges[:, 1]], axis=1)

    @cached_property
    def edge_arcs(self) -> np.ndarray:
        return riemann_distance(self.vertices[self.edges[:, 0]], self.vertices[self.edges[:, 1]])

    @property
    def max_edge(self) -> float:
        return float(self.edge_arcs.max())

    @cached_property
    def _tree(self):
        return cKDTree(self.vertices)

    def nearest_vertex(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        p = p / np.linalg.norm(p, axis=1)[:, None]
        return self._tree.query(p)[1]

    def stencil(self, rings: int = DEFAULT_RINGS) -> np.ndarray:
        """Vertex pairs ``(i < j)`` within ``rings`` edge hops of each other."""
        if rings not in self._stencils:
            n = self.n_vertices
            i, j = self.edges.T
            A = sp.csr_matrix((np.ones(2 * i.size, dtype=np.int8), (np.r_[i, j], np.r_[j, i])), shape=(n, n))
            reach = A.copy()
            frontier = A
            for _ in range(rings - 1):
                frontier = (frontier @ A).astype(bool).astype(np.int8)
                reach = (reach + frontier).astype(bool).astype(np.int8)
            reach = sp.triu(reach, k=1).tocoo()
            self._stencils[rings] = np.stack([reach.row, reach.col], 1).astype(np.int64)
        return self._stencils[rings]

    def graph(self, eps: float, rings: int = DEFAULT_RINGS) -> sp.csr_matrix:
        """Symmetric sparse graph whose weights are penalized arc lengths."""
        key = (float(eps), rings)
        if key not in self._graphs:
            pairs = self.stencil(rings)
            w = arc_costs(self.vertices[pairs[:, 0]], self.vertices[pairs[:, 1]], eps)
            n = self.n_vertices
            g = sp.csr_matrix((np.r_[w, w], (np.r_[pairs[:, 0], pairs[:, 1]], np.r_[pairs[:, 1], pairs[:, 0]])), shape=(n, n))
            if len(self._graphs) >= 2:
                self._graphs.pop(next(iter(self._graphs)))
            self._graphs[key] = g
        return self._graphs[key]

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "measure": self.measure,
            "vertices": self.vertices.tolist(),
            "edges": self.edges.tolist(),
            "areas": self.areas.tolist(),
        }


def build_mesh(level: int = DEFAULT_MESH_LEVEL, measure: str = "normalized") -> MetricMesh:
    """Icosphere with ``20 * 4**level`` faces, one vertex at each pole."""
    if level < 0:
        raise ValueError("level must be >= 0")
    if level > MESH_LEVEL_CAP:
        raise CapacityError(f"mesh level {level} exceeds cap {MESH_LEVEL_CAP}")
    verts, faces = _icosahedron()
    for _ in range(level):
        verts, faces = _subdivide(verts, faces)
    fa = spherical_triangle_areas(verts, faces)
    areas = np.bincount(faces.ravel(), weights=np.repeat(fa / 3.0, 3), minlength=verts.shape[0])
    areas *= TOTAL_MASS[measure] / (4.0 * math.pi)
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    edges = _unique_edges(e, verts.shape[0])[0]
    return MetricMesh(verts, faces, edges, areas, level, measure)


def mesh_level_for_radius(r: float, edges_per_radius: int = 4) -> int:
    """Coarsest icosphere level with ``edges_per_radius`` edges inside radius r."""
    for level in range(MESH_LEVEL_CAP + 1):
        # level-0 edge is arctan(2) and it roughly halves per subdivision
        if math.atan(2.0) / 2**level * 1.02 * edges_per_radius <= r:
            return level
    raise CapacityError(f"radius {r} needs a mesh finer than level {MESH_LEVEL_CAP}")


@dataclass
class DistanceField:
    source: int
    point: np.ndarray
    eps: float
    d: np.ndarray
    schedule: tuple = ()
    history: dict = field(default_factory=dict, repr=False)

    @property
    def convergence(self) -> float:
        """Largest change between the last two schedule steps (finite entries)."""
        if len(self.schedule) < 2:
            return 0.0
        a = self.history[self.schedule[-2]]
        b = self.history[self.schedule[-1]]
        ok = np.isfinite(a) & np.isfinite(b)
        return float(np.max(np.abs(b[ok] - a[ok]), initial=0.0))

    def to_json(self) -> dict:
        return {
            "source": int(self.source),
            "epsilon": self.eps,
            "schedule": list(self.schedule),
            "d": [None if not math.isfinite(x) else float(x) for x in self.d],
        }


def _source_index(mesh: MetricMesh, source) -> int:
    if np.ndim(source) == 0:
        return int(source)
    return int(mesh.nearest_vertex(source)[0])


def cc_distance_field(
    mesh: MetricMesh,
    source,
    eps_schedule=EPS_SCHEDULE,
    rings: int = DEFAULT_RINGS,
    limit: float = np.inf,
    keep_history: bool = True,
) -> DistanceField:
    """Shortest-path distance from ``source`` for each eps of the schedule.

    ``source`` is a vertex index or a point (snapped to the nearest vertex).
    The reported field belongs to the last eps.
    """
    src = _source_index(mesh, source)
    history = {}
    d = None
    for eps in eps_schedule:
        d = dijkstra(mesh.graph(eps, rings), directed=False, indices=src, limit=limit)
        if keep_history:
            history[eps] = d
    assert limit < np.inf or np.all(np.isfinite(d)), "mesh graph is disconnected"
    return DistanceField(src, mesh.vertices[src], float(eps_schedule[-1]), d, tuple(eps_schedule), history)


def riemann_distance_field(mesh: MetricMesh, source) -> DistanceField:
    src = _source_index(mesh, source)
    d = riemann_distance(mesh.vertices[src][None], mesh.vertices)
    return DistanceField(src, mesh.vertices[src], 1.0, d, (1.0,), {})


def ball_volume(mesh: MetricMesh, field: DistanceField, r: float) -> float:
    """Measure of ``{y : d(source, y) < r}`` by summing vertex cell areas."""
    if r <= 0:
        raise ValueError("r must be > 0")
    if r < 2.0 * mesh.max_edge:
        warnings.warn(f"radius {r:.3g} is below twice the mesh spacing {mesh.max_edge:.3g}", ResolutionWarning)
    return float(mesh.areas[field.d < r].sum())


@dataclass
class ComparabilityFit:
    c: float  # largest c with c * rho <= mu
    C: float  # smallest C with mu <= C * rho**(1/step)
    rho: np.ndarray
    mu: np.ndarray


def comparability_fit(mesh: MetricMesh, pairs, eps_schedule=EPS_SCHEDULE, rings=DEFAULT_RINGS, step=2):
    """Fit ``c rho <= mu <= C rho^(1/step)`` over vertex pairs ``(i, j)``."""
    pairs = np.asarray(pairs, dtype=np.int64)
    if pairs.shape[0] < 100:
        raise ValueError("need at least 100 sample pairs")
    mu = np.empty(pairs.shape[0])
    for src in np.unique(pairs[:, 0]):
        sel = pairs[:, 0] == src
        d = dijkstra(mesh.graph(eps_schedule[-1], rings), directed=False, indices=int(src))
        mu[sel] = d[pairs[sel, 1]]
    rho = riemann_distance(mesh.vertices[pairs[:, 0]], mesh.vertices[pairs[:, 1]])
    ok = rho > 0
    return ComparabilityFit(
        c=float(np.min(mu[ok] / rho[ok])),
        C=float(np.max(mu[ok] / rho[ok] ** (1.0 / step))),
        rho=rho,
        mu=mu,
    )


# Local latitude-longitude patches.  Rotations about the x3 axis preserve the
# horizontal distribution, so a ball depends only on its center's latitude and
# can be resolved on a grid stretched to the ball's own anisotropy.


def _lon_speed_bound(psi, eps):
    # longitude advance per unit length at latitude psi
    return np.sqrt(np.tan(np.minimum(np.abs(psi), 1.5707)) ** 2 + eps * eps)


@dataclass
class LocalPatch:
    latitude: float
    radius: float
    eps: float
    psi: np.ndarray
    phi: np.ndarray
    periodic: bool
    areas: np.ndarray  # (n_psi, n_phi)
    d: np.ndarray  # (n_psi, n_phi), distance from the center

    def ball_volume(self, r: float) -> float:
        return float(self.areas[self.d < r].sum())

    def touches_boundary(self, r: float) -> bool:
        inside = self.d < r
        edge = inside[0].any() and self.psi[0] > -math.pi / 2 + 1e-12
        edge |= inside[-1].any() and self.psi[-1] < math.pi / 2 - 1e-12
        if not self.periodic:
            edge |= inside[:, 0].any() or inside[:, -1].any()
        return bool(edge)


def build_patch(
    latitude: float,
    radius: float,
    eps: float = EPS_SCHEDULE[-1],
    n: int = 161,
    reach: int = 3,
    measure: str = "normalized",
    margin: float = 1.3,
) -> LocalPatch:
    """Distance field from ``(latitude, lon=0)`` on a latitude-longitude grid sized to ``radius``."""
    half = (n - 1) // 2
    h = margin * radius / half
    k = np.arange(-half, half + 1)
    psi = latitude + h * k
    psi = psi[(psi > -math.pi / 2) & (psi < math.pi / 2)]
    if latitude + margin * radius >= math.pi / 2:
        psi = np.r_[psi, math.pi / 2]
    if latitude - margin * radius <= -math.pi / 2:
        psi = np.r_[-math.pi / 2, psi]
    psi = np.unique(psi)
    lo, hi = max(-math.pi / 2, latitude - margin * radius), min(math.pi / 2, latitude + margin * radius)
    probe = np.linspace(lo, hi, 257)
    Phi = 1.15 * margin * radius * float(np.max(_lon_speed_bound(probe, eps)))
    touches_pole = hi >= math.pi / 2 - 1e-12 or lo <= -math.pi / 2 + 1e-12
    periodic = touches_pole or Phi >= math.pi
    if periodic:
        n_phi = 2 * half
        phi = -math.pi + 2.0 * math.pi * np.arange(n_phi) / n_phi
        dphi = np.full(n_phi, 2.0 * math.pi / n_phi)
    else:
        n_phi = 2 * half + 1
        phi = np.linspace(-Phi, Phi, n_phi)
        dphi = np.full(n_phi, phi[1] - phi[0])
        dphi[[0, -1]] *= 0.5
    n_psi = psi.size
    # latitude cells between midpoints, clipped to the window / poles
    edges_psi = np.r_[psi[0], 0.5 * (psi[1:] + psi[:-1]), psi[-1]]
    band = np.sin(edges_psi[1:]) - np.sin(edges_psi[:-1])
    areas = np.outer(band, dphi) * (TOTAL_MASS[measure] / (4.0 * math.pi))

    idx = np.arange(n_psi * n_phi).reshape(n_psi, n_phi)
    rows, cols, vals = [], [], []
    for di in range(0, reach + 1):
        for dj in range(-reach, reach + 1):
            if (di == 0 and dj <= 0) or math.gcd(di, abs(dj)) != 1:
                continue
            a_i = np.arange(0, n_psi - di)
            if periodic:
                a_j = np.arange(n_phi)
                b_j = (a_j + dj) % n_phi
                step_phi = np.full(n_phi, dj * 2.0 * math.pi / n_phi)
            else:
                a_j = np.arange(max(0, -dj), n_phi - max(0, dj))
                b_j = a_j + dj
                step_phi = phi[b_j] - phi[a_j]
            A_i, A_j = np.meshgrid(a_i, a_j, indexing="ij")
            B_i = A_i + di
            B_j = np.broadcast_to(b_j[None, :], A_i.shape)
            p0 = psi[A_i]
            p1 = psi[B_i]
            dph = np.broadcast_to(step_phi[None, :], A_i.shape)
            cost = np.zeros(A_i.shape)
            for t, w in zip(_GL_T, _GL_W):
                pm = p0 + t * (p1 - p0)
                cz = np.cos(pm)
                G = cz * cz / (np.sin(pm) ** 2 + eps * eps * cz * cz)
                cost += w * np.sqrt((p1 - p0) ** 2 + G * dph * dph)
            rows.append(idx[A_i, A_j].ravel())
            cols.append(idx[B_i, B_j].ravel())
            vals.append(cost.ravel())
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    # zero-length moves along a pole row: keep them with a tiny positive weight
    vals = np.maximum(vals, 1e-300)
    N = n_psi * n_phi
    g = sp.csr_matrix((np.r_[vals, vals], (np.r_[rows, cols], np.r_[cols, rows])), shape=(N, N))
    i0 = int(np.argmin(np.abs(psi - latitude)))
    j0 = int(np.argmin(np.abs(phi)))
    if abs(abs(latitude) - math.pi / 2) < 1e-12:
        sources = idx[i0]
        d = dijkstra(g, directed=False, indices=sources, min_only=True)
    else:
        d = dijkstra(g, directed=False, indices=idx[i0, j0])
    return LocalPatch(latitude, radius, eps, psi, phi, periodic, areas, d.reshape(n_psi, n_phi))


def refined_ball_volume(latitude: float, r: float, eps: float = EPS_SCHEDULE[-1], n: int = 161, measure="normalized") -> float:
    """|B(x, r)| for a center at ``latitude``, resolved on a local patch."""
    margin = 1.3
    for _ in range(4):
        patch = build_patch(latitude, r, eps, n=n, measure=measure, margin=margin)
        if not patch.touches_boundary(r):
            return patch.ball_volume(r)
        margin *= 1.6
    warnings.warn("ball reaches the patch boundary; volume is a lower bound", ResolutionWarning)
    return patch.ball_volume(r)


def point_latitude(points) -> np.ndarray:
    p = np.atleast_2d(np.asarray(points, dtype=float))
    return np.arctan2(p[:, 2], np.hypot(p[:, 0], p[:, 1]))


@dataclass
class BallVolumeProfile:
    """``|B^mu(x, r)|`` as a function of |latitude(x)| for one radius (tabulated, log-interpolated)."""

    radius: float
    eps: float
    latitudes: np.ndarray
    volumes: np.ndarray

    def __call__(self, points) -> np.ndarray:
        lat = np.abs(point_latitude(points))
        return np.exp(np.interp(lat, self.latitudes, np.log(self.volumes)))


_PROFILE_CACHE: dict = {}


def ball_volume_profile(r: float, eps: float = EPS_SCHEDULE[-1], n_lat: int = 41, n: int = 121, measure="normalized"):
    """Cached per ``(r, eps)``; latitude nodes cluster at the equator where volumes vary fastest."""
    key = (float(r), float(eps), n_lat, n, measure)
    if key not in _PROFILE_CACHE:
        lats = (math.pi / 2) * np.linspace(0.0, 1.0, n_lat) ** 2
        vols = np.array([refined_ball_volume(float(a), r, eps, n=n, measure=measure) for a in lats])
        _PROFILE_CACHE[key] = BallVolumeProfile(float(r), float(eps), lats, vols)
    return _PROFILE_CACHE[key]


def volume_slope(radii, volumes) -> float:
    return float(np.polyfit(np.log(radii), np.log(volumes), 1)[0])
