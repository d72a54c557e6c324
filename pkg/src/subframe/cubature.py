"""Positive cubature on lattice points and Plancherel-Polya sampling ratios.

Weights start from the cell measures ``|U_k|`` and receive the weighted
minimum-norm correction that makes every moment exact::

    alpha = w + W A^T (A W A^T)^{-1} (e - A w),    W = diag(w)

Because ``A W A^T`` is a cell-weighted Gram matrix it stays close to the
identity on a dense lattice, so the correction is small and keeps the weights
positive. If it does not, a nonnegative least-squares solve above the floor
``beta * |U_k|`` is tried; failing that the lattice is refined.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
from scipy.optimize import nnls
from scipy.sparse.linalg import LinearOperator, cg

from ._pointwise import PointwiseHarmonics
from .errors import InfeasibleError, ResolutionError
from .lattice import CoverPartition, Lattice, build_lattice, partition_cover
from .spectral import SpectralBasis, l_max_needed

log = logging.getLogger(__name__)

CUBATURE_TOL = 1e-9
TIKHONOV = 1e-12
DENSE_ENTRIES = 3_000_000 * 10
NNLS_FLOORS = (0.5, 0.2, 0.05)
NNLS_MAX_ENTRIES = 6_000_000


def exactness_degree(kind: str, omega: float) -> int:
    """Degree of the elliptic space holding all products of two band functions."""
    return 2 * l_max_needed(kind, omega)


@dataclass
class MomentSystem:
    basis: SpectralBasis
    points: np.ndarray
    e: np.ndarray
    A: np.ndarray | None = None  # dense when small enough
    op: PointwiseHarmonics | None = None

    @property
    def shape(self):
        return (self.basis.size, self.points.shape[0])

    def apply(self, w) -> np.ndarray:
        """``A w``."""
        return self.A @ w if self.A is not None else self.op.project(w)

    def residual(self, w) -> float:
        return float(np.max(np.abs(self.apply(w) - self.e)))


def moment_system(degree: int, points, measure: str = "normalized", dense: bool | None = None) -> MomentSystem:
    """Rows ``u_i(x_k)`` for every harmonic of degree <= ``degree``; target is ``int u_i``."""
    basis = SpectralBasis(int(degree), measure)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    e = np.zeros(basis.size)
    # only the constant harmonic has a nonzero integral
    # u_0 = mass^{-1/2}, so its integral is mass^{1/2}
    e[0] = math.sqrt(basis.total_mass)
    if dense is None:
        dense = basis.size * pts.shape[0] <= DENSE_ENTRIES
    if dense:
        return MomentSystem(basis, pts, e, A=basis.evaluate(pts))
    return MomentSystem(basis, pts, e, op=PointwiseHarmonics(basis, pts))


def _min_norm_dense(sys: MomentSystem, w0, damping, rounds=2):
    A = sys.A
    S = (A * w0) @ A.T
    S[np.diag_indices_from(S)] += damping
    factor = sla.cho_factor(S, lower=True, check_finite=False)
    alpha = w0.copy()
    for _ in range(rounds):
        y = sla.cho_solve(factor, sys.e - A @ alpha, check_finite=False)
        alpha = alpha + w0 * (A.T @ y)
    return alpha


def _min_norm_free(sys: MomentSystem, w0, damping, rounds=2, cg_rtol=1e-13):
    op = sys.op
    n = sys.basis.size
    lin = LinearOperator((n, n), matvec=lambda y: op.gram_apply(w0, y) + damping * y, dtype=float)
    alpha = w0.copy()
    res = sys.e - op.project(alpha)
    for _ in range(rounds):
        y, info = cg(lin, res, rtol=cg_rtol, atol=0.0, maxiter=400)
        alpha = alpha + w0 * op.synthesize(y)
        res = sys.e - op.project(alpha)
        log.info("matrix-free correction: cg info %d, residual %.3e", info, np.max(np.abs(res)))
        if np.max(np.abs(res)) <= 1e-13:
            break
    return alpha


def _nnls_floor(sys: MomentSystem, w0, beta):
    A = sys.A
    z, _ = nnls(A, sys.e - beta * (A @ w0), maxiter=50 * A.shape[1])
    return beta * w0 + z


@dataclass
class Attempt:
    r: float
    residual: float
    min_weight: float
    method: str


def solve_once(sys: MomentSystem, w0, tol=CUBATURE_TOL, damping=TIKHONOV) -> tuple[np.ndarray, Attempt]:
    """Best weights for one point set; ``Attempt`` records how it went."""
    w0 = np.asarray(w0, dtype=float)
    res0 = sys.residual(w0)
    if res0 <= tol:
        return w0.copy(), Attempt(math.nan, res0, float(w0.min()), "cell-measures")
    if sys.A is not None:
        alpha = _min_norm_dense(sys, w0, damping)
    else:
        alpha = _min_norm_free(sys, w0, damping)
    res = sys.residual(alpha)
    best = (alpha, Attempt(math.nan, res, float(alpha.min()), "min-norm"))
    if alpha.min() > 0 and res <= tol:
        return best
    if sys.A is not None and sys.A.size <= NNLS_MAX_ENTRIES:
        for beta in NNLS_FLOORS:
            alpha = _nnls_floor(sys, w0, beta)
            res = sys.residual(alpha)
            if res <= tol:
                return alpha, Attempt(math.nan, res, float(alpha.min()), f"nnls-floor-{beta:g}")
    return best


@dataclass
class CubatureRule:
    lattice: Lattice = field(repr=False)
    partition: CoverPartition = field(repr=False)
    weights: np.ndarray
    degree: int
    residual: float
    method: str
    kind: str | None = None
    omega: float | None = None
    level: int | None = None
    history: list = field(default_factory=list)

    @property
    def points(self) -> np.ndarray:
        return self.lattice.points

    @property
    def ratios(self) -> np.ndarray:
        return self.weights / self.partition.measures

    @property
    def ratio_bounds(self) -> tuple[float, float]:
        q = self.ratios
        return float(q.min()), float(q.max())

    @property
    def ratio_spread(self) -> float:
        lo, hi = self.ratio_bounds
        return hi / lo

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def to_json(self) -> dict:
        lo, hi = self.ratio_bounds
        return {
            "level": self.level,
            "r": self.lattice.r,
            "kind": self.kind,
            "omega": self.omega,
            "degree": self.degree,
            "method": self.method,
            "points": self.lattice.indices.tolist(),
            "weights": self.weights.tolist(),
            "residual": self.residual,
            "ratio_bounds": [lo, hi],
            "history": [a.__dict__ for a in self.history],
        }


def solve_weights(
    lattice: Lattice,
    partition: CoverPartition | None = None,
    degree: int | None = None,
    *,
    kind: str | None = None,
    omega: float | None = None,
    level: int | None = None,
    tol: float = CUBATURE_TOL,
    max_refinements: int = 3,
    rebuild: Callable[[float], Lattice] | None = None,
) -> CubatureRule:
    """Strictly positive weights exact for all harmonics of degree <= ``degree``.

    Give either ``degree`` or a band ``(kind, omega)``; the latter uses
    :func:`exactness_degree`. On failure the lattice radius is halved (via
    ``rebuild``, default: same mesh and metric) up to ``max_refinements`` times.
    """
    if degree is None:
        if kind is None or omega is None:
            raise ValueError("give degree or (kind, omega)")
        degree = exactness_degree(kind, omega)
    if rebuild is None:

        def rebuild(r, _lat=lattice):
            return build_lattice(_lat.mesh, _lat.metric, r, seed=_lat.seed, eps=_lat.eps)

    history: list[Attempt] = []
    lat, part = lattice, partition
    for attempt in range(max_refinements + 1):
        if part is None:
            part = partition_cover(lat)
        sys = moment_system(degree, lat.points, lat.mesh.measure)
        alpha, info = solve_once(sys, part.measures, tol)
        info.r = lat.r
        history.append(info)
        log.info("cubature degree %d, r=%.4g, K=%d: %s residual %.3e min weight %.3e",
                 degree, lat.r, lat.size, info.method, info.residual, info.min_weight)
        if info.residual <= tol and info.min_weight > 0:
            return CubatureRule(lat, part, alpha, degree, info.residual, info.method, kind, omega, level, history)
        if attempt == max_refinements:
            break
        try:
            lat = rebuild(lat.r / 2)
        except ResolutionError as err:
            history.append(Attempt(lat.r / 2, math.nan, math.nan, f"refinement impossible: {err}"))
            break
        part = None
    raise InfeasibleError(
        f"no positive exact cubature of degree {degree} after {len(history)} attempts",
        history=[(a.r, a.residual, a.min_weight) for a in history],
    )


@dataclass
class PlancherelPolya:
    ratios: np.ndarray

    @property
    def min(self) -> float:
        return float(self.ratios.min())

    @property
    def max(self) -> float:
        return float(self.ratios.max())

    @property
    def spread(self) -> float:
        return self.max / self.min

    def to_json(self) -> dict:
        return {"min": self.min, "max": self.max, "spread": self.spread, "n_samples": int(self.ratios.size)}


def plancherel_polya_ratio(
    kind: str, omega: float, lattice: Lattice, partition: CoverPartition, n_samples: int = 200, rng=None
) -> PlancherelPolya:
    """``sum_k |U_k| f(x_k)^2 / ||f||^2`` over random band functions ``f``."""
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    rng = np.random.default_rng(rng)
    basis = SpectralBasis(l_max_needed(kind, omega), lattice.mesh.measure)
    band = basis.band_indices(kind, omega)
    U = basis.evaluate(lattice.points)[band]
    c = rng.standard_normal((n_samples, band.size))
    vals = c @ U
    # ||f||^2 = sum c^2 since the basis is orthonormal for the chosen measure
    ratios = (vals * vals) @ partition.measures / np.sum(c * c, axis=1)
    return PlancherelPolya(ratios)
