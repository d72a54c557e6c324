"""Real spherical harmonics on S^2 with the elliptic and sub-elliptic eigenvalue laws.

Conventions
-----------
Points are unit 3-vectors ``x = (x1, x2, x3)``; colatitude is measured from
the x3 axis and longitude ``phi`` is ``atan2(x2, x1)``. Basis functions are
indexed by ``(l, m)`` with flat index ``l*l + l + m``; ``m > 0`` is the cosine
branch, ``m < 0`` the sine branch. They are orthonormal for either the
probability measure (``"normalized"``, the default) or the surface measure
(``"surface"``, total mass 4*pi).

``L`` (Laplace-Beltrami) has eigenvalue ``l(l+1)`` on ``u_{l,m}``; the
sub-Laplacian ``-(Y1^2 + Y2^2)`` with ``Y1 = X_{2,3}``, ``Y2 = X_{1,3}`` has
eigenvalue ``l(l+1) - m^2`` because ``Y3 = X_{1,2}`` is the longitude
derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Literal

import numpy as np

from .errors import BandTruncationError, CapacityError

Kind = Literal["elliptic", "sub"]
Measure = Literal["normalized", "surface"]

L_MAX_CAP = 512
TOTAL_MASS = {"normalized": 1.0, "surface": 4.0 * math.pi}

# S^2 = SO(3)/SO(2): group dimension d and bracket step Q of {Y1, Y2}.
GROUP_DIM = 3
STEP = 2
MANIFOLD_DIM = 2

_CHUNK_ENTRIES = 4_000_000


def flat_index(l, m):
    return np.asarray(l) * np.asarray(l) + np.asarray(l) + np.asarray(m)


def index_lm(i):
    """Inverse of :func:`flat_index`."""
    i = np.asarray(i)
    l = np.floor(np.sqrt(i)).astype(np.int64)
    # guard against sqrt rounding for large i
    l = np.where((l + 1) ** 2 <= i, l + 1, l)
    l = np.where(l * l > i, l - 1, l)
    return l, i - l * l - l


def eigenvalue(kind: Kind, l, m):
    l = np.asarray(l, dtype=float)
    m = np.asarray(m, dtype=float)
    if kind == "elliptic":
        return l * (l + 1.0)
    if kind == "sub":
        return l * (l + 1.0) - m * m
    raise ValueError(f"unknown operator kind {kind!r}")


def l_max_needed(kind: Kind, omega: float) -> int:
    """Largest degree that carries an eigenvalue <= omega.

    For the sub-Laplacian the sectoral harmonic ``(l, l)`` has eigenvalue ``l``,
    so every degree up to ``floor(omega)`` is present.
    """
    if omega < 0:
        return -1
    if kind == "sub":
        return int(math.floor(omega + 1e-12))
    l = int(math.floor((math.sqrt(4.0 * omega + 1.0) - 1.0) / 2.0))
    while (l + 1) * (l + 2) <= omega:
        l += 1
    while l > 0 and l * (l + 1) > omega:
        l -= 1
    return l


def to_spherical(points):
    """Return ``(z, s, phi)``: cos and sin of colatitude, and longitude."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    z = p[:, 2]
    s = np.hypot(p[:, 0], p[:, 1])
    phi = np.arctan2(p[:, 1], p[:, 0])
    return z, s, phi


def from_spherical(theta, phi):
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


@dataclass(frozen=True)
class SpectralBasis:
    """Real orthonormal spherical harmonics up to degree ``l_max``."""

    l_max: int
    measure: Measure = "normalized"

    def __post_init__(self):
        if self.l_max < 0:
            raise ValueError("l_max must be >= 0")
        if self.l_max > L_MAX_CAP:
            raise CapacityError(f"l_max={self.l_max} exceeds the recurrence cap {L_MAX_CAP}")
        if self.measure not in TOTAL_MASS:
            raise ValueError(f"unknown measure {self.measure!r}")

    @property
    def size(self) -> int:
        return (self.l_max + 1) ** 2

    @property
    def total_mass(self) -> float:
        return TOTAL_MASS[self.measure]

    @cached_property
    def degrees(self) -> np.ndarray:
        return index_lm(np.arange(self.size))[0]

    @cached_property
    def orders(self) -> np.ndarray:
        return index_lm(np.arange(self.size))[1]

    def eigenvalues(self, kind: Kind) -> np.ndarray:
        return eigenvalue(kind, self.degrees, self.orders)

    @cached_property
    def _scale(self) -> float:
        # Y_{lm} is orthonormal on the surface measure; rescale for mass 1.
        return math.sqrt(4.0 * math.pi) if self.measure == "normalized" else 1.0

    @cached_property
    def _recurrence(self):
        L = self.l_max
        l = np.arange(L + 1, dtype=float)[:, None]
        m = np.arange(L + 1, dtype=float)[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.sqrt((4 * l * l - 1) / (l * l - m * m))
            b = np.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
        return np.nan_to_num(a), np.nan_to_num(b)

    def band_indices(self, kind: Kind, omega: float) -> np.ndarray:
        """Flat indices of ``{(l, m): eigen(l, m) <= omega}``.

        Raises :class:`BandTruncationError` when the band reaches beyond ``l_max``.
        """
        need = l_max_needed(kind, omega)
        if need > self.l_max:
            raise BandTruncationError(
                f"band ({kind}, omega={omega}) needs degree {need} > l_max={self.l_max}"
            )
        lam = self.eigenvalues(kind)
        return np.flatnonzero(lam <= omega + 1e-9 * max(1.0, omega))

    def evaluate(self, points) -> np.ndarray:
        """Matrix ``U[i, k] = u_i(x_k)`` of shape ``(size, n_points)``."""
        z, s, phi = to_spherical(points)
        return self._evaluate_zsp(z, s, phi)

    def _evaluate_zsp(self, z, s, phi) -> np.ndarray:
        L = self.l_max
        n = z.shape[0]
        out = np.empty((self.size, n))
        a, b = self._recurrence
        mm = np.arange(1, L + 1)[:, None]
        cos_m = np.cos(mm * phi[None, :]) * math.sqrt(2.0)
        sin_m = np.sin(mm * phi[None, :]) * math.sqrt(2.0)
        p_prev2 = None
        p_prev = np.full((1, n), 1.0 / math.sqrt(4.0 * math.pi))
        out[0] = p_prev[0]
        for l in range(1, L + 1):
            p = np.empty((l + 1, n))
            if l >= 2:
                p[: l - 1] = a[l, : l - 1, None] * (z * p_prev[: l - 1] - b[l, : l - 1, None] * p_prev2)
            p[l - 1] = math.sqrt(2 * l + 1) * z * p_prev[l - 1]
            p[l] = math.sqrt((2 * l + 1) / (2 * l)) * s * p_prev[l - 1]
            c = l * l + l
            out[c] = p[0]
            out[c + 1 : c + l + 1] = p[1:] * cos_m[:l]
            out[c - l : c] = (p[1:] * sin_m[:l])[::-1]
            p_prev2, p_prev = p_prev, p
        if self._scale != 1.0:
            out *= self._scale
        return out

    def _chunks(self, n_points: int):
        step = max(1, _CHUNK_ENTRIES // self.size)
        for start in range(0, n_points, step):
            yield slice(start, min(n_points, start + step))

    def synthesize(self, coeffs, points) -> np.ndarray:
        """Values of ``sum_i c_i u_i`` at points; ``coeffs`` may be 1-D or (n_funcs, size)."""
        c = np.asarray(coeffs, dtype=float)
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        squeeze = c.ndim == 1
        c2 = c[None, :] if squeeze else c
        if c2.shape[1] != self.size:
            raise ValueError(f"expected {self.size} coefficients, got {c2.shape[1]}")
        out = np.empty((c2.shape[0], pts.shape[0]))
        for sl in self._chunks(pts.shape[0]):
            out[:, sl] = c2 @ self.evaluate(pts[sl])
        return out[0] if squeeze else out

    def project(self, points, weights) -> np.ndarray:
        """``sum_k w_k u(x_k)``; with cubature weights this integrates every basis function."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        w = np.asarray(weights, dtype=float)
        acc = np.zeros(self.size)
        for sl in self._chunks(pts.shape[0]):
            acc += self.evaluate(pts[sl]) @ w[sl]
        return acc


@dataclass(frozen=True)
class QuadratureGrid:
    """Gauss-Legendre in cos(colatitude) times a uniform longitude grid.

    Exact for products of harmonics of total degree <= ``2*n_theta - 1`` whose
    longitude frequency is <= ``n_phi - 1``.
    """

    n_theta: int
    n_phi: int
    measure: Measure = "normalized"

    @classmethod
    def for_degree(cls, l_max: int, products: bool = False, measure: Measure = "normalized"):
        """Smallest grid that analyzes degree-``l_max`` functions exactly; doubled for products."""
        L = 2 * l_max if products else l_max
        return cls(n_theta=L + 1, n_phi=2 * L + 2, measure=measure)

    @cached_property
    def z(self) -> np.ndarray:
        return np.polynomial.legendre.leggauss(self.n_theta)[0][::-1].copy()

    @cached_property
    def z_weights(self) -> np.ndarray:
        return np.polynomial.legendre.leggauss(self.n_theta)[1][::-1].copy()

    @cached_property
    def phi(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(self.n_phi) / self.n_phi

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.outer(self.z_weights, np.full(self.n_phi, 2.0 * math.pi / self.n_phi))
        return w * (TOTAL_MASS[self.measure] / (4.0 * math.pi))

    @cached_property
    def points(self) -> np.ndarray:
        theta = np.arccos(self.z)
        T, P = np.meshgrid(theta, self.phi, indexing="ij")
        return from_spherical(T, P).reshape(-1, 3)

    def max_degree(self) -> int:
        """Largest band degree whose Gram matrix this grid integrates exactly."""
        return min(self.n_theta - 1, (self.n_phi - 1) // 2)

    def integrate(self, values) -> float:
        v = np.asarray(values, dtype=float).reshape(self.n_theta, self.n_phi)
        return float(np.sum(self.weights * v))


def _check_grid(basis: SpectralBasis, grid: QuadratureGrid):
    if grid.measure != basis.measure:
        raise ValueError("grid and basis use different measures")
    if grid.max_degree() < basis.l_max:
        raise CapacityError(
            f"grid ({grid.n_theta}x{grid.n_phi}) is exact only to degree {grid.max_degree()}, "
            f"basis needs {basis.l_max}"
        )


def _legendre_on_grid(basis: SpectralBasis, grid: QuadratureGrid) -> np.ndarray:
    # columns at phi = 0 give P_lm itself (times sqrt2 for m > 0)
    z = grid.z
    pts = np.stack([np.sqrt(1 - z * z), np.zeros_like(z), z], axis=1)
    return basis.evaluate(pts)


def analyze_grid(basis: SpectralBasis, grid: QuadratureGrid, values) -> np.ndarray:
    """Coefficients ``<v, u_i>`` of grid samples, exact for band-limited ``v``."""
    _check_grid(basis, grid)
    v = np.asarray(values, dtype=float).reshape(grid.n_theta, grid.n_phi)
    L = basis.l_max
    four = np.fft.rfft(v, axis=1)[:, : L + 1] * (2.0 * math.pi / grid.n_phi)
    cos_part = four.real  # sum_j v cos(m phi_j) dphi
    sin_part = -four.imag  # sum_j v sin(m phi_j) dphi
    leg = _legendre_on_grid(basis, grid)  # P_lm(z_i) for m>=0 (sqrt2 included), zero for m<0
    wz = grid.z_weights * (TOTAL_MASS[grid.measure] / (4.0 * math.pi))
    m = basis.orders
    am = np.abs(m)
    # sine rows: leg is zero there since sin(0) = 0, use the matching cosine row
    sine_rows = m < 0
    leg = leg.copy()
    leg[sine_rows] = leg[flat_index(basis.degrees[sine_rows], -m[sine_rows])]
    proj = np.where(sine_rows[:, None], sin_part.T[am], cos_part.T[am])  # (size, n_theta)
    return np.sum(leg * proj * wz[None, :], axis=1)


def synthesize_grid(basis: SpectralBasis, grid: QuadratureGrid, coeffs) -> np.ndarray:
    """Values on the grid, shape ``(n_theta, n_phi)``."""
    c = np.asarray(coeffs, dtype=float)
    return basis.synthesize(c, grid.points).reshape(grid.n_theta, grid.n_phi)


@dataclass
class BandFunction:
    """A function in ``E_omega`` of one operator, stored by its coefficients."""

    basis: SpectralBasis
    coeffs: np.ndarray
    kind: Kind = "sub"
    omega: float = math.inf

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.basis.size,):
            raise ValueError(f"expected {self.basis.size} coefficients, got {self.coeffs.shape}")
        if math.isfinite(self.omega):
            outside = self.basis.eigenvalues(self.kind) > self.omega + 1e-9 * max(1.0, self.omega)
            if np.any(self.coeffs[outside] != 0.0):
                raise ValueError("coefficients outside the declared band must be zero")

    @classmethod
    def random(cls, basis: SpectralBasis, kind: Kind, omega: float, rng, normalize=True):
        idx = basis.band_indices(kind, omega)
        c = np.zeros(basis.size)
        c[idx] = rng.standard_normal(idx.size)
        if normalize:
            c /= np.linalg.norm(c)
        return cls(basis, c, kind, omega)

    @classmethod
    def unit(cls, basis: SpectralBasis, l: int, m: int, kind: Kind = "sub"):
        c = np.zeros(basis.size)
        c[flat_index(l, m)] = 1.0
        return cls(basis, c, kind, float(eigenvalue(kind, l, m)))

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __call__(self, points) -> np.ndarray:
        return self.basis.synthesize(self.coeffs, points)

    def _like(self, coeffs, omega=None):
        return BandFunction(self.basis, coeffs, self.kind, self.omega if omega is None else omega)

    def __add__(self, other: "BandFunction"):
        return self._like(self.coeffs + other.coeffs, max(self.omega, other.omega))

    def __sub__(self, other: "BandFunction"):
        return self._like(self.coeffs - other.coeffs, max(self.omega, other.omega))

    def __mul__(self, a: float):
        return self._like(self.coeffs * a)

    __rmul__ = __mul__

    def to_json(self) -> dict:
        nz = np.flatnonzero(self.coeffs)
        l, m = index_lm(nz)
        return {
            "l_max": self.basis.l_max,
            "kind": self.kind,
            "omega": None if not math.isfinite(self.omega) else self.omega,
            "measure": self.basis.measure,
            "coeffs": [{"l": int(a), "m": int(b), "c": float(c)} for a, b, c in zip(l, m, self.coeffs[nz])],
        }

    @classmethod
    def from_json(cls, data: dict) -> "BandFunction":
        basis = SpectralBasis(int(data["l_max"]), data.get("measure", "normalized"))
        c = np.zeros(basis.size)
        for entry in data["coeffs"]:
            if abs(entry["m"]) > entry["l"] or entry["l"] > basis.l_max:
                raise ValueError(f"invalid index ({entry['l']}, {entry['m']})")
            c[flat_index(entry["l"], entry["m"])] = entry["c"]
        omega = data.get("omega")
        return cls(basis, c, data.get("kind", "sub"), math.inf if omega is None else float(omega))


def _support_max(F) -> float | None:
    return getattr(F, "support_max", None)


def filter_multipliers(F: Callable, t: float, kind: Kind, basis: SpectralBasis) -> np.ndarray:
    if t <= 0:
        raise ValueError("t must be > 0")
    smax = _support_max(F)
    if smax is not None and math.isfinite(smax):
        need = l_max_needed(kind, smax / (t * t))
        if need > basis.l_max:
            raise BandTruncationError(
                f"filter support reaches degree {need} > l_max={basis.l_max}"
            )
    return np.asarray(F(t * t * basis.eigenvalues(kind)), dtype=float)


def apply_filter(F: Callable, t: float, kind: Kind, f: BandFunction) -> BandFunction:
    """Spectral multiplier ``F(t^2 * Op)`` applied to ``f``."""
    if t <= 0:
        raise ValueError("t must be > 0")
    mult = np.asarray(F(t * t * f.basis.eigenvalues(kind)), dtype=float)
    out = f.coeffs * mult
    return BandFunction(f.basis, out, f.kind, f.omega)


def kernel_eval(F: Callable, t: float, kind: Kind, x, y, basis: SpectralBasis) -> np.ndarray:
    """``K_t^F(x_i, y_i)`` for paired rows of ``x`` and ``y``."""
    mult = filter_multipliers(F, t, kind, basis)
    ux = basis.evaluate(x)
    uy = basis.evaluate(y)
    return np.einsum("i,ik,ik->k", mult, ux, uy)


def kernel_matrix(F: Callable, t: float, kind: Kind, x, y, basis: SpectralBasis) -> np.ndarray:
    mult = filter_multipliers(F, t, kind, basis)
    return (basis.evaluate(x) * mult[:, None]).T @ basis.evaluate(y)


@dataclass
class ProductCheck:
    product: BandFunction
    elliptic_bound: float
    residual: float
    max_elliptic: float
    max_sub: float

    def c0(self, omega: float, step: int = STEP) -> float:
        """Empirical constant in ``fg in E_{C0 omega^Q}(sub)``."""
        return self.max_sub / omega**step


def product_band_check(f: BandFunction, g: BandFunction, rel_tol=1e-12) -> ProductCheck:
    """Exact expansion of ``f*g`` and the norm of its part outside ``E_{4 d omega}(L)``.

    ``omega`` is the largest elliptic eigenvalue present in ``f`` or ``g``; for
    sub-elliptic inputs this is the elliptic band they embed into.
    """
    L = max(_max_degree(f), _max_degree(g))
    small = SpectralBasis(L, f.basis.measure)
    big = SpectralBasis(2 * L, f.basis.measure)
    grid = QuadratureGrid.for_degree(2 * L, measure=f.basis.measure)
    fv = small.synthesize(f.coeffs[: small.size], grid.points)
    gv = small.synthesize(g.coeffs[: small.size], grid.points)
    c = analyze_grid(big, grid, fv * gv)
    lam_f = _max_eigen(f, "elliptic")
    lam_g = _max_eigen(g, "elliptic")
    bound = 4 * GROUP_DIM * max(lam_f, lam_g)
    ell = big.eigenvalues("elliptic")
    sub = big.eigenvalues("sub")
    residual = float(np.linalg.norm(c[ell > bound]))
    present = np.abs(c) > rel_tol * max(np.linalg.norm(c), 1e-300)
    return ProductCheck(
        product=BandFunction(big, c, "elliptic"),
        elliptic_bound=bound,
        residual=residual,
        max_elliptic=float(ell[present].max(initial=0.0)),
        max_sub=float(sub[present].max(initial=0.0)),
    )


def _max_degree(f: BandFunction) -> int:
    nz = np.flatnonzero(f.coeffs)
    return int(f.basis.degrees[nz].max(initial=0))


def _max_eigen(f: BandFunction, kind: Kind) -> float:
    nz = np.flatnonzero(f.coeffs)
    return float(f.basis.eigenvalues(kind)[nz].max(initial=0.0))


def band_lm(kind: Kind, omega: float) -> list[tuple[int, int]]:
    """All ``(l, m)`` with eigenvalue <= omega, by enumeration."""
    out = []
    for l in range(l_max_needed(kind, omega) + 1):
        for m in range(-l, l + 1):
            if eigenvalue(kind, l, m) <= omega:
                out.append((l, m))
    return out


@dataclass
class EmbeddingReport:
    omega: float
    sub_to_elliptic_c: float  # smallest c: E_omega(sub) in E_{c omega^Q}(L)
    elliptic_to_sub_C: float  # smallest C: E_omega(L) in E_{C omega}(sub)
    step: int = STEP


def embedding_check(omega: float, step: int = STEP) -> EmbeddingReport:
    if omega < 1:
        raise ValueError("omega must be >= 1")
    sub_band = band_lm("sub", omega)
    c = max(eigenvalue("elliptic", l, m) for l, m in sub_band) / omega**step
    ell_band = band_lm("elliptic", omega)
    C = max(eigenvalue("sub", l, m) for l, m in ell_band) / omega
    return EmbeddingReport(omega, float(c), float(C), step)


def weyl_count(kind: Kind, omega: float) -> int:
    """``#{(l, m): eigen(l, m) <= omega}``, counted order by order."""
    if omega < 0:
        return 0
    if kind == "elliptic":
        return (l_max_needed("elliptic", omega) + 1) ** 2
    mmax = l_max_needed("sub", omega)
    m = np.arange(0, mmax + 1, dtype=np.int64)
    # for fixed m: l ranges over |m| <= l with l(l+1) <= omega + m^2
    x = omega + m.astype(float) ** 2
    top = np.floor((np.sqrt(4.0 * x + 1.0) - 1.0) / 2.0).astype(np.int64)
    top = np.where((top + 1) * (top + 2) <= x, top + 1, top)
    top = np.where(top * (top + 1) > x, top - 1, top)
    per_m = np.maximum(top - m + 1, 0)
    return int(per_m[0] + 2 * per_m[1:].sum())


def weyl_slope(kind: Kind, omegas) -> float:
    """Least-squares slope of log count versus log omega."""
    w = np.asarray(omegas, dtype=float)
    counts = np.array([weyl_count(kind, x) for x in w], dtype=float)
    return float(np.polyfit(np.log(w), np.log(counts), 1)[0])


def rotation(axis: int, t: float) -> np.ndarray:
    """Flow of the rotation field ``X_{j,k}`` about coordinate axis ``axis`` for time t."""
    c, s = math.cos(t), math.sin(t)
    R = np.eye(3)
    j, k = [(1, 2), (0, 2), (0, 1)][axis]
    # X_{j,k} = x_j d_k - x_k d_j: dx_k/dt = x_j, dx_j/dt = -x_k
    R[j, j], R[j, k] = c, -s
    R[k, j], R[k, k] = s, c
    return R


_FD4 = ((-2, -1.0 / 12), (-1, 16.0 / 12), (0, -30.0 / 12), (1, 16.0 / 12), (2, -1.0 / 12))


def fd_second_derivative(basis: SpectralBasis, points, axis: int, h: float = 2e-3) -> np.ndarray:
    """Fourth-order finite difference of ``X^2 u_i`` along the rotation flow about ``axis``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    acc = np.zeros((basis.size, pts.shape[0]))
    for step, w in _FD4:
        moved = pts @ rotation(axis, step * h).T
        acc += w * basis.evaluate(moved)
    return acc / (h * h)


def fd_sub_laplacian(basis: SpectralBasis, points, h: float = 2e-3) -> np.ndarray:
    """``(Y1^2 + Y2^2) u_i`` at points; Y1 rotates about e1, Y2 about e2."""
    return fd_second_derivative(basis, points, 0, h) + fd_second_derivative(basis, points, 1, h)


def eigen_fd_errors(basis: SpectralBasis, points, kind: Kind = "sub", h: float = 2e-3) -> np.ndarray:
    """Relative error of the finite-difference operator against ``-eigen * u`` per basis function.

    For the zero eigenvalue the error is relative to ``||u||``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    errs = np.zeros(basis.size)
    norms = np.zeros(basis.size)
    lam = basis.eigenvalues(kind)
    step = max(1, _CHUNK_ENTRIES // (4 * basis.size))
    axes = (0, 1) if kind == "sub" else (0, 1, 2)
    for start in range(0, pts.shape[0], step):
        chunk = pts[start : start + step]
        op = sum(fd_second_derivative(basis, chunk, a, h) for a in axes)
        u = basis.evaluate(chunk)
        errs += np.sum((op + lam[:, None] * u) ** 2, axis=1)
        norms += np.sum((np.where(lam > 0, lam, 1.0)[:, None] * u) ** 2, axis=1)
    return np.sqrt(errs / norms)
