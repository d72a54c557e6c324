"""Littlewood-Paley windows and the bandlimited, localized Parseval frame.

Level ``j`` atoms are ``Theta_{j,k} = sqrt(alpha_{j,k}) K_j(x_{j,k}, .)`` where
``K_j`` has spectral multiplier ``F_j`` of the sub-Laplacian. Everything is
stored and combined in coefficient space: an atom is the vector
``sqrt(alpha_k) F_j(lambda_i) u_i(x_k)`` over the level band.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .cubature import CubatureRule, exactness_degree, solve_weights
from .errors import BandTruncationError, ConfigError
from .geometry import (
    EPS_SCHEDULE,
    BallVolumeProfile,
    MetricMesh,
    ball_volume_profile,
    build_mesh,
    cc_distance_field,
    mesh_level_for_radius,
    riemann_distance,
)
from .lattice import Lattice, build_lattice, partition_cover
from .spectral import BandFunction, SpectralBasis, flat_index, l_max_needed

J_CAP = 2
J_HARD_CAP = 3


def _h(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def g_profile(s):
    """Smooth monotone cutoff: 1 on [0, 1], 0 on [4, inf)."""
    s = np.asarray(s, dtype=float)
    a = _h((4.0 - s) / 3.0)
    b = _h((s - 1.0) / 3.0)
    with np.errstate(invalid="ignore"):
        mid = a / (a + b)
    return np.where(s <= 1.0, 1.0, np.where(s >= 4.0, 0.0, mid))


def G_profile(s):
    s = np.asarray(s, dtype=float)
    return g_profile(s) - g_profile(4.0 * s)


@dataclass(frozen=True)
class Window:
    """``g``, ``G`` or the level window ``F_j`` (``F_0 = sqrt g``, ``F_j(s) = sqrt G(4^-j s)``)."""

    kind: str = "F"
    level: int = 0

    def __post_init__(self):
        if self.kind not in ("g", "G", "F"):
            raise ValueError(f"unknown window kind {self.kind!r}")
        if self.level < 0:
            raise ValueError("level must be >= 0")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise ValueError("windows are defined for s >= 0")
        if self.kind == "g":
            return g_profile(s)
        if self.kind == "G":
            return G_profile(s)
        if self.level == 0:
            return np.sqrt(g_profile(s))
        return np.sqrt(np.maximum(G_profile(s / 4.0**self.level), 0.0))

    @property
    def support_min(self) -> float:
        if self.kind == "G":
            return 0.25
        if self.kind == "F" and self.level > 0:
            return 4.0 ** (self.level - 1)
        return 0.0

    @property
    def support_max(self) -> float:
        return 4.0 ** (self.level + 1) if self.kind == "F" else 4.0


def partition_of_unity(J: int, s) -> np.ndarray:
    """``sum_{j<=J} F_j(s)^2``; equals 1 for ``s <= 4^J``."""
    return sum(Window("F", j)(s) ** 2 for j in range(J + 1))


def eigen_kind(metric: str) -> str:
    return "sub" if metric == "cc" else "elliptic"


def level_radius(j: int, metric: str = "cc") -> float:
    """Lattice radius for level j: ``2^{-2j-1}`` (CC) or ``2^{-j-1}`` (round metric)."""
    return 2.0 ** (-2 * j - 1) if metric == "cc" else 2.0 ** (-j - 1)


def max_basis_degree(J: int, metric: str = "cc") -> int:
    return l_max_needed(eigen_kind(metric), 4.0 ** (J + 1))


@dataclass
class FrameLevel:
    j: int
    metric: str
    basis: SpectralBasis = field(repr=False)
    band: np.ndarray = field(repr=False)  # flat basis indices where F_j > 0
    multipliers: np.ndarray = field(repr=False)  # F_j on the band
    points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)  # cubature weights alpha_k
    atoms: np.ndarray = field(repr=False)  # (K, band size)
    ball_volumes: np.ndarray = field(repr=False)  # |B(x_k, 2^-j)|
    lattice_ref: dict = field(default_factory=dict, repr=False)
    rule: CubatureRule | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.atoms.shape[0]

    def atom(self, k: int) -> BandFunction:
        c = np.zeros(self.basis.size)
        c[self.band] = self.atoms[k]
        return BandFunction(self.basis, c, eigen_kind(self.metric))

    def atom_norms_kernel(self) -> np.ndarray:
        """``alpha_k K^{F_j^2}(x_k, x_k)``, the squared atom norms computed on the diagonal."""
        U = _band_values(self.basis, self.band, self.points)
        return self.weights * ((self.multipliers**2) @ (U * U))

    def to_json(self) -> dict:
        l = self.basis.degrees[self.band]
        m = self.basis.orders[self.band]
        return {
            "j": self.j,
            "metric": self.metric,
            "l_max": self.basis.l_max,
            "lattice_ref": self.lattice_ref,
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
            "band": [[int(a), int(b)] for a, b in zip(l, m)],
            "atoms": self.atoms.tolist(),
            "ball_volumes": self.ball_volumes.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "FrameLevel":
        basis = SpectralBasis(int(data["l_max"]))
        band = np.array([flat_index(l, m) for l, m in data["band"]], dtype=np.int64)
        mult = Window("F", int(data["j"]))(basis.eigenvalues(eigen_kind(data["metric"]))[band])
        return cls(
            j=int(data["j"]),
            metric=data["metric"],
            basis=basis,
            band=band,
            multipliers=mult,
            points=np.asarray(data["points"], dtype=float),
            weights=np.asarray(data["weights"], dtype=float),
            atoms=np.asarray(data["atoms"], dtype=float).reshape(len(data["weights"]), band.size),
            ball_volumes=np.asarray(data["ball_volumes"], dtype=float),
            lattice_ref=data.get("lattice_ref", {}),
        )


def _band_values(basis: SpectralBasis, band: np.ndarray, points, chunk: int = 4000) -> np.ndarray:
    pts = np.atleast_2d(points)
    out = np.empty((band.size, pts.shape[0]))
    step = max(1, min(chunk, 30_000_000 // basis.size))
    for s in range(0, pts.shape[0], step):
        out[:, s : s + step] = basis.evaluate(pts[s : s + step])[band]
    return out


def level_band(basis: SpectralBasis, j: int, metric: str = "cc"):
    F = Window("F", j)
    lam = basis.eigenvalues(eigen_kind(metric))
    need = l_max_needed(eigen_kind(metric), F.support_max)
    if need > basis.l_max:
        raise BandTruncationError(f"level {j} needs degree {need} > l_max={basis.l_max}")
    mult = F(lam)
    band = np.flatnonzero(mult > 0)
    return band, mult[band]


def build_frame_level(
    j: int,
    J: int | None = None,
    metric: str = "cc",
    mesh: MetricMesh | None = None,
    mesh_level: int = 6,
    tol: float = 1e-9,
    eps: float = EPS_SCHEDULE[-1],
    seed: int = 0,
    volume_radius: float | None = None,
    lattice: Lattice | None = None,
) -> FrameLevel:
    """Lattice, positive cubature exact for level-j products, and the level-j atoms."""
    J = j if J is None else J
    basis = SpectralBasis(max_basis_degree(J, metric))
    band, mult = level_band(basis, j, metric)
    if lattice is None:
        r = level_radius(j, metric)
        if mesh is None or mesh.level < mesh_level_for_radius(r):
            mesh = build_mesh(max(mesh_level, mesh_level_for_radius(r)))
        lattice = build_lattice(mesh, metric, r, seed=seed, eps=eps)
    part = partition_cover(lattice)
    kind = eigen_kind(metric)
    rule = solve_weights(lattice, part, degree=exactness_degree(kind, Window("F", j).support_max), kind=kind,
                         omega=Window("F", j).support_max, level=j, tol=tol)
    U = _band_values(basis, band, rule.points)
    atoms = (np.sqrt(rule.weights)[:, None] * (mult[:, None] * U).T)
    vr = 2.0**-j if volume_radius is None else volume_radius
    vols = ball_volumes(rule.points, vr, metric, eps)
    ref = {"r": lattice.r, "mesh_level": lattice.mesh.level, "vertices": lattice.indices.tolist(),
           "residual": rule.residual, "method": rule.method}
    return FrameLevel(j, metric, basis, band, mult, rule.points, rule.weights, atoms, vols, ref, rule)


def ball_volumes(points, r: float, metric: str = "cc", eps: float = EPS_SCHEDULE[-1]) -> np.ndarray:
    """``|B(x, r)|`` at each point: closed-form caps for the round metric, latitude profile for CC."""
    pts = np.atleast_2d(points)
    if metric == "riemann":
        return np.full(pts.shape[0], (1.0 - math.cos(min(r, math.pi))) / 2.0)
    prof: BallVolumeProfile = ball_volume_profile(r, eps)
    return prof(pts)


@dataclass
class Frame:
    J: int
    metric: str
    levels: list

    @property
    def basis(self) -> SpectralBasis:
        return self.levels[0].basis

    @property
    def omega(self) -> float:
        """Largest eigenvalue on which the frame is Parseval."""
        return 4.0**self.J

    def check_band(self, f: BandFunction):
        lam = self.basis.eigenvalues(eigen_kind(self.metric))
        c = _coeffs_in(self.basis, f)
        if np.any(c[lam > self.omega * (1 + 1e-12)] != 0):
            raise BandTruncationError(f"function reaches beyond the built band omega = {self.omega:g}")
        return c

    def analyze(self, f: BandFunction) -> "FrameCoefficients":
        c = self.check_band(f)
        return FrameCoefficients([lev.atoms @ c[lev.band] for lev in self.levels])

    def synthesize(self, coeffs: "FrameCoefficients") -> BandFunction:
        out = np.zeros(self.basis.size)
        for lev, s in zip(self.levels, coeffs.levels):
            out[lev.band] += lev.atoms.T @ s
        return BandFunction(self.basis, out, eigen_kind(self.metric))

    def to_json(self) -> dict:
        return {"J": self.J, "metric": self.metric, "levels": [lev.to_json() for lev in self.levels]}

    @classmethod
    def from_json(cls, data: dict) -> "Frame":
        return cls(int(data["J"]), data["metric"], [FrameLevel.from_json(d) for d in data["levels"]])


def _coeffs_in(basis: SpectralBasis, f: BandFunction) -> np.ndarray:
    c = np.zeros(basis.size)
    n = min(basis.size, f.basis.size)
    c[:n] = f.coeffs[:n]
    if np.any(f.coeffs[n:] != 0):
        raise BandTruncationError("function exceeds the frame basis degree")
    return c


def validate_J(J: int, allow_extended: bool = False) -> int:
    if not isinstance(J, (int, np.integer)) or J < 0:
        raise ConfigError(f"J must be a nonnegative integer, got {J!r}")
    cap = J_HARD_CAP if allow_extended else J_CAP
    if J > cap:
        raise ConfigError(f"J = {J} exceeds the cap {cap}")
    if J == J_HARD_CAP:
        warnings.warn("J = 3 needs degree-512 cubature on very large lattices; expect long runtimes", RuntimeWarning)
    return int(J)


def build_frame(J: int = 1, metric: str = "cc", mesh_level: int = 6, tol: float = 1e-9, seed: int = 0,
                allow_extended: bool = False, meshes: dict | None = None) -> Frame:
    validate_J(J, allow_extended)
    meshes = {} if meshes is None else meshes
    levels = []
    for j in range(J + 1):
        lvl = max(mesh_level, mesh_level_for_radius(level_radius(j, metric)))
        if lvl not in meshes:
            meshes[lvl] = build_mesh(lvl)
        levels.append(build_frame_level(j, J, metric, mesh=meshes[lvl], tol=tol, seed=seed))
    return Frame(J, metric, levels)


@dataclass
class FrameCoefficients:
    levels: list  # one array of s_k^j per level

    def energy(self) -> float:
        return float(sum(np.dot(s, s) for s in self.levels))

    def to_rows(self):
        for j, s in enumerate(self.levels):
            for k, v in enumerate(s):
                yield j, k, float(v)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["j", "k", "s"])
            for row in self.to_rows():
                w.writerow([row[0], row[1], repr(row[2])])

    @classmethod
    def read_csv(cls, path, sizes=None) -> "FrameCoefficients":
        rows = {}
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                rows.setdefault(int(rec["j"]), {})[int(rec["k"])] = float(rec["s"])
        n_levels = max(rows) + 1 if rows else 0
        levels = []
        for j in range(n_levels):
            d = rows.get(j, {})
            n = sizes[j] if sizes is not None else (max(d) + 1 if d else 0)
            s = np.zeros(n)
            for k, v in d.items():
                s[k] = v
            levels.append(s)
        return cls(levels)


@dataclass
class ParsevalReport:
    filter_deviation: np.ndarray
    frame_deviation: np.ndarray
    reconstruction_error: np.ndarray
    out_of_band: int = 0

    @property
    def max_filter(self) -> float:
        return float(self.filter_deviation.max(initial=0.0))

    @property
    def max_frame(self) -> float:
        return float(self.frame_deviation.max(initial=0.0))

    @property
    def max_reconstruction(self) -> float:
        return float(self.reconstruction_error.max(initial=0.0))

    def to_json(self) -> dict:
        return {
            "max_filter_deviation": self.max_filter,
            "max_frame_deviation": self.max_frame,
            "max_reconstruction_error": self.max_reconstruction,
            "out_of_band": self.out_of_band,
            "frame_deviation": self.frame_deviation.tolist(),
            "reconstruction_error": self.reconstruction_error.tolist(),
        }


def parseval_report(frame: Frame, functions) -> ParsevalReport:
    """Filter identity ``sum ||F_j f||^2 = ||f||^2`` and frame identity per sample."""
    lam = frame.basis.eigenvalues(eigen_kind(frame.metric))
    fil, fr, rec = [], [], []
    skipped = 0
    for f in functions:
        try:
            c = frame.check_band(f)
        except BandTruncationError:
            skipped += 1
            continue
        n2 = float(np.dot(c, c))
        filt = sum(float(np.sum((Window("F", j)(lam) * c) ** 2)) for j in range(frame.J + 1))
        fil.append(abs(filt - n2) / n2)
        s = frame.analyze(f)
        fr.append(abs(s.energy() - n2) / n2)
        back = frame.synthesize(s).coeffs
        rec.append(float(np.linalg.norm(back - c) / math.sqrt(n2)))
    return ParsevalReport(np.array(fil), np.array(fr), np.array(rec), skipped)


@dataclass
class LocalizationReport:
    j: int
    N: float
    C_emp: float
    values: np.ndarray = field(repr=False)  # per sampled atom, max over y

    def to_json(self) -> dict:
        return {"j": self.j, "N": self.N, "C_emp": self.C_emp, "per_atom": self.values.tolist()}


def sample_atoms(level: FrameLevel, n: int = 24, rng=0) -> np.ndarray:
    """Atoms nearest the poles and the equator plus a seeded random selection."""
    rng = np.random.default_rng(rng)
    pts = level.points
    anchors = [np.argmax(pts[:, 2]), np.argmin(pts[:, 2]), np.argmin(np.abs(pts[:, 2]))]
    rest = rng.choice(level.size, size=min(level.size, n), replace=False)
    return np.unique(np.r_[anchors, rest][:n])


def localization_report(
    level: FrameLevel,
    N: float = 5.0,
    mesh: MetricMesh | None = None,
    atoms=None,
    eps_schedule=(EPS_SCHEDULE[-1],),
) -> LocalizationReport:
    """``max |Theta_{j,k}(y)| |B(x_k, 2^-j)|^{1/2} (1 + 2^j d(x_k, y))^N`` over sampled atoms and mesh vertices y."""
    mesh = build_mesh(6) if mesh is None else mesh
    ks = sample_atoms(level) if atoms is None else np.asarray(atoms)
    U = _band_values(level.basis, level.band, mesh.vertices)
    per = np.empty(ks.size)
    for i, k in enumerate(ks):
        vals = level.atoms[k] @ U
        x = level.points[k]
        if level.metric == "cc":
            d = cc_distance_field(mesh, x, eps_schedule=eps_schedule, keep_history=False).d
        else:
            d = riemann_distance(x[None], mesh.vertices)
        per[i] = np.max(np.abs(vals) * (1.0 + 2.0**level.j * d) ** N) * math.sqrt(level.ball_volumes[k])
    return LocalizationReport(level.j, float(N), float(per.max()), per)
