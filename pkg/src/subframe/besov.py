"""Spectral Sobolev norms, frame-coefficient Besov norms and the sectoral sharpness witness."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, IncompleteGeometryError
from .spectral import BandFunction


@dataclass(frozen=True)
class BesovParams:
    alpha: float
    p: float = 2.0
    q: float = 2.0
    kind: str = "sub"

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ConfigError("alpha must be >= 0")
        if not 1 <= self.p < math.inf:
            raise ConfigError("p must lie in [1, inf)")
        if not self.q > 0:
            raise ConfigError("q must be > 0 (inf allowed)")
        if self.kind not in ("sub", "elliptic"):
            raise ConfigError(f"unknown kind {self.kind!r}")


def sobolev_weights(l, m, alpha: float, kind: str = "sub", weight: str = "degree") -> np.ndarray:
    """Squared-norm weights per coefficient.

    ``weight="degree"``: ``(l+1)^{2 alpha}`` (elliptic) and ``((l+1)^2 - m^2)^alpha`` (sub).
    ``weight="eigenvalue"``: ``(1 + lambda)^alpha`` with the operator eigenvalue.
    """
    l = np.asarray(l, dtype=float)
    m = np.asarray(m, dtype=float)
    if weight == "degree":
        base = (l + 1.0) ** 2 if kind == "elliptic" else (l + 1.0) ** 2 - m * m
    elif weight == "eigenvalue":
        base = 1.0 + (l * (l + 1.0) if kind == "elliptic" else l * (l + 1.0) - m * m)
    else:
        raise ValueError(f"unknown weight {weight!r}")
    return base**alpha


def spectral_norm(f: BandFunction, alpha: float, kind: str = "sub", weight: str = "degree") -> float:
    w = sobolev_weights(f.basis.degrees, f.basis.orders, alpha, kind, weight)
    return float(math.sqrt(np.sum(w * f.coeffs**2)))


def besov_sequence_norm(
    coeffs,
    volumes,
    params: BesovParams,
    volume_power: str = "verbatim",
) -> float:
    """Weighted l^q(l^p) norm of frame coefficients ``s_k^j``.

    Inner level sums are ``sum_k |B_k|^{1/p - 1/2} |s_k|^p`` (``volume_power="verbatim"``)
    or ``sum_k (|B_k|^{1/p - 1/2} |s_k|)^p`` (``"scaled"``); both agree at p = 2.
    ``volumes[j][k]`` is ``|B(x_k^j, 2^-j)|``.
    """
    levels = coeffs.levels if hasattr(coeffs, "levels") else coeffs
    if len(volumes) < len(levels):
        raise IncompleteGeometryError(f"ball volumes given for {len(volumes)} of {len(levels)} levels")
    p, q, a = params.p, params.q, params.alpha
    e = 1.0 / p - 0.5
    inner = []
    for j, s in enumerate(levels):
        s = np.abs(np.asarray(s, dtype=float))
        v = np.asarray(volumes[j], dtype=float)
        if v.shape != s.shape or not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise IncompleteGeometryError(f"level {j}: ball volumes missing or invalid")
        if volume_power == "verbatim":
            t = np.sum(v**e * s**p)
        elif volume_power == "scaled":
            t = np.sum((v**e * s) ** p)
        else:
            raise ValueError(f"unknown volume_power {volume_power!r}")
        inner.append(float(t) ** (1.0 / p))
    inner = np.asarray(inner)
    scale = 2.0 ** (a * np.arange(inner.size))
    if math.isinf(q):
        return float(np.max(scale * inner, initial=0.0))
    return float(np.sum((scale * inner) ** q) ** (1.0 / q))


@dataclass
class EquivalenceReport:
    ratios: np.ndarray
    params: BesovParams

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
        return {"alpha": self.params.alpha, "p": self.params.p, "q": self.params.q,
                "min": self.min, "max": self.max, "spread": self.spread, "n": int(self.ratios.size)}


def equivalence_report(frame, functions, params: BesovParams, weight: str = "degree") -> EquivalenceReport:
    """Ratio of the sequence norm of ``tau(f)`` to the spectral norm over a family of f."""
    vols = [lev.ball_volumes for lev in frame.levels]
    ratios = []
    for f in functions:
        s = frame.analyze(f)
        ratios.append(besov_sequence_norm(s, vols, params) / spectral_norm(f, params.alpha, params.kind, weight))
    return EquivalenceReport(np.asarray(ratios), params)


def zonal_family(basis, betas, omega: float, kind: str = "sub"):
    """Zonal ``c_{l,0} = (l+1)^-beta`` truncated to the band."""
    from .spectral import flat_index

    lam = basis.eigenvalues(kind)
    out = []
    for b in betas:
        c = np.zeros(basis.size)
        for l in range(basis.l_max + 1):
            i = flat_index(l, 0)
            if lam[i] <= omega:
                c[i] = (l + 1.0) ** (-b)
        out.append(BandFunction(basis, c, kind, omega))
    return out


def gamma_interval(alpha: float, delta: float) -> tuple[float, float]:
    """Exponents gamma with the sectoral series in the sub-elliptic space of order alpha but not the elliptic one of order delta."""
    if not (alpha > 0 and delta > alpha / 2):
        raise ConfigError(f"need delta > alpha/2 > 0, got alpha={alpha}, delta={delta}")
    return (-0.5 - delta, -0.5 - alpha / 2)


@dataclass
class SharpnessWitness:
    alpha: float
    delta: float
    gamma: float
    L: np.ndarray  # cutoffs
    sub_partial: np.ndarray  # sum_{l<=L} ((l+1)^2 - l^2)^alpha c_l^2
    elliptic_partial: np.ndarray  # sum_{l<=L} (l+1)^{2 delta} c_l^2

    def sub_tail_bound(self, L: int) -> float:
        """Upper bound on the sub-norm series beyond degree L."""
        e = self.alpha + 2 * self.gamma
        # (2l+1)^e is decreasing, so the sum over l > L is below the integral from L
        return (2 * L + 1) ** (e + 1) / (2 * (-e - 1))

    def partial_at(self, L: int):
        i = int(np.searchsorted(self.L, L))
        return float(self.sub_partial[i]), float(self.elliptic_partial[i])

    def rows(self):
        for a, b, c in zip(self.L, self.sub_partial, self.elliptic_partial):
            yield int(a), float(b), float(c)


def sharpness_witness(
    alpha: float, delta: float, L_cut: int, gamma: float | None = None, strict: bool = True
) -> SharpnessWitness:
    """Partial norm sums of ``f = sum_l (2l+1)^gamma u_{l,l}`` up to degree ``L_cut``.

    ``strict=False`` allows gamma outside the witness interval (the sums are still defined).
    """
    lo, hi = gamma_interval(alpha, delta)
    gamma = 0.5 * (lo + hi) if gamma is None else float(gamma)
    if strict and not lo < gamma < hi:
        raise ConfigError(f"gamma={gamma} outside ({lo}, {hi})")
    l = np.arange(int(L_cut) + 1, dtype=float)
    c2 = (2 * l + 1) ** (2 * gamma)
    sub = np.cumsum((2 * l + 1) ** alpha * c2)
    ell = np.cumsum((l + 1) ** (2 * delta) * c2)
    return SharpnessWitness(alpha, delta, gamma, l.astype(np.int64), sub, ell)
