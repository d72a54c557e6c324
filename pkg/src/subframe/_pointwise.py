"""Compiled per-point harmonic sums for moment systems too large to store.

Each routine walks the points once, fills every ``u_i(x_k)`` into a scratch
vector with the same recurrence and flat ordering as ``SpectralBasis.evaluate``
and folds it into the output immediately.
"""

from __future__ import annotations

import math

import numba
import numpy as np

_SQRT2 = math.sqrt(2.0)


@numba.njit(cache=True, fastmath=True)
def _fill(z, s, phi, L, a, b, scale, buf):
    p_mm = 1.0 / math.sqrt(4.0 * math.pi)
    for m in range(L + 1):
        if m > 0:
            p_mm *= math.sqrt((2 * m + 1) / (2.0 * m)) * s
        cm = _SQRT2 * math.cos(m * phi) * scale if m > 0 else scale
        sm = _SQRT2 * math.sin(m * phi) * scale
        p2 = 0.0
        p1 = p_mm
        for l in range(m, L + 1):
            if l == m:
                p = p_mm
            elif l == m + 1:
                p = math.sqrt(2.0 * m + 3.0) * z * p_mm
            else:
                p = a[l, m] * (z * p1 - b[l, m] * p2)
            if l > m:
                p2 = p1
                p1 = p
            c = l * l + l
            buf[c + m] = p * cm
            if m > 0:
                buf[c - m] = p * sm


@numba.njit(cache=True, fastmath=True)
def _gram_apply(z, s, phi, w, y, L, a, b, scale):
    n = y.shape[0]
    out = np.zeros(n)
    buf = np.empty(n)
    for k in range(z.shape[0]):
        _fill(z[k], s[k], phi[k], L, a, b, scale, buf)
        t = 0.0
        for i in range(n):
            t += buf[i] * y[i]
        t *= w[k]
        for i in range(n):
            out[i] += t * buf[i]
    return out


@numba.njit(cache=True, fastmath=True)
def _project(z, s, phi, w, L, a, b, scale):
    n = (L + 1) * (L + 1)
    out = np.zeros(n)
    buf = np.empty(n)
    for k in range(z.shape[0]):
        _fill(z[k], s[k], phi[k], L, a, b, scale, buf)
        for i in range(n):
            out[i] += w[k] * buf[i]
    return out


@numba.njit(cache=True, fastmath=True)
def _synthesize(z, s, phi, y, L, a, b, scale):
    n = y.shape[0]
    out = np.empty(z.shape[0])
    buf = np.empty(n)
    for k in range(z.shape[0]):
        _fill(z[k], s[k], phi[k], L, a, b, scale, buf)
        t = 0.0
        for i in range(n):
            t += buf[i] * y[i]
        out[k] = t
    return out


class PointwiseHarmonics:
    """Matrix-free products with ``U[i, k] = u_i(x_k)`` for a fixed point set."""

    def __init__(self, basis, points):
        from .spectral import to_spherical

        self.basis = basis
        self.z, self.s, self.phi = (np.ascontiguousarray(v) for v in to_spherical(points))
        a, b = basis._recurrence
        self._args = (basis.l_max, np.ascontiguousarray(a), np.ascontiguousarray(b), float(basis._scale))

    def gram_apply(self, w, y) -> np.ndarray:
        """``U diag(w) U^T y``."""
        return _gram_apply(self.z, self.s, self.phi, np.asarray(w, float), np.asarray(y, float), *self._args)

    def project(self, w) -> np.ndarray:
        """``U w``."""
        return _project(self.z, self.s, self.phi, np.asarray(w, float), *self._args)

    def synthesize(self, y) -> np.ndarray:
        """``U^T y``."""
        return _synthesize(self.z, self.s, self.phi, np.asarray(y, float), *self._args)
