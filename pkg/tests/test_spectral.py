from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import sph_harm_y

from subframe.errors import BandTruncationError, CapacityError
from subframe.frame import Window
from subframe.spectral import (
    BandFunction,
    QuadratureGrid,
    SpectralBasis,
    analyze_grid,
    apply_filter,
    band_lm,
    eigenvalue,
    embedding_check,
    flat_index,
    index_lm,
    kernel_eval,
    kernel_matrix,
    l_max_needed,
    product_band_check,
    synthesize_grid,
    weyl_count,
    weyl_slope,
)


def _gram(basis: SpectralBasis) -> np.ndarray:
    grid = QuadratureGrid.for_degree(basis.l_max, products=True, measure=basis.measure)
    U = basis.evaluate(grid.points)
    return (U * grid.weights.ravel()) @ U.T


def _scipy_real(l_max: int, points) -> np.ndarray:
    """Independent real harmonics from scipy's complex ones, normalized to mass 1."""
    p = np.atleast_2d(points)
    theta = np.arccos(np.clip(p[:, 2], -1, 1))
    phi = np.arctan2(p[:, 1], p[:, 0])
    rows = []
    for l in range(l_max + 1):
        for m in range(-l, l + 1):
            Y = sph_harm_y(l, abs(m), theta, phi)
            if m == 0:
                v = Y.real
            elif m > 0:
                v = math.sqrt(2) * Y.real
            else:
                v = math.sqrt(2) * Y.imag
            rows.append(v * math.sqrt(4 * math.pi))
    return np.array(rows)


def test_constant_basis():
    b = SpectralBasis(0)
    u = b.evaluate(np.array([[0, 0, 1.0], [1.0, 0, 0]]))
    assert np.allclose(u, 1.0)
    assert abs(_gram(b)[0, 0] - 1.0) < 1e-14


@pytest.mark.parametrize("measure", ["normalized", "surface"])
def test_gram_identity_l8(measure):
    G = _gram(SpectralBasis(8, measure))
    assert G.shape == (81, 81)
    assert np.max(np.abs(G - np.eye(81))) <= 1e-12


@pytest.mark.slow
def test_gram_identity_l64():
    G = _gram(SpectralBasis(64))
    assert np.max(np.abs(G - np.eye(G.shape[0]))) <= 1e-12


def test_matches_scipy_up_to_sign():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((200, 3))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    ours = SpectralBasis(12).evaluate(x)
    ref = _scipy_real(12, x)
    # per-index sign convention may differ (Condon-Shortley phase)
    sign = np.sign(np.sum(ours * ref, axis=1))
    assert np.max(np.abs(ours - sign[:, None] * ref)) < 1e-10


def test_eigenvalue_examples():
    assert eigenvalue("sub", 2, 1) == 5
    assert eigenvalue("sub", 3, 3) == 3
    assert eigenvalue("elliptic", 3, 0) == 12


def test_cap():
    with pytest.raises(CapacityError):
        SpectralBasis(513)


@given(st.integers(0, 200))
def test_flat_index_bijection(l):
    m = np.arange(-l, l + 1)
    i = flat_index(l, m)
    assert np.array_equal(i, np.arange(l * l, (l + 1) ** 2))
    ll, mm = index_lm(i)
    assert np.all(ll == l) and np.array_equal(mm, m)


def test_band_examples():
    assert band_lm("sub", 0) == [(0, 0)]
    assert set(band_lm("sub", 3)) == {(0, 0), (1, 0), (1, -1), (1, 1), (2, -2), (2, 2), (3, -3), (3, 3)}
    ell = band_lm("elliptic", 6)
    assert len(ell) == 9 and max(l for l, _ in ell) == 2


@given(st.floats(0, 120))
def test_band_indices_match_enumeration(omega):
    for kind in ("sub", "elliptic"):
        L = l_max_needed(kind, omega)
        b = SpectralBasis(max(L, 0))
        idx = b.band_indices(kind, omega)
        want = sorted(int(flat_index(l, m)) for l, m in band_lm(kind, omega))
        assert idx.tolist() == want
        assert weyl_count(kind, omega) == len(want)
    assert l_max_needed("sub", omega) == math.floor(omega)


def test_band_truncation():
    with pytest.raises(BandTruncationError):
        SpectralBasis(10).band_indices("sub", 11.0)


def test_round_trips():
    b = SpectralBasis(16)
    grid = QuadratureGrid.for_degree(16)
    e = np.zeros(b.size)
    e[flat_index(1, 0)] = 1
    assert np.max(np.abs(analyze_grid(b, grid, synthesize_grid(b, grid, e)) - e)) <= 1e-12
    f = BandFunction.random(b, "sub", 16.0, np.random.default_rng(0))
    back = analyze_grid(b, grid, synthesize_grid(b, grid, f.coeffs))
    assert np.linalg.norm(back - f.coeffs) / f.norm() <= 1e-12
    one = analyze_grid(b, grid, np.ones(grid.points.shape[0]))
    assert abs(one[0] - 1) < 1e-13 and np.max(np.abs(one[1:])) < 1e-13


def test_coarse_grid_rejected():
    with pytest.raises(CapacityError):
        analyze_grid(SpectralBasis(10), QuadratureGrid.for_degree(5), np.zeros(6 * 12))


def test_grid_weights_sum():
    for measure, mass in (("normalized", 1.0), ("surface", 4 * math.pi)):
        g = QuadratureGrid.for_degree(20, measure=measure)
        assert abs(g.weights.sum() - mass) / mass <= 1e-14


def test_filter_identity_and_composition():
    b = SpectralBasis(10)
    f = BandFunction.random(b, "sub", 10.0, np.random.default_rng(1))
    assert np.array_equal(apply_filter(lambda s: np.ones_like(s), 1.0, "sub", f).coeffs, f.coeffs)
    F, G = Window("F", 1), Window("G", 0)
    a = apply_filter(F, 0.7, "sub", apply_filter(G, 0.7, "sub", f))
    c = apply_filter(lambda s: F(s) * G(s), 0.7, "sub", f)
    # equal up to the rounding of one product per coefficient
    assert np.max(np.abs(a.coeffs - c.coeffs)) <= 4e-16 * np.max(np.abs(f.coeffs))


def test_level_filter_support():
    b = SpectralBasis(20)
    f = BandFunction.random(b, "sub", 20.0, np.random.default_rng(2))
    for j in range(3):
        out = apply_filter(Window("F", j), 1.0, "sub", f)
        lam = b.eigenvalues("sub")
        lo = 0.0 if j == 0 else 4.0 ** (j - 1)
        assert np.all(out.coeffs[(lam < lo) | (lam > 4.0 ** (j + 1))] == 0)


def test_kernel_addition_theorem_and_symmetry():
    b = SpectralBasis(9)
    rng = np.random.default_rng(4)
    x = rng.standard_normal((100, 3))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    y = rng.standard_normal((100, 3))
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    one = lambda s: np.ones_like(s)
    diag = kernel_eval(one, 1.0, "elliptic", x, x, b)
    assert np.allclose(diag, sum(2 * l + 1 for l in range(10)), rtol=1e-12)
    b16 = SpectralBasis(16)
    assert np.max(np.abs(kernel_eval(Window("F", 1), 1.0, "sub", x, y, b16) - kernel_eval(Window("F", 1), 1.0, "sub", y, x, b16))) <= 1e-13
    with pytest.raises(BandTruncationError):
        kernel_eval(Window("F", 1), 1.0, "sub", x, y, b)
    # F(t^2 lambda) vanishes off lambda = 0 for large t
    K = kernel_matrix(Window("F", 0), 10.0, "sub", x[:5], y[:5], b)
    Fv = float(Window("F", 0)(np.array([0.0]))[0])
    assert np.allclose(K, Fv)


def test_product_examples():
    b = SpectralBasis(2)
    one = BandFunction.unit(b, 0, 0, "elliptic")
    chk = product_band_check(one, one)
    assert chk.residual == 0.0
    assert abs(chk.product.coeffs[0] - 1) < 1e-13 and np.all(np.abs(chk.product.coeffs[1:]) < 1e-13)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([2.0, 6.0, 12.0, 20.0]))
def test_product_closure(seed, omega):
    rng = np.random.default_rng(seed)
    b = SpectralBasis(l_max_needed("elliptic", omega))
    f = BandFunction.random(b, "elliptic", omega, rng)
    g = BandFunction.random(b, "elliptic", omega, rng)
    chk = product_band_check(f, g)
    assert chk.residual <= 1e-10
    assert chk.max_elliptic <= 4 * 3 * omega


def test_embedding_examples():
    r1 = embedding_check(1.0)
    assert set(band_lm("sub", 1.0)) == {(0, 0), (1, -1), (1, 1)}
    assert r1.sub_to_elliptic_c == 2.0
    assert embedding_check(16.0).sub_to_elliptic_c == 272 / 256
    assert embedding_check(6.0).elliptic_to_sub_C == 1.0


def test_weyl_examples():
    for l in range(8):
        assert weyl_count("elliptic", l * (l + 1)) == (l + 1) ** 2
    assert weyl_count("sub", 3) == 8
    ws = 2.0 ** np.linspace(4, 12, 33)
    assert abs(weyl_slope("elliptic", ws) - 1.0) <= 0.1


def test_weyl_sub_slope_oracle():
    # frozen from brute-force enumeration over (l, m) at each omega
    ws = 2.0 ** np.linspace(4, 12, 33)
    brute = [sum(1 for l in range(int(w) + 1) for m in range(-l, l + 1) if l * (l + 1) - m * m <= w) for w in ws[:17]]
    assert brute == [weyl_count("sub", w) for w in ws[:17]]
    assert abs(weyl_slope("sub", ws) - 1.1161) < 1e-3


def test_band_function_json_round_trip():
    b = SpectralBasis(6)
    f = BandFunction.random(b, "sub", 6.0, np.random.default_rng(5))
    g = BandFunction.from_json(f.to_json())
    assert np.array_equal(f.coeffs, g.coeffs) and g.omega == 6.0 and g.kind == "sub"
    with pytest.raises(ValueError):
        BandFunction(b, np.ones(b.size), "sub", 2.0)
