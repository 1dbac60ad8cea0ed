import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from mqdx.errors import ConfigurationError, ContractError
from mqdx.grid import build_grid, gram_matrix, ho_eigenfunction, inner_product, kinetic_apply

PROPS = settings(max_examples=100, derandomize=True, deadline=None)


def test_small_grid_arithmetic():
    g = build_grid(8, -4, 4)
    assert g.spacing == 1.0
    np.testing.assert_array_equal(g.points, np.arange(-4.0, 4.0))


@pytest.mark.parametrize("n, lo, hi", [(128, -8, 8), (256, -16, 16)])
def test_deck_grids_spacing(n, lo, hi):
    g = build_grid(n, lo, hi)
    assert g.spacing == 0.125
    assert g.points[-1] == pytest.approx(hi - g.spacing, abs=1e-14)
    assert np.all(np.diff(g.points) > 0)


def test_momenta_symmetric_up_to_nyquist():
    g = build_grid(16, -8, 8)
    k = np.sort(g.momenta)
    np.testing.assert_allclose(k[1:], -k[1:][::-1], atol=1e-14)
    assert k[0] == pytest.approx(-np.pi / g.spacing)


@pytest.mark.parametrize("args", [(1, 0, 1), (0, 0, 1), (8, 1, 1), (8, 2, -2), (2.5, 0, 1)])
def test_bad_grid_rejected(args):
    with pytest.raises(ConfigurationError):
        build_grid(*args)


def test_kinetic_of_constant_vanishes():
    g = build_grid(64, -8, 8)
    np.testing.assert_allclose(kinetic_apply(g, np.ones(64)), 0.0, atol=1e-14)


def test_plane_wave_eigenvalue():
    g = build_grid(64, -8, 8)
    k1 = 2 * np.pi / 16
    f = np.exp(1j * k1 * g.points)
    Tf = kinetic_apply(g, f)
    np.testing.assert_allclose(Tf, (np.pi / 8) ** 2 / 2 * f, atol=1e-12)
    assert (np.pi / 8) ** 2 / 2 == pytest.approx(0.0771063, abs=1e-7)


def test_ho_kinetic_expectation_against_finite_differences():
    g = build_grid(256, -16, 16)
    phi = ho_eigenfunction(g.points, 0)
    t_fft = inner_product(g, phi, kinetic_apply(g, phi)).real
    assert t_fft == pytest.approx(0.25, abs=1e-10)
    # independent check: 8th-order central stencil for the second derivative
    c = np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560])
    d2 = sum(ci * np.roll(phi, 4 - i) for i, ci in enumerate(c)) / g.spacing ** 2
    assert -0.5 * np.sum(phi * d2) * g.spacing == pytest.approx(0.25, abs=1e-6)


def test_kinetic_length_mismatch():
    g = build_grid(16, -1, 1)
    with pytest.raises(ContractError):
        kinetic_apply(g, np.ones(15))
    with pytest.raises(ContractError):
        inner_product(g, np.ones(15), np.ones(15))


def test_inner_products():
    g = build_grid(256, -16, 16)
    phi0 = ho_eigenfunction(g.points, 0)
    phi1 = ho_eigenfunction(g.points, 1)
    assert inner_product(g, phi0, phi0) == pytest.approx(1.0, abs=1e-12)
    assert abs(inner_product(g, phi0, phi1)) < 1e-12
    assert inner_product(g, np.zeros(256), np.zeros(256)) == 0
    # high-order quadrature oracle on the analytic product
    from scipy.integrate import quad
    val, _ = quad(lambda x: ho_eigenfunction(x, 0) * ho_eigenfunction(x, 1), -16, 16)
    assert abs(val) < 1e-12


def test_ho_eigenfunctions_orthonormal():
    g = build_grid(256, -16, 16)
    phis = np.array([ho_eigenfunction(g.points, n) for n in range(8)])
    np.testing.assert_allclose(gram_matrix(g, phis), np.eye(8), atol=1e-12)


_vec = arrays(np.float64, 32, elements=st.floats(-1, 1, allow_nan=False))


@PROPS
@given(_vec, _vec, _vec, _vec, st.floats(-2, 2), st.floats(-2, 2))
def test_kinetic_linear_selfadjoint_positive(fr, fi, gr, gi, a, b):
    grid = build_grid(32, -4, 4)
    f, g = fr + 1j * fi, gr + 1j * gi
    lhs = kinetic_apply(grid, a * f + b * g)
    rhs = a * kinetic_apply(grid, f) + b * kinetic_apply(grid, g)
    scale = 1 + np.abs(rhs).max()
    assert np.abs(lhs - rhs).max() <= 1e-12 * scale
    fTg = inner_product(grid, f, kinetic_apply(grid, g))
    gTf = inner_product(grid, g, kinetic_apply(grid, f))
    assert abs(fTg - np.conj(gTf)) <= 1e-12 * (1 + abs(fTg))
    assert inner_product(grid, f, kinetic_apply(grid, f)).real >= -1e-12


@PROPS
@given(_vec, _vec)
def test_fft_round_trip(fr, fi):
    f = fr + 1j * fi
    np.testing.assert_allclose(np.fft.ifft(np.fft.fft(f)), f, atol=1e-12)
