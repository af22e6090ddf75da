import numpy as np
import pytest

from coagkin.coagulation import (apply_bilinear, apply_quadratic, bilinear_matrix, integrated_residual,
                                 number_loss_identity, self_similar_residual)
from coagkin.grid import make_grid, moment
from coagkin.kernels import KernelSpec, MinOverMax, One, RatioSym, Zero

from conftest import band


@pytest.fixture(scope="module")
def e(grid):
    return grid.sample(lambda x: np.exp(-x))


def test_constant_kernel_on_exp(grid, e, K2):
    x = grid.nodes
    m = band(grid)
    tot = apply_quadratic(K2, e).total.values
    assert np.max(np.abs(tot - (x - 2) * np.exp(-x))[m]) <= 3e-3
    tot = apply_quadratic(KernelSpec(0.1, One()), e).total.values
    assert np.max(np.abs(tot - 1.05 * (x - 2) * np.exp(-x))[m]) <= 3e-3


def test_zero_input(grid, K2):
    assert np.all(apply_quadratic(K2, grid.zeros()).total.values == 0.0)


def test_bilinear_consistency(grid, ratio_sym, rng):
    K = KernelSpec(0.3, ratio_sym)
    g = grid.sample(lambda x: x * np.exp(-1.3 * x))
    h = grid.sample(lambda x: (1 + np.sin(x)) * np.exp(-0.7 * x))
    f = g + h
    q = apply_quadratic(K, f).total.values
    scale = np.max(np.abs(q))
    assert np.max(np.abs(apply_bilinear(K, f, f).values - q)) <= 1e-12 * scale
    gh = apply_bilinear(K, g, h).values
    assert np.max(np.abs(gh - apply_bilinear(K, h, g).values)) <= 1e-12 * scale


def test_bilinear_matrix_matches(grid, ratio_sym):
    K = KernelSpec(0.2, ratio_sym)
    g = grid.sample(lambda x: x * np.exp(-x))
    h = grid.sample(lambda x: np.exp(-2 * x))
    M = bilinear_matrix(K, g)
    ref = apply_bilinear(K, g, h).values
    assert np.max(np.abs(M @ h.values - ref)) <= 1e-12 * np.max(np.abs(ref))


def test_mass_conserved(grid, ratio_sym):
    K = KernelSpec(0.2, ratio_sym)
    f = grid.sample(lambda x: 4 * x * np.exp(-2 * x))
    r = apply_quadratic(K, f)
    wx = grid.weights * grid.nodes
    assert abs(wx @ r.total.values) <= 1e-12 * (wx @ np.abs(r.loss.values))


def _brute_force(W, f, g, h, x_out):
    # C(g, h)(x) = 1/2 int_0^x K(x-y,y) g(x-y) h(y) dy - g(x) int_0^inf K(x,y) h(y) dy
    # symmetrised in (g, h), on a dense uniform grid
    z = np.linspace(0.0, 40.0, 8193)
    out = []
    for x in x_out:
        y = np.linspace(0.0, x, 4097)
        K = lambda a, b: 2.0 + W(a, b)
        gain = 0.25 * np.trapezoid(K(x - y, y) * (g(x - y) * h(y) + h(x - y) * g(y)), y)
        loss = 0.5 * (g(x) * np.trapezoid(K(x, z) * h(z), z) + h(x) * np.trapezoid(K(x, z) * g(z), z))
        out.append(gain - loss)
    return np.array(out)


def test_bilinear_brute_force():
    grid = make_grid("log", 1e-4, 40.0, 256)
    W = MinOverMax()
    K = KernelSpec(1.0, W)
    gf = lambda x: x * np.exp(-x)
    hf = lambda x: np.exp(-0.5 * x) / (1 + x)
    got = apply_bilinear(K, grid.sample(gf), grid.sample(hf), conservative=False).values
    idx = np.searchsorted(grid.nodes, [0.3, 1.0, 2.5, 6.0])
    ref = _brute_force(W, None, gf, hf, grid.nodes[idx])
    assert np.max(np.abs(got[idx] - ref)) <= 2e-3


def test_number_loss_identity(grid, K2, e):
    lhs, rhs = number_loss_identity(K2, e)
    assert lhs == pytest.approx(-1.0, abs=2e-3)
    assert rhs == pytest.approx(-1.0, abs=2e-3)
    assert number_loss_identity(K2, grid.zeros()) == (0.0, 0.0)
    K = KernelSpec(0.5, MinOverMax())
    lhs, rhs = number_loss_identity(K, grid.sample(lambda x: 4 * x * np.exp(-2 * x)))
    assert lhs == pytest.approx(rhs, abs=2e-3)


def test_integrated_residual_exp(grid, K2, e):
    x = grid.nodes
    m = band(grid)
    r = integrated_residual(K2, e).values
    assert np.max(np.abs(r[m]) / x[m] ** 2) <= 5e-3
    assert np.all(integrated_residual(K2, grid.zeros()).values == 0.0)


def test_integrated_residual_closed_form(grid):
    eps = 0.2
    s = 1 + eps / 2
    G = grid.sample(lambda x: np.exp(-x / s) / s ** 2)
    x = grid.nodes
    m = band(grid)
    r = integrated_residual(KernelSpec(eps, One()), G).values
    assert np.max(np.abs(r[m]) / x[m] ** 2) <= 5e-3


def test_self_similar_residual_small(grid, K2, e):
    r = self_similar_residual(K2, e).values
    assert np.max(np.abs(r[band(grid)])) <= 1e-4


def test_zero_family_equals_constant(grid, e):
    a = apply_quadratic(KernelSpec(0.3, Zero()), e).total.values
    b = apply_quadratic(KernelSpec(0.0, RatioSym(1.0, "two_over_s")), e).total.values
    assert np.array_equal(a, b)
    assert moment(e, 1) == pytest.approx(1.0, abs=1e-4)
