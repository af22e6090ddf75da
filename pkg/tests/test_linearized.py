import math

import numpy as np
import pytest

from coagkin.coagulation import apply_bilinear
from coagkin.errors import BlowUpError, ConfigError, DomainError, GridMismatchError
from coagkin.grid import make_grid, moment
from coagkin.kernels import KernelSpec, One
from coagkin.linearized import (FORMS, GapConstants, OperatorMatrix, SplittingConfig, assemble_L0,
                                assemble_Leps, assemble_splitting, compose_gap_constants, estimate_gap,
                                evolve_linear, leading_eigenvalues, op_norm_diff_L1k, perturbed_gap,
                                random_zero_mass, scan_cutoff, zero_mass_project)
from coagkin.norms import L1k, L2Exp, Hm1Exp, Wm1Inf, norm
from coagkin.profiles import closed_form_constant, solve_profile

from conftest import band


@pytest.fixture(scope="module")
def L0(grid):
    return assemble_L0(grid, "direct")


@pytest.fixture(scope="module")
def bump(grid):
    # smooth, compactly supported on [0.5, 4]
    def fn(x):
        u = np.clip((x - 0.5) / 3.5, 0.0, 1.0)
        return np.sin(math.pi * u) ** 4
    return grid.sample(fn)


def test_kernel_direction(L0, grid):
    h = grid.sample(lambda x: (1 - x) * np.exp(-x))
    r = norm(L0(h), L1k(2))
    assert r <= 5e-3
    fine = make_grid("log", 1e-4, 60.0, 1024)
    r2 = norm(assemble_L0(fine)(fine.sample(lambda x: (1 - x) * np.exp(-x))), L1k(2))
    assert r / r2 >= 2.0


def test_L0_on_exp(L0, grid):
    x = grid.nodes
    out = L0(grid.sample(lambda s: np.exp(-s))).values
    assert np.max(np.abs(out - (x - 2) * np.exp(-x))[band(grid)]) <= 5e-3


@pytest.mark.parametrize("form", FORMS[1:])
def test_forms_agree(grid, L0, bump, form):
    other = assemble_L0(grid, form)
    assert np.max(np.abs(other(bump).values - L0(bump).values)) <= 5e-3


def test_unknown_form(grid):
    with pytest.raises(ConfigError):
        assemble_L0(grid, "spectral")


def test_Leps_at_zero_is_L0(grid, L0, K2):
    L = assemble_Leps(grid, grid.sample(lambda x: np.exp(-x)), K2)
    assert np.max(np.abs(L.matrix - L0.matrix)) <= 1e-10


def test_Leps_kernel_direction_closed_form(grid):
    eps = 0.2
    s = 1 + eps / 2
    K = KernelSpec(eps, One())
    G = closed_form_constant(grid, eps)
    # d/da of a G(a x) at a = 1
    d = grid.sample(lambda x: (1 - x / s) * np.exp(-x / s) / s ** 2)
    L = assemble_Leps(grid, G, K)
    assert norm(L(d), L1k(2)) <= 5e-3


def test_Leps_difference_identity(grid, L0, ratio_sym, rng):
    eps = 0.1
    K = KernelSpec(eps, ratio_sym)
    G = solve_profile(K, grid).G
    G0 = grid.sample(lambda x: np.exp(-x))
    L = assemble_Leps(grid, G, K)
    h = random_zero_mass(grid, rng)
    lhs = L(h) - L0(h)
    # C_K = C_2 + eps C_W, so 2 C_K(G, h) - 2 C_2(G0, h) = 2 C_2(G - G0, h) + 2 eps C_W(G, h)
    KW = KernelSpec(1.0, ratio_sym, base=1e-300)
    rhs = 2 * apply_bilinear(KernelSpec(0.0), G - G0, h) + 2 * eps * apply_bilinear(KW, G, h)
    assert np.max(np.abs(lhs.values - rhs.values)) <= 1e-8


def test_operator_matrix_checks(grid, small_grid):
    with pytest.raises(GridMismatchError):
        OperatorMatrix(grid, np.eye(3))
    L = OperatorMatrix(grid, np.eye(grid.n))
    with pytest.raises(GridMismatchError):
        L(small_grid.zeros())
    with pytest.raises(ValueError):
        L.matrix[0, 0] = 2.0


def test_zero_mass_project(grid):
    e = grid.sample(lambda x: np.exp(-x))
    assert np.max(np.abs(zero_mass_project(e).values)) <= 1e-15
    h = grid.sample(lambda x: (1 - x) * np.exp(-x))
    h = h - (np.dot(grid.weights * grid.nodes, h.values) / np.dot(grid.weights * grid.nodes, e.values)) * e
    np.testing.assert_allclose(zero_mass_project(h).values, h.values, atol=1e-15)
    p = zero_mass_project(grid.sample(lambda x: x * np.exp(-x)))
    np.testing.assert_allclose(p.values, (grid.nodes - 2) * np.exp(-grid.nodes), atol=2e-4)
    assert abs(np.dot(grid.weights * grid.nodes, p.values)) <= 1e-12
    assert moment(p, 0) == pytest.approx(-1.0, abs=1e-3)


def test_L0_preserves_zero_mass(grid, L0, rng):
    h = random_zero_mass(grid, rng)
    wx = grid.weights * grid.nodes
    assert abs(wx @ L0(h).values) <= 1e-6 * norm(h, L1k(1))


def test_evolve_linear_zero(L0, grid):
    t, v = evolve_linear(L0, grid.zeros(), 1.0)
    assert np.all(v == 0.0)
    assert t[-1] == pytest.approx(1.0)


def test_evolve_linear_decays_wm1(L0, grid):
    h0 = zero_mass_project(grid.sample(lambda x: 4 * x * np.exp(-2 * x)))
    t, v = evolve_linear(L0, h0, 4.0, kind=Wm1Inf(), project=True)
    assert v[-1] < 0.1 * v[0]


def test_evolve_linear_blowup(grid, rng):
    L = OperatorMatrix(grid, 3.0 * np.eye(grid.n))
    with pytest.raises(BlowUpError):
        evolve_linear(L, random_zero_mass(grid, rng), 2.0, dissipation=0.0)


def test_gap_hm1_small(small_grid):
    worst, rates = estimate_gap(assemble_L0(small_grid), Hm1Exp(0.5), trials=5, T=6.0)
    assert len(rates) == 5
    assert worst >= 0.9


def test_gap_needs_five_trials(L0):
    with pytest.raises(ConfigError):
        estimate_gap(L0, L1k(3), trials=2)


def test_op_norm_diff(grid, L0):
    assert op_norm_diff_L1k(L0, L0, 3) == 0.0
    shifted = OperatorMatrix(grid, L0.matrix - 0.37 * np.eye(grid.n))
    assert op_norm_diff_L1k(shifted, L0, 3) == pytest.approx(0.37, rel=1e-14)


def test_leading_eigenvalues(L0):
    ev = leading_eigenvalues(L0, 3)
    assert ev[0].real == pytest.approx(-1.0, abs=1e-3)


def test_splitting_sums_to_L0(grid, rng):
    R = scan_cutoff(grid, 1.1, 3.0)
    A, B = assemble_splitting(grid, SplittingConfig(R))
    Lc = assemble_L0(grid, "convolution")
    h = random_zero_mass(grid, rng)
    assert np.max(np.abs((A + B)(h).values - Lc(h).values)) <= 1e-10


def test_splitting_A_bound(grid, rng):
    mu, k = 0.5, 3.0
    R = scan_cutoff(grid, 1.1, k)
    A, _ = assemble_splitting(grid, SplittingConfig(R, mu))
    const = 2 / math.sqrt(2 - mu) * math.sqrt(math.exp(2 * R) + 1 + (R + 1) ** (2 * (1 - k)))
    for _ in range(5):
        h = random_zero_mass(grid, rng)
        assert norm(A(h), L2Exp(mu)) <= const * norm(h, L1k(k)) + 1e-6


def test_scan_cutoff(grid):
    R = scan_cutoff(grid, 1.1, 3.0)
    assert R in grid.nodes
    assert 10.0 < R < 60.0
    with pytest.raises(DomainError):
        scan_cutoff(grid, 1.6, 3.0)
    with pytest.raises(ConfigError):
        SplittingConfig(-1.0)


def test_compose_examples():
    assert compose_gap_constants(1, 1, 1, 0.5, 1, 1, "restrict") == (3.0, 0.5)
    assert compose_gap_constants(1, 0.5, 1, 1, 1, 1, "extend") == (3.0, 0.5)
    C, lam = compose_gap_constants(2, 1, 1.7, 0.5, 0.0, 1, "restrict")
    assert C == 1.7
    with pytest.raises(DomainError):
        compose_gap_constants(1, 1, 1, 1, 1, 1)
    with pytest.raises(DomainError):
        compose_gap_constants(1, 1, 1, 0.5, 1, 1, "extend")


def test_perturbed_gap():
    c = GapConstants(1.5, 2.0)
    assert perturbed_gap(c, 0.0) == (0.5, True)
    # eps0 = 1 / (2 C M2) is where 1/2 - C M2 eps reaches zero
    lam, ok = perturbed_gap(c, c.eps0)
    assert lam == pytest.approx(0.0, abs=1e-15)
    assert perturbed_gap(c, 0.5 * c.eps0)[0] == pytest.approx(0.25)
    assert not ok
    lams = [perturbed_gap(c, e)[0] for e in (0.01, 0.05, 0.1)]
    assert lams[0] > lams[1] > lams[2]
    with pytest.raises(DomainError):
        GapConstants(0.0, 1.0)
