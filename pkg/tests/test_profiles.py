import numpy as np
import pytest

from coagkin.errors import ConfigError, ConvergenceError
from coagkin.grid import moment
from coagkin.kernels import KernelSpec, One, Zero
from coagkin.norms import L1k, norm
from coagkin.profiles import (check_profile_bounds, closed_form_constant, dilate, profile_residual,
                              profile_stability_scan, solve_profile)


@pytest.fixture(scope="module")
def prof_rs(grid, ratio_sym):
    return solve_profile(KernelSpec(0.1, ratio_sym), grid)


def test_constant_kernel_profile(grid, K2):
    r = solve_profile(K2, grid)
    assert norm(r.G - grid.sample(lambda x: np.exp(-x)), L1k(2)) <= 1e-3
    assert moment(r.G, 1) == pytest.approx(1.0, abs=1e-8)


def test_closed_form_one(grid):
    r = solve_profile(KernelSpec(0.2, One()), grid)
    ref = closed_form_constant(grid, 0.2)
    np.testing.assert_allclose(ref.values, np.exp(-grid.nodes / 1.1) / 1.21, rtol=1e-15)
    assert norm(r.G - ref, L1k(2)) <= 1e-3
    assert r.m0 == pytest.approx(1 / 1.1, abs=1e-3)


def test_ratio_sym_profile(prof_rs):
    assert prof_rs.residual_L1k <= 1e-5
    assert 1 / 1.05 - 1e-3 <= prof_rs.m0 <= 1 + 1e-3
    assert np.all(prof_rs.G.values >= 0)


def test_bounds_ratio_sym(prof_rs):
    rep = check_profile_bounds(prof_rs)
    assert rep.passed, rep.to_text()


def test_bounds_eps_zero(grid, K2):
    rep = check_profile_bounds(solve_profile(K2, grid))
    assert rep.m0 == pytest.approx(1.0, abs=1e-3)
    assert abs(rep.slope) <= 0.05
    assert rep.passed


def test_multistart_agrees(grid, ratio_sym, prof_rs):
    K = KernelSpec(0.1, ratio_sym)
    other = solve_profile(K, grid, initial=lambda x: 4 * x * np.exp(-2 * x))
    assert norm(other.G - prof_rs.G, L1k(2)) <= 2e-5


def test_stability_scan_one(grid):
    eps = (0.05, 0.1, 0.2)
    dist, slope = profile_stability_scan(One(), eps, 2.0, grid)
    G0 = grid.sample(lambda x: np.exp(-x))
    ref = [norm(closed_form_constant(grid, e) - G0, L1k(2)) for e in eps]
    np.testing.assert_allclose(dist, ref, atol=2e-3)
    assert 0.95 <= slope <= 1.05


def test_stability_scan_zero(small_grid):
    dist, _ = profile_stability_scan(Zero(), (0.05, 0.1, 0.2), 2.0, small_grid)
    assert np.all(np.asarray(dist) <= 1e-3)


def test_dilate_preserves_mass(grid):
    G = grid.sample(lambda x: np.exp(-x))
    assert moment(dilate(G, 1.3), 1) == pytest.approx(1 / 1.3, rel=1e-4)
    with pytest.raises(ConfigError):
        dilate(G, 0.0)


def test_residual_of_exact_profile(grid, K2):
    assert profile_residual(K2, grid.sample(lambda x: np.exp(-x))) <= 1e-4


def test_solver_errors(small_grid, K2):
    with pytest.raises(ConfigError):
        solve_profile(K2, small_grid, tol=0.0)
    with pytest.raises(ConvergenceError) as exc:
        solve_profile(K2, small_grid, tol=1e-30, max_iter=2)
    assert exc.value.iterations == 2
