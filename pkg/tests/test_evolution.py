import math

import numpy as np
import pytest

from coagkin.errors import ConfigError
from coagkin.evolution import (EvolutionConfig, apply_S, apply_T, evolve, from_physical, m0_logistic,
                               rescaled_physical_distance, step_mild, to_physical)
from coagkin.grid import make_grid, moment
from coagkin.kernels import KernelSpec, One
from coagkin.norms import Hm1Exp, L1k, L2Exp, norm

from conftest import band


@pytest.fixture(scope="module")
def gamma2(grid):
    return grid.sample(lambda x: 4 * x * np.exp(-2 * x))


@pytest.fixture(scope="module")
def G0(grid):
    return grid.sample(lambda x: np.exp(-x))


def test_semigroups_identity_at_zero(gamma2):
    assert np.array_equal(apply_S(0.0, gamma2).values, gamma2.values)
    assert np.array_equal(apply_T(0.0, gamma2).values, gamma2.values)
    with pytest.raises(ConfigError):
        apply_S(-1.0, gamma2)


def test_S_preserves_mass(gamma2):
    for t in (0.1, 0.37, 1.0):
        assert moment(apply_S(t, gamma2), 1) == pytest.approx(moment(gamma2, 1), rel=1e-6)


def test_S_example(grid, G0):
    out = apply_S(math.log(2), G0).values
    x = grid.nodes
    m = band(grid)
    assert np.max(np.abs(out - 4 * np.exp(-2 * x))[m]) <= 1e-5


def test_S_index_shift_exact(grid, gamma2):
    t = 3 * grid.spacing
    out = apply_S(t, gamma2).values
    np.testing.assert_allclose(out[:-3], math.exp(2 * t) * gamma2.values[3:], rtol=1e-15)
    assert np.all(out[-3:] == 0.0)


def test_T_decay(grid, gamma2):
    h = grid.sample(lambda x: (1 - x) * np.exp(-x))
    for t in (0.2, 0.7, 1.5):
        assert norm(apply_T(t, gamma2), L1k(0)) == pytest.approx(math.exp(-t) * norm(gamma2, L1k(0)), rel=1e-6)
        assert norm(apply_T(t, gamma2), L2Exp(0.5)) <= math.exp(-t / 2) * norm(gamma2, L2Exp(0.5)) + 1e-6
        assert norm(apply_T(t, h), Hm1Exp(0.5)) <= math.exp(-1.5 * t) * norm(h, Hm1Exp(0.5)) + 1e-6


def test_stationary_step(grid, K2, G0):
    dt = EvolutionConfig(dt=0.05).effective_dt(grid)
    out = step_mild(G0, K2, dt, "lawson4")
    assert norm(out - G0, L1k(2)) <= 1e-4 * dt


@pytest.mark.parametrize("scheme,order", [("euler", 2), ("midpoint", 3)])
def test_stationary_defect_order(grid, K2, G0, scheme, order):
    d = [norm(step_mild(G0, K2, m * grid.spacing, scheme) - G0, L1k(2)) for m in (4, 2)]
    assert math.log2(d[0] / d[1]) == pytest.approx(order, abs=0.25)


def _fine_reference(f, K, dt, sub=100):
    h = dt / sub
    for _ in range(sub):
        f = step_mild(f, K, h, "lawson4")
    return f


def test_euler_step_error_order(K2):
    # off-lattice dt goes through cubic interpolation; compare against a fine-step solution
    grid = make_grid("log", 1e-4, 60.0, 256)
    f0 = grid.sample(lambda x: 4 * x * np.exp(-2 * x))
    errs = []
    for dt in (0.08, 0.04):
        m = round(dt / grid.spacing)
        dt = m * grid.spacing
        ref = _fine_reference(f0, K2, dt, sub=m)
        errs.append(norm(step_mild(f0, K2, dt, "euler") - ref, L1k(2)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.25)


def test_midpoint_local_error_order(K2):
    grid = make_grid("log", 1e-4, 60.0, 256)
    f0 = grid.sample(lambda x: 4 * x * np.exp(-2 * x))
    errs = []
    for m in (8, 4):
        dt = m * grid.spacing
        ref = _fine_reference(f0, K2, dt, sub=m)
        errs.append(norm(step_mild(f0, K2, dt, "midpoint") - ref, L1k(2)))
    # local error O(dt^3)
    assert errs[0] / errs[1] >= 6.0


def test_G0_stays_put(grid, K2, G0):
    cfg = EvolutionConfig(dt=1e-3, t_final=5.0, reference=G0, dist_norm=L1k(2), record_stride=10)
    tr = evolve(G0, K2, cfg)
    assert np.max(tr.column("dist_ref")) <= 1e-3


def test_m0_follows_logistic(grid, K2):
    f0 = grid.sample(lambda x: 4 * np.exp(-2 * x))
    tr = evolve(f0, K2, EvolutionConfig(dt=1e-3, t_final=5.0))
    exact = m0_logistic(tr.times, 2.0)
    assert np.max(np.abs(tr.column("m0") / exact - 1)) <= 1e-3
    assert tr.m1_drift <= 1e-6


def test_constant_kernel_scaling(grid, gamma2):
    # with K = c constant, f solves iff (c/2) f solves with K = 2
    eps = 0.2
    c = 2 + eps
    cfg = EvolutionConfig(dt=1e-3, t_final=2.0)
    a = evolve(gamma2, KernelSpec(eps, One()), cfg).final
    b = evolve((c / 2) * gamma2, KernelSpec(0.0), cfg).final
    assert norm(a - (2 / c) * b, L1k(2)) <= 5e-3


def test_m0_logistic_values():
    assert m0_logistic(0.0, 2.0) == 2.0
    assert m0_logistic(1.0, 2.0) == pytest.approx(math.e / (0.5 + math.e - 1), rel=1e-14)
    assert m0_logistic(1.0, 2.0) == pytest.approx(1.22541, abs=2e-5)
    assert m0_logistic(60.0, 0.3) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ConfigError):
        m0_logistic(1.0, 0.0)


def test_physical_round_trip(grid, gamma2):
    st = to_physical(gamma2, 0.0)
    assert st.tau == 0.0 and np.array_equal(st.phi.values, gamma2.values)
    st = to_physical(gamma2, 0.8)
    assert st.tau == pytest.approx(math.exp(0.8) - 1)
    t, f = from_physical(st, grid)
    assert t == pytest.approx(0.8, abs=1e-14)
    assert np.max(np.abs(f.values - gamma2.values)) <= 1e-8
    assert moment(st.phi, 1) == pytest.approx(moment(gamma2, 1), rel=1e-6)


def test_rescaled_distance_identity(grid, gamma2, G0):
    st = to_physical(gamma2, 1.3)
    d = rescaled_physical_distance(st, G0, L1k(3))
    assert d == pytest.approx(norm(gamma2 - G0, L1k(3)), rel=1e-6)


def test_config_validation():
    with pytest.raises(ConfigError):
        EvolutionConfig(dt=-1.0)
    with pytest.raises(ConfigError):
        EvolutionConfig(dt=2.0, t_final=1.0)
    with pytest.raises(ConfigError):
        EvolutionConfig(scheme="rk45")
