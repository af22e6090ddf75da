import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coagkin.errors import ConfigError, DomainError
from coagkin.kernels import (KernelSpec, MinOverMax, One, RatioSym, Shifted, Tabulated, Zero, eval_K,
                             eval_W, family_from_name, recenter_signed, validate_kernel)

sizes = st.floats(1e-3, 1e3, allow_nan=False)
FAMILIES = [Zero(), One(), RatioSym(1.0, "two_over_s"), MinOverMax()]


def test_one_is_constant():
    assert eval_W(One(), 3.7, 0.2) == 1.0


def test_ratio_sym_values():
    W = RatioSym(1.0, "two_over_s")
    assert eval_W(W, 1.0, 1.0) == pytest.approx(1.0, abs=1e-15)
    assert eval_W(W, 1.0, 2.0) == pytest.approx(0.8, abs=1e-15)


def test_ratio_sym_matches_closed_form():
    W = RatioSym(1.0, "two_over_s")
    x, y = np.meshgrid(np.geomspace(1e-2, 1e2, 9), np.geomspace(1e-2, 1e2, 9))
    np.testing.assert_allclose(eval_W(W, x, y), 2 * x * y / (x ** 2 + y ** 2), rtol=1e-14)


def test_eval_K_examples():
    for fam in FAMILIES:
        assert eval_K(KernelSpec(0.0, fam), 5.0, 9.0) == 2.0
    assert eval_K(KernelSpec(0.1, One()), 1.0, 4.0) == pytest.approx(2.1)
    assert eval_K(KernelSpec(0.2, MinOverMax()), 2.0, 8.0) == pytest.approx(2.05)


def test_nonpositive_sizes_rejected():
    with pytest.raises(DomainError):
        eval_W(One(), 0.0, 1.0)
    with pytest.raises(DomainError):
        eval_K(KernelSpec(0.1, One()), 1.0, -2.0)


def test_epsilon_range():
    with pytest.raises(ConfigError):
        KernelSpec(1.5, One())
    with pytest.raises(ConfigError):
        KernelSpec(-0.1, One())


@pytest.mark.parametrize("fam", FAMILIES, ids=lambda f: type(f).__name__)
@settings(max_examples=60, deadline=None)
@given(x=sizes, y=sizes, lam=st.floats(1e-2, 1e2))
def test_symmetric_bounded_homogeneous(fam, x, y, lam):
    w = eval_W(fam, x, y)
    assert w == pytest.approx(eval_W(fam, y, x), abs=1e-13)
    assert -1e-15 <= w <= 1.0 + 1e-15
    assert eval_W(fam, lam * x, lam * y) == pytest.approx(w, abs=1e-12)


@pytest.mark.parametrize("fam", FAMILIES, ids=lambda f: type(f).__name__)
def test_validate_kernel_clean(fam):
    assert validate_kernel(KernelSpec(0.1, fam)).empty


def test_validate_kernel_flags_asymmetric_table():
    tab = Tabulated((0.1, 1.0, 10.0), (0.2, 0.5, 0.9))
    rep = validate_kernel(tab)
    assert rep.symmetry_defect > 0
    assert not rep.empty


def test_validate_kernel_flags_out_of_range():
    tab = Tabulated((0.1, 1.0, 10.0), (1.5, 1.5, 1.5))
    rep = validate_kernel(tab)
    assert rep.bound_violation == pytest.approx(0.5)


def test_tabulated_from_function_reproduces_ratio_sym():
    tab = Tabulated.from_function(lambda r: 2 * r / (1 + r ** 2), n=2001)
    W = RatioSym(1.0, "two_over_s")
    r = np.geomspace(1e-3, 1e3, 50)
    np.testing.assert_allclose(tab(r, np.ones_like(r)), W(r, np.ones_like(r)), atol=1e-4)


def test_recenter_zero_bound_unchanged():
    c, fam, eps = recenter_signed(0.0, One(), 0.3)
    assert (c, eps) == (2.0, 0.3)
    assert fam == One()


def test_recenter_minus_one():
    tab = Tabulated((0.5, 2.0), (-1.0, -1.0))
    c, fam, eps = recenter_signed(1.0, tab, 1.0)
    assert c == 1.0
    assert isinstance(fam, Zero)
    assert eps == 2.0


def test_recenter_signed_table_range():
    r = np.geomspace(1e-2, 1e2, 41)
    tab = Tabulated(tuple(r), tuple(np.cos(np.log(r))))
    c, fam, eps = recenter_signed(1.0, tab, 0.25)
    vals = np.asarray(fam.values)
    assert c == pytest.approx(1.75)
    assert eps == pytest.approx(0.5)
    np.testing.assert_allclose(vals, (np.cos(np.log(r)) + 1.0) / 2.0, atol=1e-15)
    assert vals.min() >= 0.0 and vals.max() <= 1.0


def test_recenter_preserves_kernel():
    base = RatioSym(1.0, "two_over_s")
    c, fam, eps = recenter_signed(0.5, base, 0.4)
    assert isinstance(fam, Shifted)
    x, y = 1.3, 0.2
    assert c + eps * fam(x, y) == pytest.approx(2.0 + 0.4 * base(x, y), abs=1e-14)


def test_recenter_rejects_negative_bound():
    with pytest.raises(DomainError):
        recenter_signed(-1.0, One())


def test_family_from_name():
    assert isinstance(family_from_name("one"), One)
    assert isinstance(family_from_name("Zero"), Zero)
    with pytest.raises(ConfigError):
        family_from_name("nope")
