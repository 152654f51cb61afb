import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from padic_ctqw import BallIndex, ContractError, SupportSet, TestFunction, embed, inner_product, project_average
from padic_ctqw.functions import projection_residual, sample_function
from padic_ctqw.padic import ultra_distance


def _random_function(rng, level, support=None):
    support = support or SupportSet.full(level)
    n = len(support)
    return TestFunction(level, support, rng.normal(size=n) + 1j * rng.normal(size=n))


def test_basis_is_orthonormal():
    s = SupportSet.full(3)
    for i in s:
        for j in s:
            ip = inner_product(TestFunction.basis(i, s), TestFunction.basis(j, s))
            assert ip == (1.0 if i == j else 0.0)


def test_inner_product_example():
    f = TestFunction.from_coeffs(np.array([1, 1j]) / np.sqrt(2), 1)
    g = TestFunction.from_coeffs([1, 0], 1)
    assert inner_product(f, g) == pytest.approx(1 / np.sqrt(2), abs=1e-15)


def test_inner_product_rejects_mismatched_spaces():
    with pytest.raises(ContractError):
        inner_product(TestFunction.basis(0, SupportSet.full(1)), TestFunction.basis(0, SupportSet.full(2)))
    with pytest.raises(ContractError):
        inner_product(TestFunction.basis(0, SupportSet(2, (0, 1))), TestFunction.basis(0, SupportSet(2, (0, 2))))


def test_constant_is_preserved_by_averaging():
    r, l = 5, 2
    f = TestFunction.constant(1.0, SupportSet.full(r))
    assert np.allclose(f.coeffs, 2.0 ** (-r / 2))
    p = project_average(f, l)
    assert np.allclose(p.coeffs, 2.0 ** (-l / 2), atol=1e-15, rtol=0)
    assert np.allclose(p.values(), 1.0)


def test_project_single_fine_basis_vector():
    r, l = 4, 1
    f = TestFunction.basis(13, SupportSet.full(r))  # parent 13 mod 2 = 1
    p = project_average(f, l)
    assert p.coeffs == pytest.approx([0.0, 2.0 ** ((l - r) / 2)], abs=1e-15)


def test_embed_example():
    e = embed(TestFunction.basis(0, SupportSet.full(1)), 3)
    expected = np.zeros(8)
    expected[[0, 2, 4, 6]] = 0.5
    assert np.allclose(e.coeffs, expected, atol=1e-15, rtol=0)


def test_embed_identity_and_errors():
    f = _random_function(np.random.default_rng(0), 3)
    assert np.array_equal(embed(f, 3).coeffs, f.coeffs)
    with pytest.raises(ContractError):
        embed(f, 2)
    with pytest.raises(ContractError):
        project_average(f, 4)


def test_project_embed_project_is_project():
    rng = np.random.default_rng(1)
    f = _random_function(rng, 6)
    p = project_average(f, 3)
    again = project_average(embed(p, 6), 3)
    assert np.allclose(again.coeffs, p.coeffs, atol=1e-14, rtol=0)


@settings(max_examples=200, deadline=None)
@given(l=st.integers(0, 4), dr=st.integers(0, 3), seed=st.integers(0, 2 ** 32 - 1))
def test_embed_isometry_and_retraction(l, dr, seed):
    rng = np.random.default_rng(seed)
    f = _random_function(rng, l)
    g = embed(f, l + dr)
    assert abs(g.norm() - f.norm()) <= 1e-14 * max(1.0, f.norm())
    back = project_average(g, l)
    assert np.max(np.abs(back.coeffs - f.coeffs)) <= 1e-14


def test_averaging_is_a_contraction():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        r = int(rng.integers(0, 7))
        l = int(rng.integers(0, r + 1))
        f = _random_function(rng, r)
        assert project_average(f, l).norm() <= f.norm() * (1 + 1e-15)


def test_averaging_on_partial_support():
    rng = np.random.default_rng(3)
    s = SupportSet(2, (1, 2))
    f = _random_function(rng, 4, s.refine(4))
    p = project_average(f, 2, s)
    assert p.support == s
    assert np.allclose(project_average(embed(p, 4), 2, s).coeffs, p.coeffs)
    with pytest.raises(ContractError):
        project_average(f, 2, SupportSet(2, (1,)))


def test_density_residual_non_increasing():
    r = 8
    zero = BallIndex(0, r)
    f = sample_function(lambda b: ultra_distance(b, zero), SupportSet.full(r))
    res = [projection_residual(f, l) for l in range(r + 1)]
    assert all(b <= a + 1e-15 for a, b in zip(res, res[1:]))
    assert res[-1] == 0.0
    assert res[0] > 0


def test_norm_chain_for_test_functions():
    rng = np.random.default_rng(4)
    for _ in range(100):
        f = _random_function(rng, int(rng.integers(0, 6)))
        assert f.norm_inf() >= f.norm() - 1e-12 >= f.norm_1() - 2e-12


def test_coefficients_are_read_only():
    f = TestFunction.basis(0, SupportSet.full(2))
    with pytest.raises(ValueError):
        f.coeffs[0] = 2.0
