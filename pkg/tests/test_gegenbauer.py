import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import special

from prodsphere import gegenbauer as gg
from prodsphere.errors import DomainError, UnsupportedDimension

GRID = np.linspace(-1.0, 1.0, 401)


def poch(a, n):
    return math.gamma(a + n) / math.gamma(a)


def chebyshev_closed_form(k, m):
    """Classical cosine expansion of C_k^lam: sum_j (lam)_j (lam)_{k-j}/(j!(k-j)!) cos((k-2j) theta)."""
    lam = (m - 1) / 2
    out = {}
    for j in range(k + 1):
        d = abs(k - 2 * j)
        out[d] = out.get(d, 0.0) + poch(lam, j) * poch(lam, k - j) / (math.factorial(j) * math.factorial(k - j))
    return out


def monomial_closed_form(n, m):
    """t^n = n!/2^n sum_j (lam + n - 2j) / (lam j! (lam)_{n-j+1}) * lam C_{n-2j}^lam."""
    lam = (m - 1) / 2
    return {n - 2 * j: math.factorial(n) / 2 ** n * (lam + n - 2 * j) / (math.factorial(j) * poch(lam, n - j + 1))
            for j in range(n // 2 + 1)}


# --- evaluation -------------------------------------------------------------

@pytest.mark.parametrize("k,m,t,expected", [
    (0, 3, 0.7, 1.0),
    (2, 2, 0.0, -0.5),
    (1, 4, 0.2, 0.6),
])
def test_eval_gegenbauer_examples(k, m, t, expected):
    assert gg.eval_gegenbauer(k, m, t) == pytest.approx(expected, abs=1e-15)


def test_legendre_closed_form():
    assert_allclose(gg.eval_gegenbauer(2, 2, GRID), (3 * GRID ** 2 - 1) / 2, atol=1e-15)


@pytest.mark.parametrize("m", [2, 3, 4, 5, 7])
@pytest.mark.parametrize("k", [0, 1, 2, 5, 17, 60])
def test_eval_matches_scipy(k, m):
    lam = (m - 1) / 2
    expected = special.eval_gegenbauer(k, lam, GRID)
    assert_allclose(gg.eval_gegenbauer(k, m, GRID), expected, rtol=1e-11, atol=1e-11 * gg.value_at_one(k, m))


@pytest.mark.parametrize("k,t,expected", [(0, -0.3, 1.0), (3, -1.0, -1.0), (2, 0.5, 0.25)])
def test_eval_monomial(k, t, expected):
    assert gg.eval_monomial(k, t) == expected


def test_clamping_and_domain_error():
    assert gg.eval_gegenbauer(3, 2, 1.0 + 5e-13) == pytest.approx(1.0)
    assert gg.eval_monomial(2, -1.0 - 5e-13) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        gg.eval_gegenbauer(3, 2, 1.0 + 1e-9)
    with pytest.raises(DomainError):
        gg.eval_monomial(1, -1.5)


def test_dimension_checks():
    with pytest.raises(UnsupportedDimension):
        gg.eval_gegenbauer(1, 1, 0.0)
    with pytest.raises(ValueError):
        gg.check_dim(0)
    with pytest.raises(ValueError):
        gg.check_dim(2.5)
    assert gg.check_dim("inf") == gg.INF


@pytest.mark.parametrize("k,m,expected", [(5, 2, 1.0), (2, 3, 3.0), (0, 7, 1.0)])
def test_value_at_one(k, m, expected):
    assert gg.value_at_one(k, m) == pytest.approx(expected, rel=1e-15)
    assert gg.value_at_one(k, m) == pytest.approx(gg.eval_gegenbauer(k, m, 1.0), rel=1e-13)


def test_value_at_one_binomial():
    for m in range(2, 8):
        for k in range(30):
            assert gg.value_at_one(k, m) == pytest.approx(math.comb(k + m - 2, k), rel=1e-13)


@pytest.mark.parametrize("k,m,t,expected", [(7, 5, 1.0, 1.0), (7, 5, -1.0, -1.0), (2, 2, 0.0, -0.5)])
def test_eval_normalized(k, m, t, expected):
    assert gg.eval_normalized(k, m, t) == pytest.approx(expected, abs=1e-14)


def test_normalized_bounded():
    t = np.linspace(-1, 1, 2001)
    for m in range(2, 7):
        R = gg.basis_table(200, m, t) / np.array([gg.value_at_one(k, m) for k in range(201)])[:, None]
        assert np.max(np.abs(R)) <= 1 + 1e-12
        # |R| = 1 only at the endpoints
        assert np.max(np.abs(R[1:, 1:-1])) < 1.0


@settings(max_examples=60, deadline=None)
@given(k=st.integers(0, 80), m=st.integers(2, 6), t=st.floats(-1, 1))
def test_parity(k, m, t):
    a = gg.eval_gegenbauer(k, m, -t)
    b = (-1) ** k * gg.eval_gegenbauer(k, m, t)
    assert abs(a - b) <= 1e-12 * gg.value_at_one(k, m)


def test_decay_at_large_degree():
    t = np.arange(-0.99, 0.99 + 1e-12, 0.001)
    assert np.max(np.abs(gg.eval_normalized(500, 2, t))) <= 0.12


# --- quadrature -------------------------------------------------------------

def test_one_point_rule():
    x, w = gg.quadrature_rule(2, 1)
    assert_allclose(x, [0.0], atol=1e-16)
    assert_allclose(w, [2.0], rtol=1e-15)


def test_weight_sums():
    assert abs(gg.quadrature_rule(2, 16)[1].sum() - 2.0) <= 1e-13
    assert abs(gg.quadrature_rule(3, 16)[1].sum() - math.pi / 2) <= 1e-12


@pytest.mark.parametrize("m", [2, 3, 4, 6])
@pytest.mark.parametrize("nodes", [1, 2, 5, 12])
def test_rule_exact_on_moments(m, nodes):
    # int t^{2j} (1-t^2)^a dt = B(j + 1/2, a + 1)
    a = (m - 2) / 2
    x, w = gg.quadrature_rule(m, nodes)
    assert np.all(w > 0) and np.all(np.abs(x) < 1)
    for deg in range(2 * nodes):
        expected = 0.0 if deg % 2 else special.beta(deg / 2 + 0.5, a + 1)
        assert np.sum(w * x ** deg) == pytest.approx(expected, abs=1e-13)


@pytest.mark.parametrize("m", [2, 3, 5])
def test_rule_matches_scipy(m):
    x, w = gg.quadrature_rule(m, 30)
    xr, wr = special.roots_gegenbauer(30, (m - 1) / 2)
    assert_allclose(x, xr, atol=1e-14)
    assert_allclose(w, wr, rtol=1e-12)


def test_surface_area():
    assert gg.surface_area(2) == pytest.approx(2 * math.pi)
    assert gg.surface_area(3) == pytest.approx(4 * math.pi)
    assert gg.surface_area(1) == pytest.approx(2.0)


def test_orthogonality_examples():
    assert gg.orthogonality_check(0, 0, 2) == pytest.approx((2.0, 2.0), abs=1e-14)
    lhs, rhs = gg.orthogonality_check(0, 1, 2)
    assert abs(lhs) < 1e-15 and rhs == 0.0
    lhs, rhs = gg.orthogonality_check(3, 3, 3)
    assert abs(lhs - rhs) <= 1e-10


@pytest.mark.parametrize("m", [2, 3, 4])
def test_orthogonality_closed_form_matches_scipy_norm(m):
    # standard C_n^lam norm: pi 2^{1-2lam} Gamma(n+2lam) / (n! (n+lam) Gamma(lam)^2)
    lam = (m - 1) / 2
    for n in range(10):
        std = math.pi * 2 ** (1 - 2 * lam) * math.gamma(n + 2 * lam) / (
            math.factorial(n) * (n + lam) * math.gamma(lam) ** 2)
        assert gg.norm_squared(n, m) == pytest.approx(std, rel=1e-13)


# --- expansions -------------------------------------------------------------

def test_chebyshev_examples():
    assert gg.chebyshev_expansion(1, 2).as_dict() == pytest.approx({1: 1.0})
    assert gg.chebyshev_expansion(2, 2).as_dict() == pytest.approx({2: 0.75, 0: 0.25})
    assert gg.chebyshev_expansion(0, 9).as_dict() == pytest.approx({0: 1.0})


@pytest.mark.parametrize("m", [2, 3, 4])
@pytest.mark.parametrize("k", [0, 1, 4, 9, 20])
def test_chebyshev_against_closed_form(k, m):
    got = gg.chebyshev_expansion(k, m)
    want = chebyshev_closed_form(k, m)
    assert sorted(got.degrees) == sorted(want)
    for d, v in want.items():
        assert got[d] == pytest.approx(v, rel=1e-12)
        assert got[d] > 0
    recon = got.evaluate(GRID)
    assert np.max(np.abs(recon - gg.eval_gegenbauer(k, m, GRID))) <= 1e-12 * gg.value_at_one(k, m)


def test_monomial_examples():
    assert gg.monomial_decomposition(1, 2).as_dict() == pytest.approx({1: 1.0})
    assert gg.monomial_decomposition(2, 2).as_dict() == pytest.approx({2: 2 / 3, 0: 1 / 3})
    assert gg.monomial_decomposition(0, 4).as_dict() == pytest.approx({0: 1.0})


@pytest.mark.parametrize("m", [2, 3, 4, 7])
@pytest.mark.parametrize("k", [0, 3, 8, 15, 20])
def test_monomial_against_closed_form(k, m):
    got = gg.monomial_decomposition(k, m)
    for d, v in monomial_closed_form(k, m).items():
        assert got[d] == pytest.approx(v, rel=1e-11)
        assert got[d] > 0
    assert np.max(np.abs(got.evaluate(GRID) - GRID ** k)) <= 1e-12


def test_monomial_coefficients_not_integers():
    # positivity holds, integrality does not
    values = gg.monomial_decomposition(2, 2).values
    assert np.all(values > 0)
    assert not np.allclose(values, np.round(values))


def test_linearization_examples():
    assert gg.linearization(0, 4, 3, 3).as_dict() == pytest.approx({4: 1.0, 2: 0.0, 0: 0.0}, abs=1e-13)
    lin = gg.linearization(1, 1, 2, 2)
    assert lin.as_dict() == pytest.approx(gg.monomial_decomposition(2, 2).as_dict(), abs=1e-14)
    lin = gg.linearization(2, 3, 2, 3)
    assert lin.basis_dim == 2
    assert lin.degrees == [5, 3, 1]
    assert np.all(lin.values >= -1e-12)
    prod = gg.eval_gegenbauer(2, 2, GRID) * gg.eval_gegenbauer(3, 3, GRID)
    assert np.max(np.abs(lin.evaluate(GRID) - prod)) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(k=st.integers(0, 10), l=st.integers(0, 10), m=st.integers(2, 5), M=st.integers(2, 5))
def test_linearization_property(k, l, m, M):
    lin = gg.linearization(k, l, m, M)
    assert lin.basis_dim == min(m, M)
    assert np.all(lin.values >= -1e-12)
    prod = gg.eval_gegenbauer(k, m, GRID) * gg.eval_gegenbauer(l, M, GRID)
    assert np.max(np.abs(lin.evaluate(GRID) - prod)) <= 1e-10


def test_gegenbauer_gram_is_psd():
    # addition theorem consequence: [P_k(x_mu . x_nu)] is positive semidefinite
    rng = np.random.default_rng(3)
    for m in (2, 3, 4):
        for k in (0, 1, 2, 5, 9):
            x = rng.standard_normal((25, m + 1))
            x /= np.linalg.norm(x, axis=1, keepdims=True)
            G = gg.eval_gegenbauer(k, m, np.clip(x @ x.T, -1, 1))
            assert np.linalg.eigvalsh(G)[0] >= -1e-8 * np.trace(G)
