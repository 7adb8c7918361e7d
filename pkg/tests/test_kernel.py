import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prodsphere import gegenbauer as gg
from prodsphere.errors import SchemeError, UnsupportedDimension
from prodsphere.kernel import (QUADRANTS, GeometricScheme, ParameterizedScheme, SparseScheme,
                               SupportMask, bounded_mask, eval_kernel, geometric_closed_form,
                               index_quadrants, project_coefficients, restrict_diagonal)

GRID = np.linspace(-1.0, 1.0, 21)
TT, SS = np.meshgrid(GRID, GRID, indexing="ij")


def generating_function(m, r, t):
    # sum_k r^k C_k^lam(t) = (1 - 2 r t + r^2)^(-lam)
    return (1 - 2 * r * t + r * r) ** (-(m - 1) / 2)


# --- schemes ----------------------------------------------------------------

def test_sparse_validation():
    with pytest.raises(SchemeError):
        SparseScheme(2, 2, ((0, 0, 0.0),))
    with pytest.raises(SchemeError):
        SparseScheme(2, 2, ((0, 0, -1.0),))
    with pytest.raises(SchemeError):
        SparseScheme(2, 2, ((0, 0, 1.0), (0, 0, 2.0)))
    with pytest.raises(SchemeError):
        SparseScheme(2, 2, ((-1, 0, 1.0),))
    with pytest.raises(UnsupportedDimension):
        SparseScheme(1, 2, ((0, 0, 1.0),))


def test_sparse_accessors():
    s = SparseScheme(2, 3, ((2, 1, 0.5), (0, 0, 1.0)))
    assert s.entries == ((0, 0, 1.0), (2, 1, 0.5))
    assert s.support == {(0, 0), (2, 1)}
    assert (s.kmax, s.lmax) == (2, 1)
    assert s.coefficient(2, 1) == 0.5 and s.coefficient(1, 1) == 0.0
    assert s.total_mass() == pytest.approx(1.0 + 0.5 * 1 * 2)


def test_geometric_validation():
    with pytest.raises(SchemeError):
        GeometricScheme(2, 2, r=1.0)
    with pytest.raises(SchemeError):
        GeometricScheme(2, 2, q=0.0)
    with pytest.raises(SchemeError):
        GeometricScheme(2, 2, c=0.0)


def test_parameterized_without_tail_bound():
    class Bare(ParameterizedScheme):
        m = 2
        M = 2
        mask = SupportMask.all()

        def _raw(self, k, l):
            return 1.0 / (1.0 + k + l) ** 4

    with pytest.raises(SchemeError):
        eval_kernel(Bare(), 0.1, 0.2)


# --- evaluation -------------------------------------------------------------

def test_sparse_examples():
    s = SparseScheme(2, 2, ((0, 0, 1.0),))
    assert eval_kernel(s, 0.3, -0.7) == 1.0
    s = SparseScheme(2, 2, ((1, 1, 2.0),))
    assert eval_kernel(s, 0.5, 0.5) == pytest.approx(0.5)
    assert eval_kernel(s, np.array([0.5, -0.5]), 0.5) == pytest.approx([0.5, -0.5])


@pytest.mark.parametrize("m,M", [(2, 2), (2, 3), (3, 3), (4, 2)])
def test_geometric_matches_generating_function(m, M):
    s = GeometricScheme(m, M, c=1.0, r=0.5, q=0.5)
    got = eval_kernel(s, TT, SS, tol=1e-12)
    want = generating_function(m, 0.5, TT) * generating_function(M, 0.5, SS)
    assert np.max(np.abs(got - want)) <= 1e-8


def test_geometric_example_value():
    s = GeometricScheme(2, 2)
    assert eval_kernel(s, 0.0, 0.0, tol=1e-12) == pytest.approx(1 / 1.25, abs=1e-9)


def test_geometric_infinite_dimension():
    s = GeometricScheme(gg.INF, 2, r=0.4, q=0.3)
    got = eval_kernel(s, TT, SS, tol=1e-12)
    want = 1 / (1 - 0.4 * TT) * generating_function(2, 0.3, SS)
    assert np.max(np.abs(got - want)) <= 1e-9


@pytest.mark.parametrize("mask", [SupportMask.even_sum(), SupportMask.odd_sum(),
                                  SupportMask.quadrant_list([(0, 0), (1, 0), (1, 1)])])
def test_masked_geometric_against_brute_force(mask):
    s = GeometricScheme(3, 2, r=0.4, q=0.6, mask=mask)
    got = eval_kernel(s, TT, SS, tol=1e-12)
    # brute force sum over a large rectangle
    k = np.arange(120)
    Pk = gg.basis_table(119, 3, TT)
    Pl = gg.basis_table(119, 2, SS)
    A = np.where(mask.contains(k[:, None], k[None, :]), 0.4 ** k[:, None] * 0.6 ** k[None, :], 0.0)
    want = np.einsum("kij,kl,lij->ij", Pk, A, Pl)
    assert np.max(np.abs(got - want)) <= 1e-8
    assert np.max(np.abs(geometric_closed_form(s, TT, SS) - want)) <= 1e-10


def test_tail_bound_dominates_true_tail():
    s = GeometricScheme(3, 2, c=2.0, r=0.6, q=0.3)
    total = s.total_mass()
    for K, L in [(2, 2), (5, 1), (10, 10), (20, 4)]:
        A = s.coefficient_matrix(K, L)
        vk = np.array([gg.value_at_one(k, 3) for k in range(K + 1)])
        vl = np.array([gg.value_at_one(l, 2) for l in range(L + 1)])
        head = vk @ A @ vl
        assert total - head <= s.tail_bound(K, L) * (1 + 1e-12)


def test_truncation_respects_tolerance():
    s = GeometricScheme(3, 3, r=0.5, q=0.2)
    K, L = s.truncation(1e-10)
    assert s.tail_bound(K, L) <= 1e-10
    assert K > L


def test_total_mass():
    assert GeometricScheme(2, 2).total_mass() == pytest.approx(4.0)
    s = GeometricScheme(2, 2, mask=SupportMask.even_sum())
    assert s.total_mass() == pytest.approx(0.5 * (4.0 + 4 / 9))
    bm = GeometricScheme(2, 2, mask=bounded_mask(k_max={(0, 0): 0}))
    # drop k >= 2 even, l even terms from the full mass: 4 - (sum_{k>=2 even} 0.5^k)(sum_{l even} 0.5^l)
    dropped = (4 / 3 - 1) * (4 / 3)
    assert bm.total_mass() == pytest.approx(4.0 - dropped, abs=1e-12)


# --- quadrants --------------------------------------------------------------

def test_index_quadrants_sparse():
    s = SparseScheme(2, 2, ((0, 0, 1), (1, 2, 1), (3, 3, 1), (2, 4, 1)))
    iq = index_quadrants(s)
    assert iq[(0, 0)].members == {(0, 0), (2, 4)}
    assert iq[(1, 0)].members == {(1, 2)}
    assert iq[(0, 1)].members == set()
    assert iq[(1, 1)].members == {(3, 3)}
    assert not iq.even_sum_infinite and not iq.odd_sum_infinite


@settings(max_examples=50, deadline=None)
@given(st.sets(st.tuples(st.integers(0, 30), st.integers(0, 30)), min_size=1, max_size=25))
def test_quadrants_partition_support(support):
    s = SparseScheme(2, 2, tuple((k, l, 1.0) for k, l in support))
    iq = index_quadrants(s)
    union = set()
    for q in QUADRANTS:
        members = iq[q].members
        assert all((k % 2, l % 2) == q for k, l in members)
        assert not (union & members)
        union |= members
    assert union == support


def test_index_quadrants_parameterized():
    iq = index_quadrants(GeometricScheme(2, 2, mask=SupportMask.odd_sum()))
    assert iq.odd_sum_infinite and not iq.even_sum_infinite
    assert iq.joint_unbounded((0, 1)) and not iq.joint_unbounded((0, 0))


def test_bounded_mask_flags_and_members():
    mask = bounded_mask(k_max={(0, 0): 4}, l_max={(1, 1): 1})
    flags = mask.declared_flags()
    assert flags[(0, 0)].l_unbounded and not flags[(0, 0)].k_unbounded
    assert flags[(1, 1)].k_unbounded and not flags[(1, 1)].l_unbounded
    assert flags[(1, 0)].joint_unbounded
    assert mask.contains(4, 100) and not mask.contains(6, 0)
    assert mask.contains(101, 1) and not mask.contains(1, 3)
    index_quadrants(GeometricScheme(2, 2, mask=mask))  # spot-check passes


def test_custom_mask_spot_check_rejects_false_flags():
    full = {"k_unbounded": True, "l_unbounded": True, "joint_unbounded": True}
    mask = SupportMask.custom(lambda k, l: (k + l) % 2 == 0,
                              {q: full for q in QUADRANTS})
    with pytest.raises(SchemeError):
        index_quadrants(GeometricScheme(2, 2, mask=mask))
    with pytest.raises(SchemeError):
        SupportMask.custom(lambda k, l: True, {(0, 0): full})


# --- projection and diagonal restriction -----------------------------------

def test_projection_recovers_geometric():
    s = GeometricScheme(2, 3, r=0.5, q=0.5)
    A = project_coefficients(lambda t, u: generating_function(2, 0.5, t) * generating_function(3, 0.5, u),
                             2, 3, 6, 6)
    want = 0.5 ** np.add.outer(np.arange(7), np.arange(7))
    assert np.max(np.abs(A - want)) <= 1e-9
    assert np.allclose(A, s.coefficient_matrix(6, 6), atol=1e-9)


def test_projection_scalar_callable():
    A = project_coefficients(lambda t, u: math.cos(t) + t * u, 2, 2, 3, 3)
    assert A[1, 1] == pytest.approx(1.0, abs=1e-12)
    assert A[3, 1] == pytest.approx(0.0, abs=1e-12)


def test_projection_of_monomial_product():
    A = project_coefficients(lambda t, u: t ** 2 * u, 3, 2, 4, 4)
    mono = gg.monomial_decomposition(2, 3)
    assert A[2, 1] == pytest.approx(mono[2], abs=1e-12)
    assert A[0, 1] == pytest.approx(mono[0], abs=1e-12)
    A[[2, 0], 1] = 0
    assert np.max(np.abs(A)) <= 1e-12


@pytest.mark.parametrize("m,M", [(2, 2), (2, 3), (3, 5), (gg.INF, 3), (2, gg.INF)])
def test_restrict_diagonal(m, M):
    s = SparseScheme(m, M, ((0, 0, 1.0), (2, 1, 0.5), (3, 3, 0.25), (1, 4, 2.0)))
    b = restrict_diagonal(s)
    assert b.basis_dim == min(m, M)
    assert np.all(b.values >= -1e-12)
    t = np.linspace(-1, 1, 101)
    assert np.max(np.abs(b.evaluate(t) - eval_kernel(s, t, t))) <= 1e-10
