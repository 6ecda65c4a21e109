from itertools import combinations, permutations, product

import numpy as np
import pytest
from conftest import field_matrix
from hypothesis import given
from hypothesis import strategies as st

from pir_squeeze import linalg as la
from pir_squeeze.errors import (DimensionMismatch, DuplicateNodes, ModulusMismatch, NoSolution,
                                SingularMatrix)


def leibniz_det(a, q):
    n = a.shape[0]
    total = 0
    for perm in permutations(range(n)):
        inv = sum(1 for i, j in combinations(range(n), 2) if perm[i] > perm[j])
        term = 1
        for i, j in enumerate(perm):
            term = term * int(a[i, j]) % q
        total += -term if inv % 2 else term
    return total % q


def rowspace_size(a, q):
    """Count distinct vectors in the row space by enumeration (tiny cases only)."""
    seen = set()
    for coeffs in product(range(q), repeat=a.shape[0]):
        seen.add(tuple((np.array(coeffs) @ a) % q))
    return len(seen)


def test_as_matrix_reduces_negatives_and_big_ints():
    m = la.as_matrix([[-1, 2**70], [7, 0]], 7)
    assert m.dtype == np.int64
    assert m.tolist() == [[6, pow(2, 70, 7)], [0, 0]]


@given(field_matrix(max_rows=4, max_cols=4, primes=(2, 3, 5)))
def test_rank_matches_rowspace_count(mq):
    a, q = mq
    assert q ** la.rank(a, q) == rowspace_size(a, q)


@given(field_matrix())
def test_rref_is_canonical(mq):
    a, q = mq
    m, piv = la.rref(a, q)
    assert len(piv) == la.rank(a, q)
    for i, c in enumerate(piv):
        assert m[i, c] == 1
        assert np.count_nonzero(m[:, c]) == 1
        assert not m[i, :c].any()
    assert not m[len(piv):].any()
    # same row space, and rref of a row-shuffled copy is identical
    perm = np.random.default_rng(0).permutation(a.shape[0])
    assert np.array_equal(la.rref(a[perm], q)[0], m)
    assert la.rank(np.vstack([a, m]), q) == len(piv)


@given(field_matrix(max_rows=5, max_cols=5), st.integers(1, 5))
def test_det_matches_leibniz(mq, n):
    a, q = mq
    a = np.resize(a, (n, n)) % q
    assert la.det(a, q) == leibniz_det(a, q)


@given(field_matrix(max_rows=5, max_cols=5))
def test_det_multiplicative(mq):
    a, q = mq
    n = min(a.shape)
    a = a[:n, :n]
    b = np.random.default_rng(n).integers(0, q, size=(n, n))
    assert la.det(la.matmul(a, b, q), q) == la.det(a, q) * la.det(b, q) % q


@given(field_matrix(max_rows=6, max_cols=6))
def test_inverse(mq):
    a, q = mq
    n = min(a.shape)
    a = a[:n, :n]
    if la.rank(a, q) < n:
        with pytest.raises(SingularMatrix):
            la.inv(a, q)
    else:
        assert np.array_equal(la.matmul(a, la.inv(a, q), q), la.identity(n))


@given(field_matrix(max_rows=6, max_cols=6))
def test_solve_and_kernels(mq):
    a, q = mq
    rng = np.random.default_rng(a.size)
    x0 = rng.integers(0, q, size=a.shape[1])
    b = la.matmul(a, x0.reshape(-1, 1), q)[:, 0]
    x = la.solve(a, b, q)
    assert np.array_equal(la.matmul(a, x.reshape(-1, 1), q)[:, 0], b)
    ns = la.null_space(a, q)
    assert ns.shape[0] == a.shape[1] - la.rank(a, q)
    if ns.shape[0]:
        assert not la.matmul(a, ns.T, q).any()
        assert la.rank(ns, q) == ns.shape[0]
    lns = la.left_null_space(a, q)
    if lns.shape[0]:
        assert not la.matmul(lns, a, q).any()


def test_solve_inconsistent():
    with pytest.raises(NoSolution):
        la.solve(np.array([[1, 1], [2, 2]]), np.array([1, 0]), 5)
    with pytest.raises(DimensionMismatch):
        la.solve(np.eye(2, dtype=np.int64), np.array([1, 2, 3]), 5)


def test_vandermonde():
    v = la.vandermonde([0, 1, 2], 3, 3)
    assert v.tolist() == [[1, 1, 1], [0, 1, 2], [0, 1, 1]]
    with pytest.raises(DuplicateNodes):
        la.vandermonde([1, 8], 2, 7)
    with pytest.raises(DimensionMismatch):
        la.vandermonde([1, 2], 3, 7)


@given(st.sampled_from([5, 7, 11, 13]), st.integers(1, 5))
def test_vandermonde_square_is_invertible(q, n):
    nodes = np.random.default_rng(n * q).choice(q, size=n, replace=False)
    assert la.det(la.vandermonde(nodes, n, q), q) != 0


def test_matmul_large_modulus_exact():
    q = 2_147_483_647
    a = np.full((3, 50), q - 1, dtype=np.int64)
    b = np.full((50, 2), q - 1, dtype=np.int64)
    assert (la.matmul(a, b, q) == 50 % q).all()
    with pytest.raises(DimensionMismatch):
        la.matmul(a, a, q)


def test_mds_checks_agree_small():
    g = np.array([[1, 0, 1, 1], [0, 1, 1, 2]])
    assert la.is_col_mds(g, 3, "subsquare") and la.is_col_mds(g, 3, "brute")
    bad = np.array([[1, 0, 1, 1], [0, 1, 1, 1]])
    assert not la.is_col_mds(bad, 3, "subsquare") and not la.is_col_mds(bad, 3, "brute")
    with pytest.raises(ValueError):
        la.is_col_mds(np.array([[1, 1], [0, 1]]), 3, "subsquare")


@given(st.sampled_from([2, 3, 5, 7]), st.integers(2, 7), st.data())
def test_subsquare_equals_bruteforce(q, n, data):
    k = data.draw(st.integers(1, n - 1))
    seed = data.draw(st.integers(0, 2**32 - 1))
    a = np.random.default_rng(seed).integers(0, q, size=(k, n - k))
    g = np.hstack([la.identity(k), a])
    assert la.is_col_mds(g, q, "subsquare") == la.is_col_mds_bruteforce(g, q)


def test_row_mds():
    h = np.array([[1, 1], [1, 2], [1, 0], [0, 1]])
    assert la.is_row_mds(h, 2, 3)
    assert not la.is_row_mds(np.array([[1, 1], [2, 2], [1, 0]]), 2, 3)


@given(field_matrix(max_rows=4, max_cols=5), field_matrix(max_rows=4, max_cols=5))
def test_subspace_dimension_formula(m1, m2):
    a, q = m1
    b = np.random.default_rng(a.size).integers(0, q, size=(m2[0].shape[0], a.shape[1]))
    u, w = la.Subspace.span(a, q), la.Subspace.span(b, q)
    cap, tot = u.intersect(w), u.sum(w)
    assert u.dim + w.dim == cap.dim + tot.dim
    assert u.contains(cap.basis) and w.contains(cap.basis) if cap.dim else True
    assert tot.contains(a) and tot.contains(b)
    assert la.subspace_ops(u, w, "intersect") == cap
    assert u.intersect(u) == u and hash(u.sum(u)) == hash(u)


def test_subspace_errors():
    u = la.Subspace.span([[1, 0, 0]], 5)
    with pytest.raises(ModulusMismatch):
        u.sum(la.Subspace.span([[1, 0, 0]], 7))
    with pytest.raises(DimensionMismatch):
        u.intersect(la.Subspace.span([[1, 0]], 5))
    assert u.intersect(la.Subspace.zero(3, 5)).dim == 0
    with pytest.raises(ValueError):
        la.subspace_ops(u, u, "xor")
