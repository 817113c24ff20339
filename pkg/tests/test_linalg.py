import numpy as np
import pytest

from branchgroups.linalg import FpSubspace, full_space, matrix_rank, rref, zero_subspace


def test_rref_canonical():
    rows, pivots = rref(np.array([[2, 0, 2], [1, 1, 0]]), 3)
    assert pivots == [0, 1]
    assert np.array_equal(rows[:, :2], np.eye(2))


def test_rref_dependent_rows():
    rows, pivots = rref(np.array([[1, 2], [2, 4]]), 5)
    assert rows.shape == (1, 2) and pivots == [0]


def test_subspace_membership():
    s = FpSubspace(3, 3, [[1, 1, 0], [0, 0, 1]])
    assert s.dim == 2
    assert s.contains_vector([2, 2, 1])
    assert not s.contains_vector([1, 0, 0])


def test_subspace_canonical_equality():
    a = FpSubspace(5, 3, [[1, 2, 3], [0, 1, 4]])
    b = FpSubspace(5, 3, [[2, 4, 1], [1, 3, 2]])  # same row space
    assert a == b and hash(a) == hash(b)


def test_sum_and_containment():
    a = FpSubspace(3, 4, [[1, 0, 0, 0]])
    b = FpSubspace(3, 4, [[0, 1, 0, 0]])
    s = a.sum_with(b)
    assert s.dim == 2 and s.contains(a) and s.contains(b)
    assert not a.contains(s)


def test_zero_and_full():
    z = zero_subspace(3, 4)
    f = full_space(3, 4)
    assert z.dim == 0 and f.dim == 4
    assert f.contains(z)
    assert matrix_rank(np.eye(4), 3) == 4


def test_reduce_is_idempotent():
    s = FpSubspace(7, 5, [[1, 2, 3, 4, 5], [0, 1, 1, 1, 1]])
    v = np.array([3, 4, 5, 6, 0])
    r = s.reduce(v)
    assert np.array_equal(s.reduce(r), r)
    assert s.contains_vector((v - r) % 7)


def test_basis_digits():
    s = FpSubspace(3, 3, [[1, 2, 0]])
    assert s.basis_digits() == ["120"]
