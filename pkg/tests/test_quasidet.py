import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockqd.errors import DimensionError, SingularMinor
from blockqd.quasidet import (
    check_homological,
    check_jacobi_identity,
    flatten,
    homological_sides,
    inverse_column,
    jacobi_sides,
    quasidet,
    solve_left,
)
from helpers import boosted_grid, cofactor_det

seeds = st.integers(0, 2**32 - 1)


class TestExamples:
    def test_single_entry(self):
        assert quasidet([[7.0]], 0, 0).tolist() == [[7.0]]

    def test_single_block_is_returned(self):
        b = np.array([[1.0, 2], [3, 4]])
        assert np.array_equal(quasidet(b[None, None], 0, 0), b)

    def test_two_by_two_corner(self):
        assert quasidet([[2.0, 1], [4, 5]], 1, 1)[0, 0] == pytest.approx(3.0)

    def test_two_by_two_off_diagonal(self):
        # |A|_{0,1} = a01 - a00 a10^{-1} a11 = 1 - 2 * 5 / 4
        assert quasidet([[2.0, 1], [4, 5]], 0, 1)[0, 0] == pytest.approx(-1.5)

    def test_three_by_three_corner(self):
        a = [[1.0, 2, 3], [4, 5, 6], [7, 8, 10]]
        assert quasidet(a, 2, 2)[0, 0] == pytest.approx(1.0, abs=1e-13)

    def test_block_schur_complement(self):
        a = np.eye(4)
        a[2:, :2] = [[1.0, 2], [3, 4]]
        a[:2, 2:] = [[1.0, 0], [0, 1]]
        g = a.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3)
        expected = np.eye(2) - np.array([[1.0, 2], [3, 4]])
        assert np.allclose(quasidet(g, 1, 1), expected)

    def test_singular_minor(self):
        with pytest.raises(SingularMinor):
            quasidet([[0.0, 1], [1, 1]], 1, 1)

    def test_non_square(self):
        with pytest.raises(DimensionError):
            quasidet(np.ones((2, 3)), 0, 0)

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            quasidet(np.eye(2), 2, 0)

    def test_flatten_layout(self):
        g = np.arange(16.0).reshape(2, 2, 2, 2)
        f = flatten(g)
        assert np.array_equal(f[:2, 2:], g[0, 1])
        assert np.array_equal(f[2:, :2], g[1, 0])


class TestScalarOracle:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 5), seeds, st.data())
    def test_determinant_ratio(self, k, seed, data):
        # for commuting entries |A|_{ij} = (-1)^{i+j} det A / det A^{ij}
        rng = np.random.default_rng(seed)
        a = rng.integers(-4, 5, (k, k)).astype(float)
        i = data.draw(st.integers(0, k - 1))
        j = data.draw(st.integers(0, k - 1))
        minor = np.delete(np.delete(a, i, axis=0), j, axis=1)
        d_minor = cofactor_det(minor)
        if abs(d_minor) < 0.5:
            return
        expected = (-1) ** (i + j) * cofactor_det(a) / d_minor
        got = quasidet(a, i, j)[0, 0]
        assert got == pytest.approx(expected, rel=1e-10, abs=1e-10 * max(1.0, abs(expected)))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 4), st.integers(1, 3), seeds)
    def test_invariant_under_reordering_other_rows_and_columns(self, k, p, seed):
        rng = np.random.default_rng(seed)
        g = boosted_grid(rng, k, p)
        base = quasidet(g, k - 1, k - 1)
        perm = list(rng.permutation(k - 1)) + [k - 1]
        cperm = list(rng.permutation(k - 1)) + [k - 1]
        assert np.allclose(quasidet(g[np.ix_(perm, cperm)], k - 1, k - 1), base, atol=1e-11)


class TestJacobi:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 6), seeds)
    def test_scalar_grids(self, k, seed):
        g = boosted_grid(np.random.default_rng(seed), k, 1)
        assert check_jacobi_identity(g) <= 1e-12 * np.abs(g).sum()

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 5), st.integers(2, 3), seeds)
    def test_block_grids(self, k, p, seed):
        g = boosted_grid(np.random.default_rng(seed), k, p)
        lhs, rhs = jacobi_sides(g)
        scale = np.linalg.norm(lhs) + np.linalg.norm(rhs)
        assert np.linalg.norm(lhs - rhs) <= 1e-12 * scale

    def test_order_two_grid(self):
        # with A empty the identity reads i - h f^{-1} g on both sides
        g = boosted_grid(np.random.default_rng(1), 2, 2)
        lhs, rhs = jacobi_sides(g)
        f_inv = np.linalg.inv(g[0, 0])
        assert np.allclose(lhs, g[1, 1] - g[1, 0] @ f_inv @ g[0, 1])
        assert np.allclose(lhs, rhs, atol=1e-13)

    def test_vanishing_b_and_h(self):
        # zero blocks B (above f) and h (left of i) leave the identity intact
        rng = np.random.default_rng(7)
        g = boosted_grid(rng, 4, 2)
        g[:2, 2] = 0.0
        g[3, 2] = 0.0
        assert check_jacobi_identity(g) <= 1e-12
        lhs, _ = jacobi_sides(g)
        first = quasidet(g[np.ix_([0, 1, 3], [0, 1, 3])], 2, 2)
        assert np.allclose(lhs, first, atol=1e-13)

    def test_order_one_rejected(self):
        with pytest.raises(DimensionError):
            jacobi_sides(np.eye(1))


class TestHomological:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 5), st.integers(1, 3), seeds)
    def test_random_grids(self, k, p, seed):
        g = boosted_grid(np.random.default_rng(seed), k, p)
        row, col = check_homological(g)
        assert row <= 1e-12 * max(1.0, np.abs(g).max())
        assert col <= 1e-12 * max(1.0, np.abs(g).max())

    def test_scalar_hand_example(self):
        # corner 3 - 1/2 = 2.5; |A|_{1,0} = 1 - 3 * 2 = -5; modified grid gives 0 - 1 * 2 = -2
        a = np.array([[2.0, 1], [1, 3]])
        (l1, r1), _ = homological_sides(a)
        assert l1[0, 0] == pytest.approx(-5.0)
        assert r1[0, 0] == pytest.approx(-5.0)
        assert check_homological(a) == pytest.approx((0.0, 0.0), abs=1e-14)


    def test_identity_grid_has_singular_off_diagonal_minors(self):
        # moving the box off the diagonal of I leaves a minor with a zero row
        g = np.zeros((3, 3, 2, 2))
        for i in range(3):
            g[i, i] = np.eye(2)
        with pytest.raises(SingularMinor):
            check_homological(g)


class TestSolve:
    def test_identity(self):
        g = np.zeros((2, 2, 2, 2))
        g[0, 0] = g[1, 1] = np.eye(2)
        rhs = [np.array([[1.0, 2], [3, 4]]), np.array([[5.0, 6], [7, 8]])]
        x = solve_left(g, rhs)
        assert all(np.allclose(a, b) for a, b in zip(x, rhs))

    def test_diagonal_system(self):
        x = solve_left(np.diag([2.0, 4.0]), [[[2.0]], [[8.0]]])
        assert [float(v[0, 0]) for v in x] == pytest.approx([1.0, 2.0])

    def test_diagonal_scalar(self):
        x = solve_left(np.diag([2.0, 4.0]), [[[1.0]], [[1.0]]])
        assert [float(v[0, 0]) for v in x] == pytest.approx([0.5, 0.25])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 5), st.integers(1, 3), st.integers(1, 3), seeds)
    def test_agrees_with_dense_solve(self, k, p, cols, seed):
        rng = np.random.default_rng(seed)
        g = boosted_grid(rng, k, p)
        rhs = [rng.standard_normal((p, cols)) for _ in range(k)]
        x = np.concatenate(solve_left(g, rhs))
        ref = np.linalg.solve(flatten(g), np.concatenate(rhs))
        assert np.linalg.norm(x - ref) <= 1e-10 * np.linalg.norm(ref)
        assert np.linalg.norm(flatten(g) @ x - np.concatenate(rhs)) <= 1e-12 * np.linalg.norm(flatten(g)) * np.linalg.norm(x)

    def test_inverse_columns_reassemble_inverse(self):
        g = boosted_grid(np.random.default_rng(3), 3, 2)
        inv = np.block([[inverse_column(g, j)[i] for j in range(3)] for i in range(3)])
        assert np.allclose(inv @ flatten(g), np.eye(6), atol=1e-13)

    def test_off_diagonal_blocks_are_inverse_quasidets(self):
        g = boosted_grid(np.random.default_rng(4), 3, 2)
        col = inverse_column(g, 1)
        for i in range(3):
            assert np.allclose(col[i], np.linalg.inv(quasidet(g, 1, i)), atol=1e-12)

    def test_row_count_checked(self):
        with pytest.raises(DimensionError):
            solve_left(np.eye(2), [[[1.0]]])


def test_exhaustive_small_integer_grids():
    # every 2x2 grid with entries in {-1, 1, 2} and a non-zero (1, 1) entry
    for vals in itertools.product([-1.0, 1.0, 2.0], repeat=4):
        a = np.array(vals).reshape(2, 2)
        assert quasidet(a, 1, 1)[0, 0] == pytest.approx(np.linalg.det(a) / a[0, 0])
