import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockqd.eigs import balance, hessenberg, small_eigenvalues, smallest_singular_value


def _sorted(v):
    return np.array(sorted(np.asarray(v, dtype=complex), key=lambda z: (round(z.real, 8), z.imag)))


def test_identity():
    assert np.allclose(small_eigenvalues(np.eye(2)), [1.0, 1.0])


def test_rotation_is_conjugate_pair():
    vals = small_eigenvalues(np.array([[0.0, -1.0], [1.0, 0.0]]))
    assert np.allclose(_sorted(vals), [-1j, 1j])


def test_two_by_two_real():
    vals = small_eigenvalues(np.array([[3.0, 1.0], [6.0, 3.0]]))
    assert np.allclose(np.sort(vals.real), [3 - np.sqrt(6), 3 + np.sqrt(6)], atol=1e-14)


def test_scalar_block():
    assert small_eigenvalues([[5.0]]).tolist() == [5.0]


def test_triangular_three_by_three():
    b = np.array([[1.0, 5, 7], [0, 2, 3], [0, 0, 4]])
    assert np.allclose(np.sort(small_eigenvalues(b).real), [1, 2, 4])


def test_companion_matrix():
    # x^3 - 6x^2 + 11x - 6 = (x-1)(x-2)(x-3)
    b = np.array([[6.0, -11, 6], [1, 0, 0], [0, 1, 0]])
    assert np.allclose(np.sort(small_eigenvalues(b).real), [1, 2, 3], atol=1e-12)


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        small_eigenvalues([[np.inf, 0.0], [0.0, 1.0]])


def test_non_square_rejected():
    with pytest.raises(ValueError):
        small_eigenvalues(np.ones((2, 3)))


def test_hessenberg_form_and_similarity():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((6, 6))
    h = hessenberg(a)
    assert np.allclose(np.tril(h, -2), 0.0)
    assert np.trace(h) == pytest.approx(np.trace(a))
    assert np.linalg.norm(h) == pytest.approx(np.linalg.norm(a))


def test_balance_preserves_spectrum():
    a = np.array([[1.0, 1e4, 0], [1e-4, 2, 1e3], [0, 1e-3, 3]])
    assert np.allclose(_sorted(np.linalg.eigvals(balance(a))), _sorted(np.linalg.eigvals(a)))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_agrees_with_reference_solver(p, seed):
    b = np.random.default_rng(seed).standard_normal((p, p))
    got = small_eigenvalues(b)
    ref = np.linalg.eigvals(b)
    # match each computed value to its nearest reference value
    for lam in got:
        assert np.min(np.abs(ref - lam)) <= 1e-10 * max(1.0, np.linalg.norm(b))
    assert len(got) == p
    assert np.sum(got).real == pytest.approx(np.trace(b), abs=1e-10 * max(1.0, np.linalg.norm(b)))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_complex_values_come_in_conjugate_pairs(p, seed):
    vals = small_eigenvalues(np.random.default_rng(seed).standard_normal((p, p)))
    assert np.allclose(_sorted(vals), _sorted(np.conj(vals)), atol=1e-12)


def test_certificate():
    b = np.array([[2.0, 1.0], [0.0, 3.0]])
    assert smallest_singular_value(b, 2.0) == pytest.approx(0.0, abs=1e-15)
    assert smallest_singular_value(b, 10.0) > 1.0
