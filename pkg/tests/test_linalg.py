import itertools

import numpy as np
import pytest
import scipy.linalg
import scipy.optimize
from hypothesis import given, settings
from hypothesis import strategies as st

from decouplenet.linalg import (
    InconsistentSystemError,
    Polynomial,
    char_poly,
    discriminant,
    eigenvalues,
    frobenius_distance,
    min_pairwise_gap,
    resultant,
    schur_decompose,
    schur_with_leading_eigvec,
    solve_min_norm,
    sylvester_matrix,
    triangular_eigvecs,
)

from conftest import path_laplacian, random_unitary


def _check_schur(a, sf, tol=1e-8):
    n = a.shape[0]
    anorm = np.linalg.norm(a)
    assert np.linalg.norm(sf.reconstruct() - a) <= tol * max(anorm, 1e-300) + 1e-300
    assert np.linalg.norm(sf.u.conj().T @ sf.u - np.eye(n)) <= 1e-10 * n
    assert np.allclose(np.tril(sf.t, -1), 0)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 12])
def test_schur_random_complex(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    _check_schur(a, schur_decompose(a))


def test_schur_real_with_complex_pair():
    a = np.array([[0.0, -1.0], [1.0, 0.0]])
    sf = schur_decompose(a)
    _check_schur(a, sf)
    np.testing.assert_allclose(np.sort_complex(sf.eigenvalues), [-1j, 1j], atol=1e-12)


def test_schur_zero_and_diagonal():
    _check_schur(np.zeros((4, 4)), schur_decompose(np.zeros((4, 4))))
    d = np.diag([3.0, -1.0, 2.0])
    sf = schur_decompose(d)
    np.testing.assert_allclose(np.sort(sf.eigenvalues.real), [-1, 2, 3], atol=1e-14)


def test_schur_defective_path():
    lap = path_laplacian(6)
    sf = schur_decompose(lap)
    _check_schur(lap, sf)


def test_schur_rejects_nonsquare_and_nan():
    with pytest.raises(ValueError):
        schur_decompose(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        schur_decompose(np.array([[np.nan, 0], [0, 1]]))


def test_schur_eigenvalues_match_scipy(rng):
    for _ in range(20):
        a = rng.standard_normal((6, 6))
        ours = eigenvalues(a)
        ref = scipy.linalg.eigvals(a)
        # optimal matching; sorting is unstable for conjugate pairs
        rows, cols = scipy.optimize.linear_sum_assignment(np.abs(ours[:, None] - ref[None, :]))
        np.testing.assert_allclose(ours[rows], ref[cols], atol=1e-9)


def test_frobenius_unitary_invariance(rng):
    for n in (2, 4, 7):
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        u = random_unitary(rng, n)
        assert np.linalg.norm(u @ a @ u.conj().T) == pytest.approx(np.linalg.norm(a), rel=1e-12)


def test_schur_with_leading_eigvec_puts_zero_first(rng):
    for n in (2, 4, 7):
        w = rng.uniform(0, 1, (n, n))
        np.fill_diagonal(w, 0)
        lap = np.diag(w.sum(1)) - w
        sf = schur_with_leading_eigvec(lap, np.ones(n))
        _check_schur(lap, sf)
        assert abs(sf.t[0, 0]) < 1e-12 * (1 + np.linalg.norm(lap))
        np.testing.assert_allclose(sf.u[:, 0], np.ones(n) / np.sqrt(n), atol=1e-14)


def test_triangular_eigvecs(rng):
    t = np.triu(rng.standard_normal((5, 5)))
    v = triangular_eigvecs(t)
    np.testing.assert_allclose(t @ v, v @ np.diag(np.diag(t)), atol=1e-10)


def _cofactor_det(m):
    # symbolic-free Laplace expansion; only used on tiny matrices
    n = len(m)
    if n == 1:
        return m[0][0]
    return sum((-1) ** j * m[0][j] * _cofactor_det([r[:j] + r[j + 1:] for r in m[1:]])
               for j in range(n))


def test_char_poly_matches_cofactor_det(rng):
    # det(xI - A) at n+1 points determines the degree-n polynomial
    for n in (1, 2, 3, 4):
        a = rng.standard_normal((n, n))
        xs = np.arange(n + 1, dtype=float)
        vals = [_cofactor_det((x * np.eye(n) - a).tolist()) for x in xs]
        ref = np.polyfit(xs, vals, n)
        np.testing.assert_allclose(char_poly(a).coeffs, ref, atol=1e-8)


def test_char_poly_two_by_two_closed_form():
    a, b, c, d = 2.0, -3.0, 0.5, 7.0
    p = char_poly(np.array([[a, b], [c, d]]))
    np.testing.assert_allclose(p.coeffs, [1, -(a + d), a * d - b * c], rtol=1e-14)


def test_char_poly_size_limit():
    with pytest.raises(ValueError):
        char_poly(np.eye(21))


def test_polynomial_validation():
    with pytest.raises(ValueError):
        Polynomial([0, 1])
    with pytest.raises(ValueError):
        Polynomial([])
    assert Polynomial([3, 2, 1]).derivative().coeffs.tolist() == [6, 2]
    with pytest.raises(ValueError):
        Polynomial([5]).derivative()


def test_sylvester_shape():
    s = sylvester_matrix(Polynomial([1, 2, 3]), Polynomial([1, 4]))
    np.testing.assert_array_equal(s, [[1, 2, 3], [1, 4, 0], [0, 1, 4]])


def _resultant_from_roots(f, g):
    fr, gr = np.roots(f.coeffs), np.roots(g.coeffs)
    prod = np.prod([a - b for a, b in itertools.product(fr, gr)]) if len(fr) and len(gr) else 1
    return f.coeffs[0] ** g.degree * g.coeffs[0] ** f.degree * prod


def test_resultant_matches_root_product(rng):
    for _ in range(50):
        m, n = rng.integers(1, 5, size=2)
        f = Polynomial(rng.standard_normal(m + 1) + 2.0)
        g = Polynomial(rng.standard_normal(n + 1) + 2.0)
        ref = _resultant_from_roots(f, g)
        assert resultant(f, g) == pytest.approx(ref.real, rel=1e-6, abs=1e-9)


def test_resultant_common_root_vanishes():
    f = Polynomial(np.poly([1.0, 2.0]))
    g = Polynomial(np.poly([2.0, -5.0, 3.0]))
    assert abs(resultant(f, g)) < 1e-10


def test_discriminant_quadratic():
    # raw Res(p, p') for x^2 - 3x + 2 equals -(b^2 - 4ac) = -1
    assert discriminant(Polynomial([1, -3, 2])) == pytest.approx(-1.0)
    assert abs(discriminant(Polynomial([1, -2, 1]))) < 1e-14


def test_discriminant_repeated_cubic():
    assert abs(discriminant(Polynomial(np.poly([1.0, 1.0, 4.0])))) < 1e-9
    assert abs(discriminant(Polynomial(np.poly([1.0, 2.0, 4.0])))) > 1e-3


def test_frobenius_distance():
    assert frobenius_distance(np.eye(2), np.zeros((2, 2))) == pytest.approx(np.sqrt(2))
    with pytest.raises(ValueError):
        frobenius_distance(np.eye(2), np.eye(3))


def test_min_pairwise_gap():
    assert min_pairwise_gap([1, 4, 2.5]) == pytest.approx(1.5)
    assert min_pairwise_gap([1]) == np.inf


def test_solve_min_norm_is_minimal(rng):
    for _ in range(20):
        m, n = 3, 7
        c = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
        b = rng.standard_normal(m)
        x = solve_min_norm(c, b)
        np.testing.assert_allclose(c @ x, b, atol=1e-10)
        null = scipy.linalg.null_space(c)
        for _ in range(5):
            other = x + null @ (rng.standard_normal(null.shape[1]))
            assert np.linalg.norm(other) >= np.linalg.norm(x) - 1e-12
        # orthogonal to the null space
        assert np.linalg.norm(null.conj().T @ x) < 1e-10


def test_solve_min_norm_redundant_rows(rng):
    c = rng.standard_normal((2, 5))
    c3 = np.vstack([c, c.sum(0), c, c])
    b = np.array([1.0, -2.0])
    b3 = np.concatenate([b, [b.sum()], b, b])
    np.testing.assert_allclose(solve_min_norm(c3, b3), solve_min_norm(c, b), atol=1e-10)


def test_solve_min_norm_inconsistent():
    c = np.array([[1.0, 1.0], [2.0, 2.0]])
    with pytest.raises(InconsistentSystemError) as info:
        solve_min_norm(c, [1.0, 3.0])
    assert info.value.residual > 0


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31 - 1))
def test_schur_property(n, seed):
    r = np.random.default_rng(seed)
    a = r.standard_normal((n, n)) * 10 ** r.uniform(-3, 3)
    sf = schur_decompose(a)
    _check_schur(a, sf)
    assert np.linalg.norm(sf.t) == pytest.approx(np.linalg.norm(a), rel=1e-10)


def test_schur_identity_is_trivial():
    sf = schur_decompose(np.eye(3))
    np.testing.assert_allclose(sf.t, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(np.abs(sf.u), np.eye(3), atol=1e-15)


@pytest.mark.parametrize("a,expected", [
    (np.diag([1.0, 2.0, 3.0]), [1, 2, 3]),
    (np.array([[1.0, -1.0], [-1.0, 1.0]]), [0, 2]),
    (np.array([[0.0, 0, 0], [-1, 1, 0], [0, -1, 1]]), [0, 1, 1]),
])
def test_eigenvalue_examples(a, expected):
    np.testing.assert_allclose(np.sort(eigenvalues(a).real), expected, atol=1e-12)


def test_char_poly_identity():
    np.testing.assert_allclose(char_poly(np.eye(3)).coeffs, [1, -3, 3, -1])


def test_resultant_examples():
    assert resultant(Polynomial([1, -1]), Polynomial([1, -2])) == pytest.approx(-1.0)
    assert abs(resultant(Polynomial([1, -1]), Polynomial(np.poly([1.0, 3.0])))) < 1e-14


def test_frobenius_examples():
    assert frobenius_distance(np.eye(4), np.eye(4)) == 0
    assert frobenius_distance(np.zeros((5, 5)), np.eye(5)) == pytest.approx(np.sqrt(5))


def test_solve_min_norm_examples(rng):
    np.testing.assert_allclose(solve_min_norm([[1.0, 1.0]], [2.0]), [1, 1])
    b = rng.standard_normal(4)
    np.testing.assert_allclose(solve_min_norm(np.eye(4), b), b)


def test_solve_min_norm_random_feasible_points(rng):
    c = rng.standard_normal((4, 10))
    b = rng.standard_normal(4)
    x = solve_min_norm(c, b)
    assert np.linalg.norm(c @ x - b) <= 1e-9
    particular = np.linalg.lstsq(c, b, rcond=None)[0] + scipy.linalg.null_space(c) @ rng.standard_normal(6)
    null = scipy.linalg.null_space(c)
    for _ in range(100):
        feasible = particular + null @ rng.standard_normal(6)
        assert np.linalg.norm(x) <= np.linalg.norm(feasible) + 1e-12
