import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metastable import Polynomial


def test_eval_matches_direct_formula():
    # f(x, y) = 3 x^2 y + 2 y - 1
    p = Polynomial([[2, 1], [0, 1], [0, 0]], [3.0, 2.0, -1.0])
    x = np.array([1.5, -0.5])
    assert p(x) == pytest.approx(3 * 1.5**2 * -0.5 + 2 * -0.5 - 1)


def test_vectorized_eval_matches_scalar():
    p = Polynomial([[2, 0], [1, 1], [0, 3]], [1.0, -2.0, 0.5])
    pts = np.random.default_rng(0).normal(size=(50, 2))
    batch = p(pts)
    singles = np.array([p(x) for x in pts])
    np.testing.assert_allclose(batch, singles, rtol=1e-14)


def test_grad_and_hess_exact_on_quadratic():
    # f = x^2/2 + y^2/2: grad = x, hess = I
    p = Polynomial([[2, 0], [0, 2]], [0.5, 0.5])
    x = np.array([3.0, -4.0])
    np.testing.assert_allclose(p.grad(x), x)
    np.testing.assert_allclose(p.hess(x), np.eye(2))


def test_diff_of_constant_is_zero():
    p = Polynomial([[0, 0]], [7.0])
    d = p.diff(0)
    assert d(np.array([2.0, 3.0])) == 0.0


def test_dense_gradient2_matches_grad():
    rng = np.random.default_rng(1)
    powers = rng.integers(0, 4, size=(6, 2))
    p = Polynomial(powers, rng.normal(size=6))
    C = p.dense_gradient2()
    for x in rng.normal(size=(20, 2)):
        g = np.zeros(2)
        for j in range(2):
            for a in range(C.shape[1]):
                for b in range(C.shape[2]):
                    g[j] += C[j, a, b] * x[0] ** a * x[1] ** b
        np.testing.assert_allclose(g, p.grad(x), rtol=1e-12, atol=1e-12)


def test_dense_gradient2_rejects_non_bivariate():
    p = Polynomial([[2]], [1.0])
    with pytest.raises(ValueError):
        p.dense_gradient2()


def test_packed_gradient_round_trip():
    p = Polynomial([[3, 0], [1, 2], [0, 1]], [1.0, -1.0, 2.0])
    gp, gc = p.packed_gradient()
    assert gp.shape[0] == 2 and gc.shape == gp.shape[:2]
    x = np.array([0.7, -1.3])
    for j in range(2):
        val = sum(
            c * np.prod(x**k) for k, c in zip(gp[j], gc[j])
        )
        assert val == pytest.approx(p.grad(x)[j], rel=1e-13)


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        Polynomial([[1, 0], [0, 1]], [1.0])


@st.composite
def random_polynomials(draw):
    n_terms = draw(st.integers(1, 5))
    powers = [
        [draw(st.integers(0, 3)), draw(st.integers(0, 3))]
        for _ in range(n_terms)
    ]
    coeffs = [
        draw(st.floats(-5, 5, allow_nan=False, allow_infinity=False))
        for _ in range(n_terms)
    ]
    return Polynomial(powers, coeffs)


@settings(max_examples=40, deadline=None)
@given(random_polynomials(), st.floats(-2, 2), st.floats(-2, 2))
def test_gradient_matches_finite_differences(p, x1, x2):
    x = np.array([x1, x2])
    h = 1e-6
    g = p.grad(x)
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        fd = (p(x + e) - p(x - e)) / (2 * h)
        assert abs(fd - g[j]) <= 1e-4 * (1.0 + abs(g[j]))


@settings(max_examples=40, deadline=None)
@given(random_polynomials(), st.floats(-2, 2), st.floats(-2, 2))
def test_hessian_is_symmetric(p, x1, x2):
    H = p.hess(np.array([x1, x2]))
    np.testing.assert_allclose(H, H.T, rtol=1e-12, atol=1e-12)
