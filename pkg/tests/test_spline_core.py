import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.interpolate import BSpline

from igabem.spline_core import (
    KnotVector, SplineError, TensorSplineSpace, bspline_integral, bspline_integrals, check_clamped,
    collocation_matrix, eval_basis, gauss_legendre, greville, product_matrix, single_bspline,
)


knot_vectors = st.integers(0, 5).flatmap(
    lambda d: st.builds(lambda br: KnotVector.from_breakpoints(np.r_[0.0, np.sort(br), 1.0], d),
                        st.lists(st.floats(0.02, 0.98), min_size=0, max_size=6, unique=True)))


# knot vectors ---------------------------------------------------------

def test_clamped_check_rejects_bad_vectors():
    with pytest.raises(SplineError):
        check_clamped([0, 0, 0.5, 1, 1], 2)
    with pytest.raises(SplineError):
        check_clamped([0, 0, 0, 0.7, 0.5, 1, 1, 1], 2)
    with pytest.raises(SplineError):
        check_clamped([0, 0, 0, 1.5, 1.5, 1.5], 2)


def test_uniform_knot_vector():
    kv = KnotVector.uniform(4, 2)
    assert kv.n_basis == 6
    np.testing.assert_allclose(kv.breakpoints, [0, 0.25, 0.5, 0.75, 1])
    assert kv.h == pytest.approx(0.25)


# basis evaluation -----------------------------------------------------

def test_constant_basis():
    vals, span = eval_basis([0.0, 1.0], 0, 0.5)
    np.testing.assert_allclose(vals, [1.0])


def test_bernstein_middle_function():
    vals, span = eval_basis([0, 0, 0, 1, 1, 1], 2, 0.5)
    assert vals[1] == pytest.approx(0.5, abs=1e-15)


def test_partition_of_unity_example():
    t = np.linspace(0, 1, 41)
    vals, _ = eval_basis([0, 0, 0, 0.5, 1, 1, 1], 2, t)
    np.testing.assert_allclose(vals.sum(1), 1.0, atol=1e-15)


def test_outside_domain_raises():
    with pytest.raises(SplineError):
        eval_basis([0, 0, 1, 1], 1, 1.5)


@settings(max_examples=60, deadline=None)
@given(knot_vectors, st.lists(st.floats(0, 1), min_size=1, max_size=20))
def test_partition_of_unity(kv, t):
    B = collocation_matrix(kv.array, kv.degree, np.array(t))
    np.testing.assert_allclose(B.sum(1), 1.0, atol=1e-14)
    assert np.all(B >= -1e-15)


@settings(max_examples=40, deadline=None)
@given(knot_vectors, st.lists(st.floats(0, 1, exclude_max=True), min_size=1, max_size=20))
def test_matches_scipy_bsplines(kv, t):
    t = np.array(t)
    B = collocation_matrix(kv.array, kv.degree, t)
    ref = BSpline.design_matrix(t, kv.array, kv.degree).toarray()
    np.testing.assert_allclose(B, ref, atol=1e-13)


def test_derivatives_match_scipy():
    kv = KnotVector.from_breakpoints([0, 0.3, 0.45, 1], 3)
    t = np.linspace(0.01, 0.99, 23)
    for nd in (1, 2):
        D = collocation_matrix(kv.array, 3, t, nders=nd)
        for i in range(kv.n_basis):
            c = np.zeros(kv.n_basis)
            c[i] = 1
            ref = BSpline(kv.array, c, 3).derivative(nd)(t)
            np.testing.assert_allclose(D[:, i], ref, atol=1e-10)


# Greville abscissae ---------------------------------------------------

def test_greville_quadratic():
    np.testing.assert_allclose(greville([0, 0, 0, 0.5, 1, 1, 1], 2), [0, 0.25, 0.75, 1])


def test_greville_improved():
    np.testing.assert_allclose(greville([0, 0, 0, 0.5, 1, 1, 1], 2, improved=True, omega=0.5),
                               [0.125, 0.25, 0.75, 0.875])


def test_greville_linear():
    np.testing.assert_allclose(greville([0, 0, 1, 1], 1), [0, 1])


def test_greville_rejects_bad_omega():
    with pytest.raises(SplineError):
        greville([0, 0, 0, 1, 1, 1], 2, improved=True, omega=1.0)


@settings(max_examples=40, deadline=None)
@given(knot_vectors)
def test_greville_reproduces_linear_function(kv):
    # sum_i g_i B_i(t) = t for degree >= 1
    if kv.degree == 0:
        return
    t = np.linspace(0, 1, 17)
    B = collocation_matrix(kv.array, kv.degree, t)
    np.testing.assert_allclose(B @ greville(kv.array, kv.degree), t, atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(knot_vectors, st.floats(0.05, 0.95))
def test_improved_greville_interior(kv, omega):
    # with two functions both end points move onto each other
    if kv.degree == 0 or kv.n_basis < 3:
        return
    g = greville(kv.array, kv.degree, improved=True, omega=omega)
    assert g[0] > 0 and g[-1] < 1
    assert np.all(np.diff(g) > 0)


# integrals -----------------------------------------------------------

def test_bernstein_integral():
    assert bspline_integrals([0, 0, 0, 1, 1, 1], 2)[1] == pytest.approx(1 / 3)


def test_bivariate_integral():
    k = [0, 0, 0.5, 1, 1]
    assert bspline_integral((0, 0), (1, 1), (k, k)) == pytest.approx(0.0625)


def test_constant_cell_integral():
    assert bspline_integral((1, 2), (0, 0), ([0, 0.2, 0.7, 1], [0, 0.1, 0.3, 0.6, 1])) == pytest.approx(0.5 * 0.3)


@settings(max_examples=30, deadline=None)
@given(knot_vectors)
def test_integrals_match_quadrature(kv):
    ints = bspline_integrals(kv.array, kv.degree)
    for i in range(kv.n_basis):
        c = np.zeros(kv.n_basis)
        c[i] = 1
        f = BSpline(kv.array, c, kv.degree)
        brk = np.unique(kv.array)
        ref = sum(quad(f, a, b, epsabs=1e-14)[0] for a, b in zip(brk[:-1], brk[1:]))
        assert ints[i] == pytest.approx(ref, abs=1e-12)


# single B-splines and product matrices -------------------------------

def test_single_bspline_matches_basis():
    kv = KnotVector.from_breakpoints([0, 0.25, 0.6, 1], 2)
    t = np.linspace(0, 1, 31)
    B = collocation_matrix(kv.array, 2, t)
    for i in range(kv.n_basis):
        np.testing.assert_allclose(single_bspline(kv.array[i:i + 4], t), B[:, i], atol=1e-14)


def test_product_with_constant_is_identity():
    tau = np.array([0.0, 0.2, 0.5, 1.0])
    pm = product_matrix(0, 2, [0.0, 1.0], tau)
    t = np.linspace(0, 1, 25)
    prod = collocation_matrix(pm.knots, pm.degree, t) @ pm.G[0]
    np.testing.assert_allclose(prod, single_bspline(tau, t), atol=1e-14)


def test_linear_times_linear_bernstein():
    # trial (1 - t): (1 - t)^2 = B_0,2 and t (1 - t) = B_1,2 / 2
    pm = product_matrix(1, 1, [0, 0, 1, 1], [0.0, 0.0, 1.0])
    np.testing.assert_allclose(pm.G, [[1.0, 0.0, 0.0], [0.0, 0.5, 0.0]], atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 2**31 - 1))
def test_product_integral_matches_quadrature(p, d, seed):
    rng = np.random.default_rng(seed)
    tau = np.sort(np.r_[0.0, rng.uniform(0.05, 0.95, d), 1.0]) if d else np.array([0.0, 1.0])
    qk = KnotVector.from_breakpoints(np.r_[0.0, np.sort(rng.uniform(0.05, 0.95, 2)), 1.0], p).array
    pm = product_matrix(p, d, qk, tau)
    lam = rng.standard_normal(qk.size - p - 1)
    val = lam @ pm.G @ pm.integrals()
    f = BSpline(qk, lam, p)
    brk = np.unique(np.r_[qk, tau])
    ref = sum(quad(lambda x: f(x) * single_bspline(tau, x)[0], a, b, epsabs=1e-15, epsrel=1e-14)[0]
              for a, b in zip(brk[:-1], brk[1:]))
    assert val == pytest.approx(ref, rel=1e-12, abs=1e-14)


# tensor spaces -------------------------------------------------------

def test_tensor_space_dimension_and_ordering():
    sp = TensorSplineSpace.uniform(3, 2, 2, 1)
    assert sp.dim == (3 + 2) * (2 + 1)
    for j in range(sp.dim):
        assert sp.flat(*sp.unflat(j)) == j
    assert sp.unflat(1) == (0, 1)


def test_tensor_partition_of_unity():
    sp = TensorSplineSpace.uniform(3, 4, 2, 3)
    t = np.linspace(0, 1, 7)
    vals = sp.eval_all(t, t)
    np.testing.assert_allclose(vals.sum(-1), 1.0, atol=1e-14)


def test_gauss_legendre_exactness():
    x, w = gauss_legendre(6)
    for k in range(12):
        exact = (1 - (-1) ** (k + 1)) / (k + 1)
        assert w @ x ** k == pytest.approx(exact, abs=1e-14)
