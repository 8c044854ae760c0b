import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from igabem.expansion import ExpansionError
from igabem.geometry import plane_patch, sphere, torus
from igabem.quadrature import (
    IntegrationClass, basic_moments, build_thresholds, classify, eta, expand_kernel, moment_recursion,
    regular_rule, regular_weights, singular_rule, singular_weights,
)
from igabem.spline_core import KnotVector, collocation_matrix, single_bspline
from oracles import bspline, bspline_integral, bspline_moments_oracle, cells, patch_kernel, polar_integral, richardson

pytestmark = pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")

SPHERE = sphere()
TORUS = torus()
FLAT = plane_patch()
STRETCHED = plane_patch(e1=(2.0, 0.0, 0.0))       # metric diag(4, 1)


def rule(f, tau1, tau2, p, nu):
    x1, x2, w1, w2 = regular_weights(tau1, tau2, p, nu)
    return w1 @ f(x1[:, None], x2[None, :]) @ w2


# classification and thresholds ------------------------------------------

def test_classify():
    assert classify(0.0, 0.1, True) is IntegrationClass.SINGULAR
    assert classify(10 * 0.8, 0.1 * 0.8, False) is IntegrationClass.REGULAR
    assert classify(0.5 * 0.1 * 0.8, 0.1 * 0.8, False) is IntegrationClass.NEARLY_SINGULAR


def test_eta_formula():
    assert eta(0.25, 0.25, 2, 2) == pytest.approx(0.25 ** 0.1, abs=1e-15)
    assert eta(0.25, 0.25, 2, 2) == pytest.approx(0.8706, abs=1e-4)


def test_uniform_mesh_threshold():
    cfg = build_thresholds([np.full((9, 2), 0.25)], 2, 0.1)
    np.testing.assert_allclose(cfg.eta[0], cfg.delta[0])
    assert cfg.threshold(0) == pytest.approx(0.1 * 0.25 ** 0.1)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 0.9), st.floats(0.01, 0.9), st.integers(1, 5))
def test_threshold_monotone_in_mesh_size(h1, h2, p):
    small = build_thresholds([[[h1 / 2, h2 / 2]]], p, 0.2).delta[0]
    large = build_thresholds([[[h1, h2]]], p, 0.2).delta[0]
    assert small < large


def test_threshold_constant_range():
    with pytest.raises(ValueError):
        build_thresholds([[[0.1, 0.1]]], 2, 1.5)


# regular rule -----------------------------------------------------------

def test_constant_on_bernstein_function():
    tau = np.array([0.0, 0.0, 1.0, 1.0])
    x1, x2, _, _ = regular_weights(tau, tau, 4, 7)
    assert regular_rule(np.ones((7, 7)), tau, tau, 4) == pytest.approx(1 / 9, abs=1e-15)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4), st.integers(0, 3), st.integers(0, 2**31 - 1))
def test_exact_for_splines_of_qi_degree(p, d, seed):
    # sigma_f = f for splines in the QI space, so the rule is exact
    rng = np.random.default_rng(seed)
    nu = p + 2 + int(rng.integers(0, 4))
    tau1 = np.sort(rng.uniform(0, 1, d + 2))
    tau2 = np.sort(rng.uniform(0, 1, d + 2))
    tau1[-1] = tau1[0] + max(tau1[-1] - tau1[0], 0.1)
    tau2[-1] = tau2[0] + max(tau2[-1] - tau2[0], 0.1)
    from igabem.quadrature import qi_operator_for
    op = qi_operator_for(tau1, tau2, p, nu)
    (k1, k2) = op.knots
    c = rng.standard_normal((k1.size - p - 1, k2.size - p - 1))
    f = lambda x, y: collocation_matrix(k1, p, np.ravel(x)) @ c @ collocation_matrix(k2, p, np.ravel(y)).T
    val = rule(f, tau1, tau2, p, nu)

    # piecewise polynomial integrand: Gauss-Legendre per cell is exact
    xg, wg = np.polynomial.legendre.leggauss(12)
    b1, b2 = np.unique(np.r_[tau1, k1]), np.unique(np.r_[tau2, k2])
    x1 = ((b1[:-1, None] + b1[1:, None]) + np.diff(b1)[:, None] * xg) / 2
    x2 = ((b2[:-1, None] + b2[1:, None]) + np.diff(b2)[:, None] * xg) / 2
    w1 = (np.diff(b1)[:, None] * wg / 2).ravel() * single_bspline(tau1, x1.ravel())
    w2 = (np.diff(b2)[:, None] * wg / 2).ravel() * single_bspline(tau2, x2.ravel())
    ref = w1 @ f(x1, x2) @ w2
    assert val == pytest.approx(ref, rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("seed", range(4))
def test_smooth_integrand_on_one_span(seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1, 1, 4)
    f = lambda x, y: np.exp(a[0] * x + a[1] * y) * np.cos(a[2] * x - a[3] * y + 0.3)
    H = 0.125
    for tau1, tau2 in (([0, 0, 0, H], [0, 0, H, H]), ([0, H, H, H], [0, 0, 0, H])):
        tau1, tau2 = np.array(tau1, float) + 0.5, np.array(tau2, float) + 0.25
        val = rule(f, tau1, tau2, 4, 7)
        ref = bspline_integral(f, tau1, tau2)
        assert abs(val - ref) <= 1e-9 * abs(ref)


@pytest.mark.parametrize("p,nu", [(2, 5), (3, 7), (4, 7)])
def test_regular_rule_order(p, nu):
    f = lambda x, y: np.exp(x + y)
    r = 1 if p % 2 == 0 else 0
    errs, hs = [], [0.5, 0.25, 0.125]
    for H in hs:
        tau1 = 0.2 + np.array([0, H / 2, H])
        tau2 = 0.1 + np.array([0, H / 2, H])
        errs.append(abs(rule(f, tau1, tau2, p, nu) - bspline_integral(f, tau1, tau2)))
    order = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert order >= p + r + 2.7


# kernel expansions ------------------------------------------------------

def test_flat_single_layer_expansion():
    e = expand_kernel(FLAT, [0.5, 0.5], 1, 0)
    z = np.random.default_rng(0).standard_normal((10, 2))
    np.testing.assert_allclose(e(z[:, 0], z[:, 1]), 1 / np.linalg.norm(z, axis=1), rtol=1e-14)


def test_flat_double_layer_expansion_vanishes():
    e = expand_kernel(FLAT, [0.5, 0.5], 3, 1)
    z = np.random.default_rng(1).standard_normal((10, 2))
    assert np.all(e(z[:, 0], z[:, 1]) == 0)


def test_expansion_order_range():
    with pytest.raises(ExpansionError):
        expand_kernel(FLAT, [0.5, 0.5], 4, 0)


@pytest.mark.parametrize("gamma", [0, 1])
def test_expansion_homogeneity(gamma):
    e = expand_kernel(SPHERE[2], [0.4, 0.3], 3, gamma)
    z = np.array([0.03, -0.02])
    for k in range(1, 4):
        a, b = e.term(k, *(2 * z)), e.term(k, *z)
        assert a == pytest.approx(2.0 ** e.homogeneity(k) * b, rel=1e-12)


@pytest.mark.parametrize("gamma,m", [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)])
def test_expansion_remainder_decay(gamma, m):
    # sup over the support of |U - U^m| shrinks like H^(m - 1)
    patch = SPHERE[0]
    s = np.array([0.4, 0.55])
    U = patch_kernel(patch, s, gamma)
    e = expand_kernel(patch, s, m, gamma)
    sups, hs = [], [0.2, 0.1, 0.05, 0.025]
    for H in hs:
        g = s[:, None] + H * np.linspace(-0.5, 0.5, 24)[None, :] + 1e-3 * H
        t1, t2 = np.meshgrid(g[0], g[1], indexing="ij")
        sups.append(np.abs(U(t1, t2) - e(s[0] - t1, s[1] - t2)).max())
    order = np.polyfit(np.log(hs), np.log(sups), 1)[0]
    if m == 1 and gamma == 0:
        assert order == pytest.approx(0.0, abs=0.3)
    else:
        assert order == pytest.approx(m - 1, abs=0.3)


# moments ---------------------------------------------------------------

def test_flat_basic_moment_closed_form():
    e = expand_kernel(FLAT, [0.5, 0.5], 1, 0)
    val = basic_moments(e, ((0.0, 1.0), (0.0, 1.0)), [0.5, 0.5], (0, 0))
    assert val == pytest.approx(8 * 0.5 * np.log(1 + np.sqrt(2)), abs=1e-12)
    assert val == pytest.approx(3.52549, abs=1e-5)


def test_odd_moment_vanishes():
    e = expand_kernel(FLAT, [0.5, 0.5], 1, 0)
    assert abs(basic_moments(e, ((0.0, 1.0), (0.0, 1.0)), [0.5, 0.5], (1, 0))) < 1e-14


@pytest.mark.parametrize("s,cell", [((0.5, 0.5), ((0.2, 0.9), (0.1, 0.7))),
                                    ((0.3, 0.4), ((0.3, 0.5), (0.4, 0.45))),
                                    ((0.1, 0.9), ((0.3, 0.5), (0.2, 0.6)))])
@pytest.mark.parametrize("q", [(0, 0), (1, 2), (3, 1)])
def test_anisotropic_moments_against_polar_oracle(s, cell, q):
    e = expand_kernel(STRETCHED, s, 1, 0)
    f = lambda t1, t2: (t1 - s[0]) ** q[0] * (t2 - s[1]) ** q[1] / np.sqrt(4 * (t1 - s[0]) ** 2 + (t2 - s[1]) ** 2)
    ref = polar_integral(f, s, cell)
    assert basic_moments(e, cell, s, q) == pytest.approx(ref, rel=1e-10, abs=1e-13)


def test_recursion_degree_one_against_oracle():
    e = expand_kernel(SPHERE[1], [0.37, 0.52], 2, 0)
    s = np.array([0.37, 0.52])
    k1 = KnotVector.uniform(3, 1).array
    k2 = np.array([0.0, 1.0])
    val = moment_recursion(e, k1, 1, k2, 0, s)
    ref = bspline_moments_oracle(e, s, k1, 1, k2, 0)
    np.testing.assert_allclose(val, ref, rtol=1e-10, atol=1e-12)


def test_recursion_degree_zero_is_basic_moment():
    e = expand_kernel(SPHERE[1], [0.2, 0.6], 2, 0)
    s = np.array([0.2, 0.6])
    val = moment_recursion(e, np.array([0.0, 0.5, 1.0]), 0, np.array([0.0, 1.0]), 0, s)
    assert val[0, 0] == pytest.approx(basic_moments(e, ((0, 0.5), (0, 1)), s, (0, 0)), rel=1e-14)


@pytest.mark.parametrize("gamma", [0, 1])
def test_bernstein_moments_sum_to_total(gamma):
    s = np.array([0.45, 0.3])
    e = expand_kernel(SPHERE[4], s, 2, gamma)
    k = np.r_[np.zeros(4), np.ones(4)]
    v = moment_recursion(e, k, 3, k, 3, s)
    ref = polar_integral(lambda t1, t2: e(s[0] - t1, s[1] - t2), s, ((0, 1), (0, 1)))
    assert v.sum() == pytest.approx(ref, rel=1e-10)


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(0, 2), st.integers(0, 2), st.sampled_from([0, 1]))
def test_moment_recursion_random_against_oracle(seed, deg1, deg2, gamma):
    rng = np.random.default_rng(seed)
    patch = TORUS[int(rng.integers(0, 16))]
    s = rng.uniform(0.1, 0.9, 2)
    e = expand_kernel(patch, s, 2, gamma)
    k1 = KnotVector.from_breakpoints(np.r_[0.0, np.sort(rng.uniform(0.05, 0.95, 2)), 1.0], deg1).array
    k2 = KnotVector.from_breakpoints(np.r_[0.0, np.sort(rng.uniform(0.05, 0.95, 1)), 1.0], deg2).array
    val = moment_recursion(e, k1, deg1, k2, deg2, s)
    ref = bspline_moments_oracle(e, s, k1, deg1, k2, deg2)
    np.testing.assert_allclose(val, ref, rtol=1e-9, atol=1e-9 * np.abs(ref).max())


@pytest.mark.parametrize("surface,k", [(SPHERE, 2), (TORUS, 6)], ids=["sphere", "torus"])
@pytest.mark.parametrize("gamma", [0, 1])
def test_second_order_remainder_continuous_at_source(surface, k, gamma):
    patch = surface[k]
    s = np.array([0.43, 0.61])
    e = expand_kernel(patch, s, 2, gamma)
    U = patch_kernel(patch, s, gamma)
    th = 2 * np.pi * np.arange(8) / 8
    seq = []
    for rho in (4e-3, 2e-3, 1e-3):
        t1, t2 = s[0] + rho * np.cos(th), s[1] + rho * np.sin(th)
        seq.append(U(t1, t2) - e(s[0] - t1, s[1] - t2))
    limits = richardson(seq, 2.0)
    assert np.ptp(limits) < 1e-4


# singular rule ----------------------------------------------------------

def test_singular_rule_flat_constant():
    s = np.array([0.3, 0.65])
    tau1, tau2 = np.array([0.1, 0.7]), np.array([0.4, 0.9])
    e = expand_kernel(FLAT, s, 1, 0)
    val = singular_rule(np.ones((5, 5)), tau1, tau2, s, e, p=2)
    ref = polar_integral(lambda t1, t2: 1 / np.hypot(t1 - s[0], t2 - s[1]), s, ((0.1, 0.7), (0.4, 0.9)))
    assert val == pytest.approx(ref, rel=1e-10)


def test_singular_rule_flat_double_layer_is_zero():
    s = np.array([0.3, 0.65])
    e = expand_kernel(FLAT, s, 2, 1)
    assert singular_rule(np.ones((5, 5)), np.array([0.1, 0.7]), np.array([0.4, 0.9]), s, e) == 0.0


@pytest.mark.parametrize("s", [(0.3, 0.5), (0.02, 0.95), (1.3, 0.2), (-0.4, -0.3)])
def test_singular_weights_against_oracle(s):
    # expansion point inside and outside the support; p = d + ... exact for splines of degree p
    s = np.array(s)
    e = expand_kernel(SPHERE[0], np.clip(s, 0, 1), 3, 0)
    tau1 = np.array([0.0, 0.0, 0.5, 1.0])
    tau2 = np.array([0.0, 0.5, 1.0, 1.0])
    p, nu = 2, 7
    W = singular_weights(e, s, tau1, tau2, p, nu)[0]
    x = np.linspace(0, 1, nu)
    g = lambda t1, t2: 1 + t1 ** 2 - t1 * t2        # reproduced exactly by the QI
    val = np.sum(W * g(x[:, None], x[None, :]))
    f = lambda t1, t2: (e(s[0] - t1, s[1] - t2) * g(t1, t2)
                        * bspline(tau1, t1) * bspline(tau2, t2))
    ref = sum(polar_integral(f, s, c) for c in cells(tau1, tau2))
    assert val == pytest.approx(ref, rel=1e-9, abs=1e-12)


def extracted_integral(patch, s, tau1, tau2, p, nu, m, g, gamma=0):
    """int U(s, t) g(t) B(t) dt by singularity extraction at s."""
    e = expand_kernel(patch, s, m, gamma)
    U = patch_kernel(patch, s, gamma)
    W = singular_weights(e, s, tau1, tau2, p, nu)[0]
    x1, x2, w1, w2 = regular_weights(tau1, tau2, p, nu)
    t1, t2 = np.meshgrid(x1, x2, indexing="ij")
    with np.errstate(divide="ignore", invalid="ignore"):
        rem = U(t1, t2) - e(s[0] - t1, s[1] - t2)
    rem[~np.isfinite(rem)] = 0.0
    G = g(t1, t2)
    return np.sum(W * G) + w1 @ (rem * G) @ w2


def test_singular_rule_order_on_sphere():
    patch = SPHERE[0]
    jac = lambda t1, t2: patch.normal_and_jacobian(np.ravel(t1), np.ravel(t2))[1].reshape(np.shape(t1))
    g = lambda t1, t2: jac(t1, t2) * np.cos(t1 + 2 * t2)
    a = np.array([0.3, 0.4])
    hs, errs = [0.1, 0.05, 0.025], []
    for H in hs:
        s = a + H * np.array([0.3, 0.6])
        U = patch_kernel(patch, s)
        box = ((a[0], a[0] + H), (a[1], a[1] + H))
        ref = polar_integral(lambda t1, t2: U(t1, t2) * g(t1, t2), s, box)
        val = extracted_integral(patch, s, a[0] + np.array([0, H]), a[1] + np.array([0, H]), 2, 7, 3, g)
        errs.append(abs(val - ref))
    order = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert order == pytest.approx(2 + 2, abs=0.4)


# nearly singular integrals ----------------------------------------------

def test_nearly_singular_same_patch():
    patch = SPHERE[3]
    s = np.array([0.405, 0.52])             # just outside the support below
    tau1, tau2 = np.array([0.2, 0.3, 0.4]), np.array([0.4, 0.5, 0.6])
    g = lambda t1, t2: patch.normal_and_jacobian(np.ravel(t1), np.ravel(t2))[1].reshape(np.shape(t1))
    U = patch_kernel(patch, s)
    f = lambda t1, t2: U(t1, t2) * g(t1, t2) * bspline(tau1, t1) * bspline(tau2, t2)
    ref = sum(polar_integral(f, s, c) for c in cells(tau1, tau2))
    errs = [abs(extracted_integral(patch, s, tau1, tau2, 2, nu, 3, g) / ref - 1) for nu in (5, 9, 17)]
    assert errs[1] < 1e-6 and errs[2] < 1e-8
    assert errs[0] > errs[1] > errs[2]


def test_flat_neighbour_extension_is_exact():
    # x on the left square, support on the right square: the extension of a
    # planar patch reproduces the plane, so extraction is exact
    right = plane_patch(origin=(1.0, 0.0, 0.0))
    x = np.array([0.97, 0.4, 0.0])
    s, res, bad = right.project(x)
    assert not bad and res < 1e-12
    np.testing.assert_allclose(s, [-0.03, 0.4], atol=1e-10)
    tau1, tau2 = np.array([0.0, 0.0, 0.25]), np.array([0.25, 0.5, 0.75])
    e = expand_kernel(right, s, 1, 0)
    W = singular_weights(e, s, tau1, tau2, 2, 7)[0]
    f = lambda t1, t2: (1 / np.hypot(t1 - s[0], t2 - s[1])
                        * bspline(tau1, t1) * bspline(tau2, t2))
    ref = sum(polar_integral(f, s, c) for c in cells(tau1, tau2))
    assert W.sum() == pytest.approx(ref, rel=1e-10)


def test_regularized_integrand_bounded_on_adjacent_patch():
    # expansion about the extrapolated point removes the near singularity
    surf = SPHERE
    iface = surf.interfaces[0]
    a, b, edge = iface.patch_a, iface.patch_b, iface.edge_a
    for tau in (0.3, 0.6):
        t = {0: (tau, 0.01), 1: (0.99, tau), 2: (tau, 0.99), 3: (0.01, tau)}[edge]
        x = surf[a].eval_point(*t)
        s, res, bad = surf[b].project(x)
        assert not bad
        U = patch_kernel(surf[b], s)
        e = expand_kernel(surf[b], s, 2, 0)
        c = np.clip(s, 0, 1)
        g = np.linspace(-0.125, 0.125, 41)
        t1, t2 = np.meshgrid(np.clip(c[0] + g, 0, 1), np.clip(c[1] + g, 0, 1), indexing="ij")
        u = np.abs(U(t1, t2)).max()
        reg = np.abs(U(t1, t2) - e(s[0] - t1, s[1] - t2)).max()
        assert reg < 0.2 * u


# mesh-size bound ---------------------------------------------------------

@pytest.mark.parametrize("gamma", [0, 1])
def test_integral_of_kernel_bounded_by_mesh_size(gamma):
    patch = SPHERE[5]
    rng = np.random.default_rng(gamma)
    # Q from the sampled bound |U(s, t)| <= Q / |t - s|
    Q = 0.0
    for _ in range(20):
        s = rng.uniform(0, 1, 2)
        U = patch_kernel(patch, s, gamma)
        t = rng.uniform(0, 1, (200, 2))
        rho = np.linalg.norm(t - s, axis=1)
        Q = max(Q, float(np.max(np.abs(U(t[:, 0], t[:, 1])) * rho)))
    C = 2 * np.pi * np.sqrt(2) * Q * 1.01
    s = rng.uniform(0.3, 0.7, 2)
    U = patch_kernel(patch, s, gamma)
    for H in (0.4, 0.2, 0.1, 0.05):
        lo = s - H * rng.uniform(0, 1, 2)
        box = ((lo[0], lo[0] + H), (lo[1], lo[1] + H))
        val = polar_integral(lambda t1, t2: np.abs(U(t1, t2)), s, box)
        assert val <= C * H
