"""Quadrature rules for integrals of the form int_{R_j} f(t) B_j(t) dt.

* regular rule: f is replaced by its quasi-interpolant sigma_f and the
  product sigma_f * B_j is integrated exactly in the product spline
  space, giving separable weights ``w1 (x) w2`` on the uniform nodes;
* singular rule: for f = U^m_s(s - t) g(t) only g is quasi-interpolated
  and the moments of U^m_s against the product B-splines are exact;
* classification of (source point, support) pairs into regular, nearly
  singular and singular using the automatic threshold c * delta.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial

import numpy as np

from .expansion import KernelExpansion, expand_kernel  # noqa: F401  (re-export)
from .moments import bspline_moments, cell_moments, corner_integrals, far_grid
from .quasi_interpolation import QiOperator, build_qi, qi_rule_1d
from .spline_core import SplineError, bspline_integrals, collocation_matrix, gauss_legendre, product_matrix


_MOMENT_BUDGET = 4e6
# cells farther than NEAR_CELLS cell sizes from the expansion point are
# integrated by Gauss-Legendre: there the kernel is analytic, while moments
# about a distant point lose accuracy like (distance / size)^degree
NEAR_CELLS = 3.0
FAR_GAUSS = 6


class IntegrationClass(enum.Enum):
    REGULAR = "regular"
    NEARLY_SINGULAR = "nearly_singular"
    SINGULAR = "singular"


def _key(tau) -> tuple:
    tau = np.asarray(tau, dtype=float)
    a, b = tau[0], tau[-1]
    if not b > a:
        raise SplineError("support of a trial function must have positive length")
    return tuple(np.round((tau - a) / (b - a), 14))


@dataclass(frozen=True)
class SupportRule1D:
    """Univariate data of one trial direction on the normalized support [0, 1].

    ``C`` (nu x n) maps samples to QI coefficients, ``G`` (n x N) gives
    product coefficients and ``weights`` the regular-rule weights for a
    unit-length support.
    """

    p: int
    nu: int
    d: int
    C: np.ndarray
    G: np.ndarray
    product_knots: np.ndarray
    weights: np.ndarray
    cells: np.ndarray = None        # distinct breakpoints of the product space
    cell_poly: np.ndarray = None    # (nu, q, cell): Taylor coefficients of the weight splines
    gauss_nodes: np.ndarray = None  # (cell * FAR_GAUSS,) Gauss nodes on every cell
    gauss_values: np.ndarray = None # (nu, cell * FAR_GAUSS) weight splines times Gauss weights


    @property
    def product_degree(self) -> int:
        return self.p + self.d


@lru_cache(maxsize=4096)
def _support_rule_cached(key: tuple, p: int, nu: int) -> SupportRule1D:
    tau = np.asarray(key)
    d = tau.size - 2
    rule = qi_rule_1d(p, nu)
    pm = product_matrix(p, d, rule.knots, tau)
    v = bspline_integrals(pm.knots, p + d)
    w = rule.C @ (pm.G @ v)
    L = rule.C @ pm.G
    cells, poly = _cell_polynomials(pm.knots, p + d, L)
    xg, wg = gauss_legendre(FAR_GAUSS)
    xg, wg = 0.5 * (xg + 1.0), 0.5 * wg
    width = np.diff(cells)
    gx = (cells[:-1, None] + width[:, None] * xg).ravel()
    gw = (width[:, None] * wg).ravel()
    gv = L @ collocation_matrix(pm.knots, p + d, gx).T * gw
    for arr in (pm.G, w, cells, poly, gx, gv):
        arr.setflags(write=False)
    return SupportRule1D(p, nu, d, rule.C, pm.G, pm.knots, w, cells, poly, gx, gv)


def _cell_polynomials(knots, degree: int, L: np.ndarray) -> tuple:
    """Breakpoints and per-cell Taylor coefficients of the splines L @ B.

    On cell c the row a of L @ B equals sum_q poly[a, q, c] (t - u_c)^q.
    """
    u = np.unique(knots)
    D = np.stack([collocation_matrix(knots, degree, u[:-1], nders=q) / factorial(q)
                  for q in range(degree + 1)], axis=1)       # (cell, q, n)
    return u, np.einsum("an,cqn->aqc", L, D)


def support_rule_1d(tau, p: int, nu: int) -> SupportRule1D:
    return _support_rule_cached(_key(tau), int(p), int(nu))


def regular_weights(tau1, tau2, p, nu) -> tuple:
    """Nodes and weights of the regular rule on the support of B(tau1) B(tau2).

    ``p`` and ``nu`` are pairs (or scalars).  Returns (x1, x2, w1, w2);
    the rule is  sum_ab w1[a] w2[b] f(x1[a], x2[b]).
    """
    p1, p2 = np.broadcast_to(p, 2)
    n1, n2 = np.broadcast_to(nu, 2)
    out = []
    for tau, pp, nn in ((tau1, p1, n1), (tau2, p2, n2)):
        tau = np.asarray(tau, dtype=float)
        a, b = tau[0], tau[-1]
        r = support_rule_1d(tau, pp, nn)
        out.append((a + (b - a) * np.linspace(0.0, 1.0, nn), (b - a) * r.weights))
    return out[0][0], out[1][0], out[0][1], out[1][1]


def regular_rule(samples, tau1, tau2, p=2, nu=None) -> complex:
    """Regular-rule value of int f B dt from samples on the uniform node grid."""
    f = np.asarray(samples)
    if nu is None:
        nu = f.shape
    x1, x2, w1, w2 = regular_weights(tau1, tau2, p, nu)
    if f.shape != (x1.size, x2.size):
        f = f.reshape(x1.size, x2.size)
    return w1 @ f @ w2


def qi_operator_for(tau1, tau2, p, nu) -> QiOperator:
    p1, p2 = np.broadcast_to(p, 2)
    n1, n2 = np.broadcast_to(nu, 2)
    return build_qi(p1, p2, n1, n2, ((tau1[0], tau1[-1]), (tau2[0], tau2[-1])))


def singular_weights(exp: KernelExpansion, s, tau1, tau2, p, nu, task=None) -> np.ndarray:
    """Weights W (T, nu1, nu2) with int U^m_s(s - t) g(t) B(t) dt = sum W g(nodes).

    ``s`` (T, 2) are expansion points (inside or outside the support).
    """
    p1, p2 = np.broadcast_to(p, 2)
    n1, n2 = np.broadcast_to(nu, 2)
    tau1 = np.asarray(tau1, dtype=float)
    tau2 = np.asarray(tau2, dtype=float)
    r1 = support_rule_1d(tau1, p1, n1)
    r2 = support_rule_1d(tau2, p2, n2)
    a1, h1 = tau1[0], tau1[-1] - tau1[0]
    a2, h2 = tau2[0], tau2[-1] - tau2[0]
    s = np.atleast_2d(s)
    task = np.arange(s.shape[0]) if task is None else np.asarray(task)
    q1, q2 = r1.product_degree, r2.product_degree
    u = a1 + h1 * r1.cells
    v = a2 + h2 * r2.cells
    g1 = a1 + h1 * r1.gauss_nodes
    g2 = a2 + h2 * r2.gauss_nodes
    G1 = h1 * r1.gauss_values
    G2 = h2 * r2.gauss_values
    chunk = max(1, int(_MOMENT_BUDGET // (g1.size * g2.size)))
    out = np.empty((s.shape[0], int(n1), int(n2)))
    for lo in range(0, s.shape[0], chunk):
        hi = min(s.shape[0], lo + chunk)
        st = s[lo:hi]
        tk = task[lo:hi]
        near = _near_cells(st, u, v)                                     # (T, c1, c2)
        U = far_grid(exp, st, g1, g2, near, FAR_GAUSS, tk)
        W = G1 @ U @ G2.T
        if near.any():
            W += _near_part(exp, st, tk, near, u, v, r1, r2, h1, h2, q1, q2)
        out[lo:hi] = W
    return out


def _window(mask: np.ndarray, n: int) -> tuple:
    """Per-row start index and common length of the windows covering ``mask`` (T, n)."""
    any_ = mask.any(axis=1)
    first = np.where(any_, np.argmax(mask, axis=1), 0)
    last = np.where(any_, n - 1 - np.argmax(mask[:, ::-1], axis=1), 0)
    K = int((last - first).max()) + 1
    return np.minimum(first, n - K), K


def _near_part(exp, s, task, near, u, v, r1, r2, h1, h2, q1, q2) -> np.ndarray:
    """Exact moments on the near cells, contracted with the weight splines."""
    T = s.shape[0]
    c1, c2 = u.size - 1, v.size - 1
    i0, K1 = _window(near.any(axis=2), c1)
    j0, K2 = _window(near.any(axis=1), c2)
    idx1 = i0[:, None] + np.arange(K1)
    idx2 = j0[:, None] + np.arange(K2)
    X = s[:, :1] - u[np.c_[idx1, idx1[:, -1] + 1]]
    Y = s[:, 1:] - v[np.c_[idx2, idx2[:, -1] + 1]]
    # source points on a grid line: make that line exact
    X = np.where(np.abs(X) < 1e-13 * np.diff(u).min(), 0.0, X)
    Y = np.where(np.abs(Y) < 1e-13 * np.diff(v).min(), 0.0, Y)
    F = corner_integrals(exp, X, Y, q1, q2, task)
    cm = F[..., :-1, :-1] - F[..., 1:, :-1] - F[..., :-1, 1:] + F[..., 1:, 1:]     # (T, q1, q2, K1, K2)
    cm *= near[np.arange(T)[:, None, None], idx1[:, :, None], idx2[:, None, :]][:, None, None]
    P1 = _shifted(r1.cell_poly, h1, u, idx1, s[:, 0])                              # (T, nu1, q1, K1)
    P2 = _shifted(r2.cell_poly, h2, v, idx2, s[:, 1])
    M = cm.transpose(0, 1, 3, 2, 4).reshape(T, (q1 + 1) * K1, (q2 + 1) * K2)
    return P1.reshape(T, P1.shape[1], -1) @ M @ P2.reshape(T, P2.shape[1], -1).transpose(0, 2, 1)


def _near_cells(s: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Cells within NEAR_CELLS cell sizes of each point s (T, 2)."""
    d1 = np.maximum(np.maximum(u[None, :-1] - s[:, :1], s[:, :1] - u[None, 1:]), 0.0)
    d2 = np.maximum(np.maximum(v[None, :-1] - s[:, 1:], s[:, 1:] - v[None, 1:]), 0.0)
    size = np.maximum(np.diff(u)[:, None], np.diff(v)[None, :])
    return d1[:, :, None] ** 2 + d2[:, None, :] ** 2 < (NEAR_CELLS * size) ** 2


def _shifted(poly: np.ndarray, h: float, breaks: np.ndarray, idx: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Re-expand the cell polynomials of cells ``idx`` (T, K) about the points s.

    Returns P (T, nu, q, K) with  f_a(t) = sum_q P[t, a, q, k] (t - s_t)^q  on cell idx[t, k].
    """
    Q = poly.shape[1]
    T, K = idx.shape
    S = np.zeros((T, Q, Q, K))
    d = s[:, None] - breaks[idx]                      # (T, K)
    for q in range(Q):
        for p in range(q + 1):
            S[:, q, p] = comb(q, p) * h ** (-q) * d ** (q - p)
    return np.einsum("aqtk,tqpk->tapk", poly[:, :, idx], S, optimize=True)


def singular_rule(g_samples, tau1, tau2, s, exp: KernelExpansion, p=2) -> complex:
    """Approximation of int U^m_s(s - t) g(t) B(t) dt from samples of g."""
    g = np.asarray(g_samples)
    W = singular_weights(exp, np.atleast_2d(s), tau1, tau2, p, g.shape, task=np.array([0]))[0]
    return np.sum(W * g)


def basic_moments(exp: KernelExpansion, cell, s, q) -> float:
    """int_cell U^m_s(s - t) (t1 - s1)^q1 (t2 - s2)^q2 dt for one cell."""
    (a1, b1), (a2, b2) = cell
    q1, q2 = q
    cm = cell_moments(exp, np.atleast_2d(s), np.array([a1, b1], float), np.array([a2, b2], float), q1, q2,
                      task=np.array([0]))
    return float(cm[0, q1, q2, 0, 0])


def moment_recursion(exp: KernelExpansion, knots1, deg1, knots2, deg2, s) -> np.ndarray:
    """Moments of U^m_s against all product B-splines of degrees (deg1, deg2)."""
    return bspline_moments(exp, np.atleast_2d(s), np.asarray(knots1, float), deg1,
                           np.asarray(knots2, float), deg2, task=np.array([0]))[0]


# thresholds ------------------------------------------------------------

def superconvergence_index(p: int) -> int:
    return 1 if p % 2 == 0 else 0


def eta(h1: float, h2: float, p1: int, p2: int) -> float:
    e1 = h1 ** (1.0 / (2 * (p1 + superconvergence_index(p1) + 2)))
    e2 = h2 ** (1.0 / (2 * (p2 + superconvergence_index(p2) + 2)))
    return max(e1, e2)


@dataclass(frozen=True)
class ThresholdConfig:
    c: float
    delta: tuple          # per patch
    eta: tuple            # per patch: array over supports

    def threshold(self, patch: int) -> float:
        return self.c * self.delta[patch]


def build_thresholds(supports_per_patch, p, c: float) -> ThresholdConfig:
    """``supports_per_patch[k]`` is an array (n, 2) of support widths (H1, H2)."""
    if not 0.0 < c < 1.0:
        raise ValueError("threshold constant c must lie in (0, 1)")
    p1, p2 = np.broadcast_to(p, 2)
    deltas, etas = [], []
    for widths in supports_per_patch:
        widths = np.atleast_2d(widths)
        e = np.array([eta(h1, h2, p1, p2) for h1, h2 in widths])
        etas.append(e)
        deltas.append(float(e.max()))
    return ThresholdConfig(float(c), tuple(deltas), tuple(etas))


def classify(r_min: float, threshold: float, s_in_support: bool) -> IntegrationClass:
    """Integration class of a (source, support) pair from scaled distance."""
    if s_in_support:
        return IntegrationClass.SINGULAR
    if r_min <= threshold:
        return IntegrationClass.NEARLY_SINGULAR
    return IntegrationClass.REGULAR
