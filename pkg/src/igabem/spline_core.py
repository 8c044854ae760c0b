"""Univariate and tensor-product B-spline tools.

Everything here works on plain knot arrays so that both the patch level
spaces (knots in [0, 1]) and the small local spaces living on a single
support (knots in [a, b]) share the same code.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


class SplineError(ValueError):
    """Raised for invalid knot vectors, parameters or incompatible spaces."""


def _as_knots(knots) -> np.ndarray:
    return np.asarray(knots, dtype=float)


def check_clamped(knots, degree: int, unit: bool = True) -> None:
    t = _as_knots(knots)
    if degree < 0:
        raise SplineError("degree must be nonnegative")
    if t.ndim != 1 or t.size < 2 * (degree + 1):
        raise SplineError("knot vector too short for degree %d" % degree)
    if np.any(np.diff(t) < 0):
        raise SplineError("knots must be nondecreasing")
    if np.any(t[: degree + 1] != t[0]) or np.any(t[-degree - 1:] != t[-1]):
        raise SplineError("knot vector is not clamped")
    if not t[-1] > t[0]:
        raise SplineError("empty parameter domain")
    if unit and (t[0] < 0.0 or t[-1] > 1.0):
        raise SplineError("knots must lie in [0, 1]")
    _, counts = np.unique(t[degree + 1: -degree - 1], return_counts=True)
    if counts.size and counts.max() > degree + 1:
        raise SplineError("interior knot multiplicity exceeds degree + 1")


@dataclass(frozen=True)
class KnotVector:
    """Clamped knot vector on [0, 1] together with its degree."""

    entries: tuple
    degree: int

    def __init__(self, entries, degree: int):
        arr = _as_knots(entries)
        check_clamped(arr, int(degree))
        object.__setattr__(self, "entries", tuple(float(v) for v in arr))
        object.__setattr__(self, "degree", int(degree))

    @classmethod
    def uniform(cls, n_elements: int, degree: int) -> "KnotVector":
        if n_elements < 1:
            raise SplineError("need at least one element")
        inner = np.linspace(0.0, 1.0, n_elements + 1)[1:-1]
        return cls(np.r_[np.zeros(degree + 1), inner, np.ones(degree + 1)], degree)

    @classmethod
    def from_breakpoints(cls, breaks, degree: int) -> "KnotVector":
        b = np.asarray(breaks, dtype=float)
        return cls(np.r_[np.full(degree, b[0]), b, np.full(degree, b[-1])], degree)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.entries)

    @property
    def n_basis(self) -> int:
        return len(self.entries) - self.degree - 1

    @property
    def breakpoints(self) -> np.ndarray:
        return np.unique(self.array)

    @property
    def elements(self) -> np.ndarray:
        b = self.breakpoints
        return np.stack([b[:-1], b[1:]], axis=1)

    @property
    def h(self) -> float:
        return float(np.max(np.diff(self.breakpoints)))

    def support(self, i: int) -> tuple:
        t = self.entries
        return t[i], t[i + self.degree + 1]

    def local_knots(self, i: int) -> np.ndarray:
        return self.array[i: i + self.degree + 2]

    def greville(self, improved: bool = False, omega: float = 0.5) -> np.ndarray:
        return greville(self.array, self.degree, improved=improved, omega=omega)

    def eval(self, t, extrapolate: bool = False):
        return eval_basis(self.array, self.degree, t, extrapolate=extrapolate)

    def reversed(self) -> "KnotVector":
        return KnotVector(1.0 - self.array[::-1], self.degree)


def find_span(knots, degree: int, t) -> np.ndarray:
    """Index i with knots[i] <= t < knots[i+1], clamped to the valid range.

    Points outside the domain get the first/last nonempty span, which
    makes the returned polynomial piece usable for extrapolation.
    """
    k = _as_knots(knots)
    n = k.size - degree - 1
    t = np.asarray(t, dtype=float)
    span = np.searchsorted(k, t, side="right") - 1
    span = np.clip(span, degree, n - 1)
    # right end of the domain belongs to the last nonempty span
    last = n - 1
    while k[last + 1] == k[last] and last > degree:
        last -= 1
    first = degree
    while k[first + 1] == k[first] and first < n - 1:
        first += 1
    span = np.where(t >= k[last + 1], last, span)
    span = np.where(t < k[first], first, span)
    return span


def basis_funs(knots, degree: int, t, nders: int = 0, span=None):
    """Nonzero basis functions and derivatives at parameters ``t``.

    Returns ``(span, ders)`` with ``ders`` of shape ``(len(t), nders+1,
    degree+1)``; ``ders[:, k, r]`` is the k-th derivative of basis
    function ``span - degree + r``.
    """
    k = _as_knots(knots)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    p = degree
    if span is None:
        span = find_span(k, p, t)
    span = np.asarray(span)
    npt = t.size
    ndu = np.zeros((npt, p + 1, p + 1))
    ndu[:, 0, 0] = 1.0
    left = np.zeros((npt, p + 1))
    right = np.zeros((npt, p + 1))
    for j in range(1, p + 1):
        left[:, j] = t - k[span + 1 - j]
        right[:, j] = k[span + j] - t
        saved = np.zeros(npt)
        for r in range(j):
            ndu[:, j, r] = right[:, r + 1] + left[:, j - r]
            temp = ndu[:, r, j - 1] / ndu[:, j, r]
            ndu[:, r, j] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        ndu[:, j, j] = saved
    nd = min(nders, p)
    ders = np.zeros((npt, nders + 1, p + 1))
    ders[:, 0, :] = ndu[:, :, p]
    if nd > 0:
        a = np.zeros((npt, 2, p + 1))
        for r in range(p + 1):
            s1, s2 = 0, 1
            a[:] = 0.0
            a[:, 0, 0] = 1.0
            for kk in range(1, nd + 1):
                d = np.zeros(npt)
                rk = r - kk
                pk = p - kk
                if r >= kk:
                    a[:, s2, 0] = a[:, s1, 0] / ndu[:, pk + 1, rk]
                    d = a[:, s2, 0] * ndu[:, rk, pk]
                j1 = 1 if rk >= -1 else -rk
                j2 = kk - 1 if r - 1 <= pk else p - r
                for j in range(j1, j2 + 1):
                    a[:, s2, j] = (a[:, s1, j] - a[:, s1, j - 1]) / ndu[:, pk + 1, rk + j]
                    d = d + a[:, s2, j] * ndu[:, rk + j, pk]
                if r <= pk:
                    a[:, s2, kk] = -a[:, s1, kk - 1] / ndu[:, pk + 1, r]
                    d = d + a[:, s2, kk] * ndu[:, r, pk]
                ders[:, kk, r] = d
                s1, s2 = s2, s1
        fac = p
        for kk in range(1, nd + 1):
            ders[:, kk, :] *= fac
            fac *= p - kk
    return span, ders


def eval_basis(knots, degree: int, t, extrapolate: bool = False):
    """Values of the ``degree+1`` nonzero basis functions at ``t``.

    Returns ``(values, span)``; the values belong to basis functions
    ``span-degree .. span``.  Scalars give 1-D values, arrays give rows.
    """
    k = _as_knots(knots)
    scalar = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    if not extrapolate:
        tol = 1e-14 * max(1.0, abs(k[-1]))
        if np.any(tt < k[0] - tol) or np.any(tt > k[-1] + tol):
            raise SplineError("parameter outside the spline domain")
        tt = np.clip(tt, k[0], k[-1])
    span, ders = basis_funs(k, degree, tt)
    vals = ders[:, 0, :]
    if scalar:
        return vals[0], int(span[0])
    return vals, span


def collocation_matrix(knots, degree: int, x, nders: int = 0, extrapolate: bool = False) -> np.ndarray:
    """Dense matrix of all basis functions (or a derivative) at points ``x``."""
    k = _as_knots(knots)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not extrapolate:
        x = np.clip(x, k[0], k[-1])
    n = k.size - degree - 1
    span, ders = basis_funs(k, degree, x, nders)
    out = np.zeros((x.size, n))
    rows = np.repeat(np.arange(x.size), degree + 1)
    cols = (span[:, None] - degree + np.arange(degree + 1)[None, :]).ravel()
    np.add.at(out, (rows, cols), ders[:, nders, :].ravel())
    return out


def greville(knots, degree: int, improved: bool = False, omega: float = 0.5) -> np.ndarray:
    """Greville abscissas; ``improved`` moves the two end points inward."""
    if improved and not 0.0 < omega < 1.0:
        raise SplineError("omega must lie in (0, 1)")
    k = _as_knots(knots)
    n = k.size - degree - 1
    if degree == 0:
        g = 0.5 * (k[:-1] + k[1:])
    else:
        c = np.cumsum(np.r_[0.0, k])
        g = (c[1 + degree: n + 1 + degree] - c[1:n + 1]) / degree
        # cumulative sums may push the end points past the knot range
        g = np.clip(g, k[0], k[-1])
    if improved and n >= 2 and degree > 0:
        g = g.copy()
        g0, g1 = g[0], g[1]
        gl, gm = g[-1], g[-2]
        g[0] = g0 + omega * (g1 - g0)
        g[-1] = gl - omega * (gl - gm)
    return g


def bspline_integrals(knots, degree: int) -> np.ndarray:
    """Exact integrals |supp B_i| / (degree + 1) of all basis functions."""
    k = _as_knots(knots)
    n = k.size - degree - 1
    return (k[degree + 1: degree + 1 + n] - k[:n]) / (degree + 1)


def bspline_integral(index, degrees, knots_per_direction) -> float:
    """Integral of a tensor-product B-spline given its index and knot arrays."""
    val = 1.0
    for i, q, k in zip(np.atleast_1d(index), np.atleast_1d(degrees), knots_per_direction):
        k = _as_knots(k)
        val *= (k[i + q + 1] - k[i]) / (q + 1)
    return float(val)


def single_bspline(tau, t) -> np.ndarray:
    """Values of the single B-spline with local knots ``tau`` at ``t``.

    The right end of the support is included so that clamped end
    functions take their end value.
    """
    tau = _as_knots(tau)
    d = tau.size - 2
    t = np.atleast_1d(np.asarray(t, dtype=float))
    ncell = tau.size - 1
    b = np.zeros((t.size, ncell))
    for i in range(ncell):
        if tau[i + 1] > tau[i]:
            b[:, i] = (t >= tau[i]) & (t < tau[i + 1])
    # close the last nonempty cell on the right
    last = max(i for i in range(ncell) if tau[i + 1] > tau[i])
    b[t == tau[last + 1], last] = 1.0
    for r in range(1, d + 1):
        nb = np.zeros((t.size, ncell - r))
        for i in range(ncell - r):
            den1 = tau[i + r] - tau[i]
            den2 = tau[i + r + 1] - tau[i + 1]
            if den1 > 0:
                nb[:, i] += (t - tau[i]) / den1 * b[:, i]
            if den2 > 0:
                nb[:, i] += (tau[i + r + 1] - t) / den2 * b[:, i + 1]
        b = nb
    return b[:, 0]


def clamped_local_knots(tau, degree: int) -> np.ndarray:
    """Clamped knots of the local space spanned on supp of a single B-spline."""
    tau = _as_knots(tau)
    a, b = tau[0], tau[-1]
    inner = tau[(tau > a) & (tau < b)]
    return np.r_[np.full(degree + 1, a), inner, np.full(degree + 1, b)]


def _continuity(knots, degree: int, x: float, tol: float) -> int:
    mult = int(np.sum(np.abs(_as_knots(knots) - x) <= tol))
    return degree - mult


def product_knots(qi_knots, p: int, tau, d: int) -> np.ndarray:
    """Knots of the degree ``p+d`` space containing (spline of degree p) x B_tau.

    ``qi_knots`` is a clamped knot vector on the support of the single
    B-spline with local knots ``tau``.
    """
    qk = _as_knots(qi_knots)
    tau = _as_knots(tau)
    a, b = tau[0], tau[-1]
    if abs(qk[0] - a) > 1e-12 * (b - a) or abs(qk[-1] - b) > 1e-12 * (b - a):
        raise SplineError("QI space and trial function have different domains")
    tol = 1e-12 * (b - a)
    pts = np.unique(np.r_[qk[(qk > a + tol) & (qk < b - tol)], tau[(tau > a + tol) & (tau < b - tol)]])
    # merge values that only differ by rounding
    if pts.size:
        keep = np.r_[True, np.diff(pts) > tol]
        pts = pts[keep]
    q = p + d
    inner = []
    for x in pts:
        c = min(_continuity(qk, p, x, tol) if np.any(np.abs(qk - x) <= tol) else q,
                _continuity(tau[1:-1], d, x, tol) if np.any(np.abs(tau[1:-1] - x) <= tol) else q)
        mult = q - c
        inner.extend([x] * mult)
    return np.r_[np.full(q + 1, a), inner, np.full(q + 1, b)]


@dataclass(frozen=True)
class ProductCoefficientMatrix:
    """Coefficients of B_{i,p} * B_trial in the product B-spline basis.

    ``G[i, k]`` is the coefficient of product basis function ``k`` in the
    expansion of the product of QI basis function ``i`` with the trial
    B-spline, so a QI coefficient vector ``lam`` yields product
    coefficients ``G.T @ lam``.
    """

    G: np.ndarray
    p: int
    d: int
    knots: np.ndarray
    qi_knots: np.ndarray
    trial_knots: np.ndarray

    @property
    def degree(self) -> int:
        return self.p + self.d

    def integrals(self) -> np.ndarray:
        return bspline_integrals(self.knots, self.degree)


def product_matrix(p: int, d: int, qi_knots, tau) -> ProductCoefficientMatrix:
    """Product coefficient matrix for one direction.

    Computed by least-squares collocation at q + 1 interior points of
    every cell; the product lies in the space, so the fit is exact up to
    rounding even when the space has discontinuities.
    """
    qk = _as_knots(qi_knots)
    tau = _as_knots(tau)
    if tau.size != d + 2:
        raise SplineError("trial B-spline needs d + 2 local knots")
    pk = product_knots(qk, p, tau, d)
    q = p + d
    u = np.unique(pk)
    c = 0.5 - 0.5 * np.cos(np.pi * (np.arange(q + 1) + 0.5) / (q + 1))
    x = (u[:-1, None] + np.diff(u)[:, None] * c).ravel()
    coll = collocation_matrix(pk, q, x)
    qi_vals = collocation_matrix(qk, p, x)
    trial = single_bspline(tau, x)
    rhs = qi_vals * trial[:, None]
    g = np.linalg.lstsq(coll, rhs, rcond=None)[0].T
    g[np.abs(g) < 1e-15] = 0.0
    return ProductCoefficientMatrix(g, p, d, pk, qk, tau)


@dataclass(frozen=True)
class TensorSplineSpace:
    """Tensor-product B-spline space on [0, 1]^2 with lexicographic indices.

    Basis function ``(i1, i2)`` has flat index ``i1 * n2 + i2``, the same
    C-order used for sample grids of shape ``(n1, n2)``.
    """

    knots_u: KnotVector
    knots_v: KnotVector
    index_set: tuple = field(init=False)

    def __post_init__(self):
        n1, n2 = self.knots_u.n_basis, self.knots_v.n_basis
        idx = tuple((i1, i2) for i1 in range(n1) for i2 in range(n2))
        object.__setattr__(self, "index_set", idx)

    @classmethod
    def uniform(cls, n1: int, n2: int, d1: int, d2: int | None = None) -> "TensorSplineSpace":
        d2 = d1 if d2 is None else d2
        return cls(KnotVector.uniform(n1, d1), KnotVector.uniform(n2, d2))

    @property
    def degrees(self) -> tuple:
        return self.knots_u.degree, self.knots_v.degree

    @property
    def shape(self) -> tuple:
        return self.knots_u.n_basis, self.knots_v.n_basis

    @property
    def dim(self) -> int:
        return self.knots_u.n_basis * self.knots_v.n_basis

    def flat(self, i1: int, i2: int) -> int:
        return i1 * self.knots_v.n_basis + i2

    def unflat(self, j: int) -> tuple:
        return divmod(j, self.knots_v.n_basis)

    def support(self, j: int) -> tuple:
        i1, i2 = self.unflat(j)
        return self.knots_u.support(i1), self.knots_v.support(i2)

    def eval(self, t1, t2, extrapolate: bool = False):
        """Nonzero basis values at one point: ``(values (d1+1, d2+1), spans)``."""
        v1, s1 = self.knots_u.eval(t1, extrapolate)
        v2, s2 = self.knots_v.eval(t2, extrapolate)
        return np.outer(v1, v2), (s1, s2)

    def eval_all(self, t1, t2) -> np.ndarray:
        """Matrix of all basis functions (columns, flat order) at points."""
        c1 = collocation_matrix(self.knots_u.array, self.knots_u.degree, t1)
        c2 = collocation_matrix(self.knots_v.array, self.knots_v.degree, t2)
        return (c1[:, :, None] * c2[:, None, :]).reshape(c1.shape[0], -1)


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w
