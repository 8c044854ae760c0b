"""Sample-based spline quasi-interpolation on uniform nodes.

The operator maps samples of a function at ``nu`` uniformly spaced nodes
(end points included) to the coefficients of a degree ``p`` spline on the
same interval.  Coefficients are obtained by spline interpolation at the
nodes in the space whose interior knots are averages of ``p``
consecutive nodes, so the operator is a projector onto that space and
has the full approximation order ``p + 1``.  The bivariate operator is
the tensor product of two univariate ones.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spline_core import SplineError, collocation_matrix


class QiConfigError(SplineError):
    pass


def averaged_knots(nodes: np.ndarray, p: int) -> np.ndarray:
    """Clamped knot vector whose spline space interpolates at ``nodes``."""
    x = np.asarray(nodes, dtype=float)
    nu = x.size
    if p == 0:
        inner = 0.5 * (x[:-1] + x[1:])[: nu - 1]
    else:
        c = np.cumsum(np.r_[0.0, x])
        # average of nodes j+1 .. j+p for j = 0 .. nu-p-2
        j = np.arange(nu - p - 1)
        inner = (c[j + p + 1] - c[j + 1]) / p
    return np.r_[np.full(p + 1, x[0]), inner, np.full(p + 1, x[-1])]


@dataclass(frozen=True)
class QiRule1D:
    """Univariate operator on [0, 1]; ``lam = C.T @ f``."""

    p: int
    nu: int
    nodes: np.ndarray
    knots: np.ndarray
    C: np.ndarray


@lru_cache(maxsize=None)
def qi_rule_1d(p: int, nu: int) -> QiRule1D:
    if p < 0:
        raise QiConfigError("QI degree must be nonnegative")
    if nu < p + 2:
        raise QiConfigError("need at least p + 2 = %d nodes, got %d" % (p + 2, nu))
    x = np.linspace(0.0, 1.0, nu)
    k = averaged_knots(x, p)
    coll = collocation_matrix(k, p, x)
    cmat = np.linalg.inv(coll).T
    for arr in (x, k, cmat):
        arr.setflags(write=False)
    return QiRule1D(p, nu, x, k, cmat)


@dataclass(frozen=True)
class QiOperator:
    """Tensor-product quasi-interpolation operator on a rectangle."""

    degrees: tuple
    counts: tuple
    domain: tuple

    @property
    def rules(self) -> tuple:
        return tuple(qi_rule_1d(p, n) for p, n in zip(self.degrees, self.counts))

    @property
    def nodes(self) -> tuple:
        return tuple(a + (b - a) * r.nodes for r, (a, b) in zip(self.rules, self.domain))

    @property
    def knots(self) -> tuple:
        return tuple(a + (b - a) * r.knots for r, (a, b) in zip(self.rules, self.domain))

    @property
    def shape(self) -> tuple:
        return tuple(self.counts)

    @property
    def matrix(self) -> np.ndarray:
        """Composed dense operator (samples x coefficients), flat C order."""
        c1, c2 = (r.C for r in self.rules)
        return np.kron(c1, c2)

    def apply(self, samples) -> np.ndarray:
        return qi_apply(self, samples)

    def evaluate(self, coeffs, t1, t2) -> np.ndarray:
        """Evaluate the spline with coefficient grid ``coeffs`` on a tensor grid."""
        (k1, k2), (p1, p2) = self.knots, self.degrees
        b1 = collocation_matrix(k1, p1, t1)
        b2 = collocation_matrix(k2, p2, t2)
        return b1 @ np.asarray(coeffs).reshape(self.counts) @ b2.T


def build_qi(p1: int, p2: int, nu1: int, nu2: int, domain=((0.0, 1.0), (0.0, 1.0))) -> QiOperator:
    for p, n in ((p1, nu1), (p2, nu2)):
        qi_rule_1d(int(p), int(n))
    dom = tuple((float(a), float(b)) for a, b in domain)
    return QiOperator((int(p1), int(p2)), (int(nu1), int(nu2)), dom)


def qi_apply(op: QiOperator, samples) -> np.ndarray:
    """Spline coefficients from a sample grid ``(nu1, nu2)`` or flat vector."""
    f = np.asarray(samples)
    n1, n2 = op.counts
    if f.size != n1 * n2:
        raise QiConfigError("expected %d samples, got %d" % (n1 * n2, f.size))
    c1, c2 = (r.C for r in op.rules)
    lam = c1.T @ f.reshape(n1, n2) @ c2
    return lam if np.ndim(samples) == 2 else lam.ravel()
