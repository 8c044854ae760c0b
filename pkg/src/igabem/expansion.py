"""Local expansions of the scaled layer kernels around a source parameter.

For a source parameter s and z = s - t the kernels

    U_SL(s, t) = 1 / r,        U_DL(s, t) = (F(s) - F(t)) . nu(t) / r^3

(nu = F_1 x F_2 unnormalized, r = |F(s) - F(t)|) are approximated by

    U^m_s(z) = sum_{k=1..m} R_s(z)^(1 - 2(k + g)) P^[k](z),

with R_s(z)^2 = z^T M_s z built from the first fundamental form, g = 0
for the single and 1 for the double layer, and P^[k] homogeneous of
degree 3k + 2g - 3.  Each term is homogeneous of degree k - 2 in z.

The numerators come from Taylor expansions of d(z) = F(s) - F(s - z)
and nu(s - z):

    r^2 = R^2 + c3 + c4 + ...      (c_n the degree-n part of d.d)
    d.nu = n2 + n3 + n4 + ...      (n_n the degree-n part)

Homogeneous polynomials of degree n are stored as coefficient vectors
``c[a]`` of z1^a z2^(n-a), a = 0..n, with a leading batch axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_ORDER = 3


class ExpansionError(ValueError):
    pass


# homogeneous polynomial helpers (batch axis first) -------------------

def hmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na, nb = a.shape[-1] - 1, b.shape[-1] - 1
    out = np.zeros(a.shape[:-1] + (na + nb + 1,), dtype=np.result_type(a, b))
    for i in range(na + 1):
        out[..., i: i + nb + 1] += a[..., i, None] * b
    return out


def hadd(*polys) -> np.ndarray:
    out = np.zeros_like(polys[0])
    for p in polys:
        out = out + p
    return out


def heval(c: np.ndarray, z1, z2) -> np.ndarray:
    """Evaluate homogeneous polynomials ``c`` (..., n+1) at broadcast points."""
    n = c.shape[-1] - 1
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    out = np.zeros(np.broadcast_shapes(z1.shape, z2.shape, c.shape[:-1]))
    p2 = np.ones_like(z2)
    pows2 = [p2]
    for _ in range(n):
        pows2.append(pows2[-1] * z2)
    p1 = np.ones_like(z1)
    for a in range(n + 1):
        out = out + c[..., a] * p1 * pows2[n - a]
        p1 = p1 * z1
    return out


def _taylor_parts(D: np.ndarray, shift: tuple, max_deg: int) -> list:
    """Homogeneous parts of t -> dF(s - z) for a derivative array D.

    ``D`` has shape (N, o+1, o+1, 3) with D[:, k, l] = d^(k,l) F(s).
    ``shift`` selects the derivative being expanded, e.g. (1, 0) for F_1.
    Returns a list over degree n of arrays (N, 3, n+1).
    """
    parts = []
    for n in range(max_deg + 1):
        c = np.zeros((D.shape[0], 3, n + 1))
        for a in range(n + 1):
            b = n - a
            k, l = a + shift[0], b + shift[1]
            if k + l < D.shape[1]:
                c[:, :, a] = D[:, k, l] * ((-1) ** n / (math.factorial(a) * math.factorial(b)))
        parts.append(c)
    return parts


def _vdot(parts_a, parts_b, deg: int) -> np.ndarray:
    """Degree-``deg`` part of the dot product of two vector series."""
    n = parts_a[0].shape[0]
    out = np.zeros((n, deg + 1))
    for i in range(deg + 1):
        j = deg - i
        if i < len(parts_a) and j < len(parts_b):
            out += np.einsum("nca,ncb->nab", parts_a[i], parts_b[j]).reshape(n, -1) @ _merge_matrix(i, j)
    return out


def _vcross(parts_a, parts_b, deg: int) -> np.ndarray:
    n = parts_a[0].shape[0]
    out = np.zeros((n, 3, deg + 1))
    for i in range(deg + 1):
        j = deg - i
        for ca, cb, sign, comp in ((1, 2, 1, 0), (2, 1, -1, 0), (2, 0, 1, 1), (0, 2, -1, 1), (0, 1, 1, 2), (1, 0, -1, 2)):
            prod = hmul(parts_a[i][:, ca], parts_b[j][:, cb])
            out[:, comp] += sign * prod
    return out


_MERGE = {}


def _merge_matrix(i: int, j: int) -> np.ndarray:
    """Maps the outer product of degree-i and degree-j coefficients to degree i+j."""
    key = (i, j)
    if key not in _MERGE:
        m = np.zeros(((i + 1) * (j + 1), i + j + 1))
        for a in range(i + 1):
            for b in range(j + 1):
                m[a * (j + 1) + b, a + b] = 1.0
        _MERGE[key] = m
    return _MERGE[key]


@dataclass(frozen=True)
class KernelExpansion:
    """Batch of truncated kernel expansions.

    ``metric`` has shape (N, 2, 2); ``numerators[k-1]`` has shape
    (N, 3k + 2g - 2) for the term R^(1 - 2(k + g)) P^[k].
    """

    m: int
    gamma: int
    metric: np.ndarray
    numerators: tuple

    @property
    def size(self) -> int:
        return self.metric.shape[0]

    def exponent(self, k: int) -> int:
        return 1 - 2 * (k + self.gamma)

    def homogeneity(self, k: int) -> int:
        return k - 2

    def take(self, idx) -> "KernelExpansion":
        idx = np.atleast_1d(idx)
        return KernelExpansion(self.m, self.gamma, self.metric[idx], tuple(p[idx] for p in self.numerators))

    def R2(self, z1, z2, batch=None) -> np.ndarray:
        met = self.metric if batch is None else self.metric[batch]
        e, f, g = met[..., 0, 0], met[..., 0, 1], met[..., 1, 1]
        return e * z1 * z1 + 2 * f * z1 * z2 + g * z2 * z2

    def term(self, k: int, z1, z2, batch=None) -> np.ndarray:
        """k-th term R^beta P^[k] at points; ``batch`` gathers per-point expansions."""
        num = self.numerators[k - 1]
        if batch is not None:
            num = num[batch]
        r2 = self.R2(z1, z2, batch)
        return heval(num, z1, z2) * r2 ** (0.5 * self.exponent(k))

    def __call__(self, z1, z2, batch=None) -> np.ndarray:
        """Sum of all terms; ``z`` broadcast against the batch axis."""
        out = 0.0
        for k in range(1, self.m + 1):
            out = out + self.term(k, z1, z2, batch)
        return out


def expand_from_derivatives(D: np.ndarray, m: int, gamma: int) -> KernelExpansion:
    """Expansions at a batch of points from derivative arrays (N, 5, 5, 3)."""
    if m < 1 or m > MAX_ORDER:
        raise ExpansionError("extraction order must be in 1..%d" % MAX_ORDER)
    if gamma not in (0, 1):
        raise ExpansionError("gamma must be 0 (single layer) or 1 (double layer)")
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    f1, f2 = D[:, 1, 0], D[:, 0, 1]
    metric = np.empty((n, 2, 2))
    metric[:, 0, 0] = np.sum(f1 * f1, -1)
    metric[:, 0, 1] = metric[:, 1, 0] = np.sum(f1 * f2, -1)
    metric[:, 1, 1] = np.sum(f2 * f2, -1)
    # d(z) = F(s) - F(s - z): negate the Taylor parts of F(s - z), drop degree 0
    fparts = _taylor_parts(D, (0, 0), m + 1)
    dparts = [np.zeros_like(fparts[0])] + [-p for p in fparts[1:]]
    R2 = np.stack([metric[:, 1, 1], 2 * metric[:, 0, 1], metric[:, 0, 0]], -1)
    c = {k: _vdot(dparts, dparts, k) for k in range(3, m + 2)}
    nums = []
    if gamma == 0:
        nums.append(np.ones((n, 1)))
        if m >= 2:
            nums.append(-0.5 * c[3])
        if m >= 3:
            nums.append(-0.5 * hmul(c[4], R2) + 0.375 * hmul(c[3], c[3]))
    else:
        p1 = _taylor_parts(D, (1, 0), m)
        p2 = _taylor_parts(D, (0, 1), m)
        nuparts = [_vcross(p1, p2, k) for k in range(m + 1)]
        nn = {k: _vdot(dparts, nuparts, k) for k in range(2, m + 2)}
        nums.append(nn[2])
        if m >= 2:
            nums.append(hmul(nn[3], R2) - 1.5 * hmul(nn[2], c[3]))
        if m >= 3:
            R4 = hmul(R2, R2)
            nums.append(hmul(nn[4], R4) - 1.5 * hmul(hadd(hmul(nn[3], c[3]), hmul(nn[2], c[4])), R2)
                        + 1.875 * hmul(nn[2], hmul(c[3], c[3])))
    return KernelExpansion(m, gamma, metric, tuple(nums))


def expand_kernel(patch, s, m: int, gamma: int, scale: float = 1.0) -> KernelExpansion:
    """Expansion of the (optionally scaled) kernel at one or several points ``s``."""
    s = np.atleast_2d(np.asarray(s, dtype=float))
    D = patch.derivatives(s[:, 0], s[:, 1], m + 1) / scale
    return expand_from_derivatives(D, m, gamma)
