"""Moments of the extracted kernel terms against B-splines.

Basic moments over a cell are obtained from signed "corner" integrals

    Phi(X, Y) = int_0^X int_0^Y H(z) dz2 dz1

of each homogeneous term H (degree a > -2).  The divergence theorem
applied to the field z H(z) turns Phi into two line integrals,

    Phi(X, Y) = [X int_0^Y H(X, z2) dz2 + Y int_0^X H(z1, Y) dz1] / (a + 2),

whose integrands are analytic with a complex conjugate pair of
singularities.  They are integrated with Gauss-Legendre on pieces graded
geometrically toward the real projection of that pair, which gives
moments accurate to rounding.  B-spline moments of any degree follow
from cell moments by the Cox-de Boor recursion applied in each
direction.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .expansion import KernelExpansion
from .spline_core import gauss_legendre

N_GAUSS = 12


@njit(cache=True)
def _piece(u, v, fixed, along_second, e, f, g, coef, degs, expo, qmax, xg, wg, acc):
    """Gauss-Legendre on [u, v], accumulating sum_k term_k (-z)^q into acc."""
    half = 0.5 * (v - u)
    mid = 0.5 * (v + u)
    m = degs.shape[0]
    for ig in range(xg.shape[0]):
        z = mid + half * xg[ig]
        wt = half * wg[ig]
        if along_second:
            z1 = fixed
            z2 = z
        else:
            z1 = z
            z2 = fixed
        r2 = e * z1 * z1 + 2.0 * f * z1 * z2 + g * z2 * z2
        inv_r = 1.0 / np.sqrt(r2)
        for k in range(m):
            n = degs[k]
            # homogeneous numerator sum_a c_a z1^a z2^(n-a)
            p = 0.0
            z1a = 1.0
            for a in range(n + 1):
                z2b = 1.0
                for _ in range(n - a):
                    z2b *= z2
                p += coef[k, a] * z1a * z2b
                z1a *= z1
            val = p * wt
            for _ in range(-expo[k]):
                val *= inv_r
            mono = 1.0
            for q in range(qmax + 1):
                acc[k, q] += val * mono
                mono *= -z


@njit(cache=True)
def _segment_integrals(fixed, c, d, task, along_second, metric, numer, degs, expo, qmax, xg, wg, out):
    nseg = c.shape[0]
    m = degs.shape[0]
    acc = np.zeros((m, qmax + 1))
    for s in range(nseg):
        lo = c[s]
        hi = d[s]
        if not hi > lo:
            continue
        x = fixed[s]
        if x == 0.0:
            continue
        t = task[s]
        e = metric[t, 0]
        f = metric[t, 1]
        g = metric[t, 2]
        det = np.sqrt(max(e * g - f * f, 0.0))
        if along_second:
            zeta = -f * x / g
            w = abs(x) * det / g
        else:
            zeta = -f * x / e
            w = abs(x) * det / e
        coef = numer[t]
        acc[:, :] = 0.0
        # up to two sub-intervals, each graded away from zeta
        for part in range(2):
            if zeta > lo and zeta < hi:
                u = lo if part == 0 else zeta
                v = zeta if part == 0 else hi
            else:
                if part == 1:
                    break
                u = lo
                v = hi
            if zeta >= v:
                # grade toward the right end: walk leftwards from v
                dist = max(zeta - v, w)
                if dist <= 0.0:
                    continue
                b = v
                a = max(u, zeta - 2.0 * dist)
                step = dist
                while True:
                    _piece(a, b, x, along_second, e, f, g, coef, degs, expo, qmax, xg, wg, acc)
                    if a <= u:
                        break
                    step *= 2.0
                    b = a
                    a = max(u, zeta - 2.0 * step)
            else:
                dist = max(u - zeta, w)
                if dist <= 0.0:
                    continue
                a = u
                b = min(v, zeta + 2.0 * dist)
                step = dist
                while True:
                    _piece(a, b, x, along_second, e, f, g, coef, degs, expo, qmax, xg, wg, acc)
                    if b >= v:
                        break
                    step *= 2.0
                    a = b
                    b = min(v, zeta + 2.0 * step)
        out[s, :, :] = acc


@njit(cache=True)
def _masked_grid(metric, numer, degs, expo, task, s, g1, g2, near, ng, out):
    """Expansion values at s - (g1 x g2), zero on cells flagged near."""
    m = degs.shape[0]
    for t in range(s.shape[0]):
        tk = task[t]
        e = metric[tk, 0]
        f = metric[tk, 1]
        g = metric[tk, 2]
        for i in range(g1.shape[0]):
            z1 = s[t, 0] - g1[i]
            ci = i // ng
            for j in range(g2.shape[0]):
                if near[t, ci, j // ng]:
                    out[t, i, j] = 0.0
                    continue
                z2 = s[t, 1] - g2[j]
                inv_r = 1.0 / np.sqrt(e * z1 * z1 + 2.0 * f * z1 * z2 + g * z2 * z2)
                val = 0.0
                for k in range(m):
                    n = degs[k]
                    p = 0.0
                    z1a = 1.0
                    for a in range(n + 1):
                        z2b = 1.0
                        for _ in range(n - a):
                            z2b *= z2
                        p += numer[tk, k, a] * z1a * z2b
                        z1a *= z1
                    for _ in range(-expo[k]):
                        p *= inv_r
                    val += p
                out[t, i, j] = val


def far_grid(exp: KernelExpansion, s: np.ndarray, g1: np.ndarray, g2: np.ndarray, near: np.ndarray,
             ng: int, task=None) -> np.ndarray:
    """U^m_s(s - t) on the grid g1 x g2 (T, n1, n2), zero on the cells marked ``near``.

    Grid points are grouped ``ng`` per cell in each direction.
    """
    s = np.ascontiguousarray(np.atleast_2d(s), dtype=float)
    task = np.arange(s.shape[0]) if task is None else np.asarray(task)
    met, numer, degs, expo = _pack(exp)
    out = np.empty((s.shape[0], g1.size, g2.size))
    _masked_grid(met, numer, degs, expo, task.astype(np.int64), s, np.ascontiguousarray(g1, dtype=float),
                 np.ascontiguousarray(g2, dtype=float), np.ascontiguousarray(near), int(ng), out)
    return out


def _pack(exp: KernelExpansion):
    m = exp.m
    T = exp.size
    degs = np.array([p.shape[-1] - 1 for p in exp.numerators], dtype=np.int64)
    numer = np.zeros((T, m, degs.max() + 1))
    for k, p in enumerate(exp.numerators):
        numer[:, k, : p.shape[-1]] = p
    expo = np.array([exp.exponent(k) for k in range(1, m + 1)], dtype=np.int64)
    met = np.stack([exp.metric[:, 0, 0], exp.metric[:, 0, 1], exp.metric[:, 1, 1]], axis=1)
    return np.ascontiguousarray(met), numer, degs, expo


def _line_integrals(exp: KernelExpansion, task, fixed, ends, along_second: bool, qmax: int, packed=None):
    """int_0^{end} H_k(line) (-z)^q dz for all lines, ends, terms and q.

    ``fixed`` (T, nl) are the fixed coordinates of the lines, ``ends`` (T,
    ne) the upper limits (shared by all lines of a task).  Returns array
    (T, nl, ne, m, qmax+1).
    """
    T, nl = fixed.shape
    ne = ends.shape[1]
    m = exp.m
    met, numer, degs, expo = packed if packed is not None else _pack(exp)
    pts = np.concatenate([ends, np.zeros((T, 1))], axis=1)
    order = np.argsort(pts, axis=1, kind="stable")
    sp = np.take_along_axis(pts, order, axis=1)
    inv = np.argsort(order, axis=1)
    c = np.broadcast_to(sp[:, None, :-1], (T, nl, ne)).ravel()
    d = np.broadcast_to(sp[:, None, 1:], (T, nl, ne)).ravel()
    fx = np.broadcast_to(fixed[:, :, None], (T, nl, ne)).ravel()
    tk = np.broadcast_to(np.asarray(task)[:, None, None], (T, nl, ne)).ravel()
    xg, wg = gauss_legendre(N_GAUSS)
    seg_vals = np.zeros((c.size, m, qmax + 1))
    _segment_integrals(np.ascontiguousarray(fx), np.ascontiguousarray(c), np.ascontiguousarray(d),
                       np.ascontiguousarray(tk).astype(np.int64), along_second, met, numer, degs, expo,
                       qmax, xg, wg, seg_vals)
    seg_vals = seg_vals.reshape(T, nl, ne, m, qmax + 1)
    cum = np.concatenate([np.zeros((T, nl, 1, m, qmax + 1)), np.cumsum(seg_vals, axis=2)], axis=2)
    pos_end = inv[:, :ne]
    pos_zero = inv[:, ne]
    tix = np.arange(T)[:, None]
    at_end = cum[tix, :, pos_end]  # (T, ne, nl, m, q)
    at_zero = cum[np.arange(T), :, pos_zero]  # (T, nl, m, q)
    return np.moveaxis(at_end, 1, 2) - at_zero[:, :, None]


def corner_integrals(exp: KernelExpansion, X: np.ndarray, Y: np.ndarray, q1max: int, q2max: int,
                     task=None) -> np.ndarray:
    """Signed corner integrals Phi(X_i, Y_j) of U^m (-z1)^q1 (-z2)^q2.

    ``X`` (T, nx) and ``Y`` (T, ny); ``task`` maps rows to expansions
    (default: row t uses expansion t).  Returns (T, q1max+1, q2max+1, nx, ny).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    T = X.shape[0]
    task = np.arange(T) if task is None else np.asarray(task)
    packed = _pack(exp)
    jx = _line_integrals(exp, task, X, Y, True, q2max, packed)    # (T, nx, ny, m, q2)
    jy = _line_integrals(exp, task, Y, X, False, q1max, packed)   # (T, ny, nx, m, q1)
    jy = np.swapaxes(jy, 1, 2)                             # (T, nx, ny, m, q1)
    out = np.empty((T, q1max + 1, q2max + 1, X.shape[1], Y.shape[1]))
    _combine(X, Y, jx, jy, out)
    return out


@njit(cache=True)
def _combine(X, Y, jx, jy, out):
    """Phi = sum_k [X^(q1+1) (-1)^q1 Jx + Y^(q2+1) (-1)^q2 Jy] / (k + q1 + q2)."""
    T, Q1, Q2, nx, ny = out.shape
    m = jx.shape[3]
    for t in range(T):
        for i in range(nx):
            x = X[t, i]
            for j in range(ny):
                y = Y[t, j]
                px = x
                for a in range(Q1):
                    py = y
                    for b in range(Q2):
                        acc = 0.0
                        for k in range(m):
                            acc += (px * jx[t, i, j, k, b] + py * jy[t, i, j, k, a]) / (k + 1 + a + b)
                        out[t, a, b, i, j] = acc
                        py *= -y
                    px *= -x


def cell_moments(exp: KernelExpansion, s: np.ndarray, u: np.ndarray, v: np.ndarray, q1max: int, q2max: int,
                 task=None) -> np.ndarray:
    """Basic moments int_cell U^m_s(s - t) (t1 - s1)^q1 (t2 - s2)^q2 dt.

    ``u``, ``v`` are strictly increasing breakpoints shared by all tasks,
    ``s`` (T, 2) the expansion points.  Returns (T, q1+1, q2+1, nu-1, nv-1).
    """
    s = np.atleast_2d(s)
    X = s[:, 0, None] - u[None, :]
    Y = s[:, 1, None] - v[None, :]
    # source points on a grid line: make that line exact
    hx = np.min(np.diff(u)) if u.size > 1 else 1.0
    hy = np.min(np.diff(v)) if v.size > 1 else 1.0
    X = np.where(np.abs(X) < 1e-13 * hx, 0.0, X)
    Y = np.where(np.abs(Y) < 1e-13 * hy, 0.0, Y)
    F = corner_integrals(exp, X, Y, q1max, q2max, task)
    return F[..., :-1, :-1] - F[..., 1:, :-1] - F[..., :-1, 1:] + F[..., 1:, 1:]


@njit(cache=True)
def _recurse_task(cm, c1, c2, knots1, deg1, knots2, deg2, s1, s2, out):
    """Cox-de Boor degree raising of cell moments for one task.

    ``cm`` (q1+1, q2+1, ncell1, ncell2) are moments about s on distinct
    cells, ``c1``/``c2`` map full-knot cells to distinct cells (-1 for
    empty cells).  Each level consumes one power of (t - s).
    """
    n1c = knots1.size - 1
    n2c = knots2.size - 1
    Q1 = cm.shape[0]
    Q2 = cm.shape[1]
    M = np.zeros((Q1, Q2, n1c, n2c))
    for i in range(n1c):
        if c1[i] < 0:
            continue
        for j in range(n2c):
            if c2[j] < 0:
                continue
            for a in range(Q1):
                for b in range(Q2):
                    M[a, b, i, j] = cm[a, b, c1[i], c2[j]]
    n = n1c
    nq = Q1
    for rho in range(1, deg1 + 1):
        N = np.zeros((nq - 1, Q2, n - 1, n2c))
        for i in range(n - 1):
            den1 = knots1[i + rho] - knots1[i]
            den2 = knots1[i + rho + 1] - knots1[i + 1]
            inv1 = 1.0 / den1 if den1 > 0 else 0.0
            inv2 = 1.0 / den2 if den2 > 0 else 0.0
            a1 = s1 - knots1[i]
            a2 = knots1[i + rho + 1] - s1
            for q in range(nq - 1):
                for b in range(Q2):
                    for j in range(n2c):
                        N[q, b, i, j] = (M[q + 1, b, i, j] + a1 * M[q, b, i, j]) * inv1 \
                            + (a2 * M[q, b, i + 1, j] - M[q + 1, b, i + 1, j]) * inv2
        M = N
        n -= 1
        nq -= 1
    n1 = n
    m = n2c
    nq = Q2
    for rho in range(1, deg2 + 1):
        N = np.zeros((1, nq - 1, n1, m - 1))
        for j in range(m - 1):
            den1 = knots2[j + rho] - knots2[j]
            den2 = knots2[j + rho + 1] - knots2[j + 1]
            inv1 = 1.0 / den1 if den1 > 0 else 0.0
            inv2 = 1.0 / den2 if den2 > 0 else 0.0
            a1 = s2 - knots2[j]
            a2 = knots2[j + rho + 1] - s2
            for q in range(nq - 1):
                for i in range(n1):
                    N[0, q, i, j] = (M[0, q + 1, i, j] + a1 * M[0, q, i, j]) * inv1 \
                        + (a2 * M[0, q, i, j + 1] - M[0, q + 1, i, j + 1]) * inv2
        M = N
        m -= 1
        nq -= 1
    for i in range(out.shape[0]):
        for j in range(out.shape[1]):
            out[i, j] = M[0, 0, i, j]


@njit(cache=True)
def _recurse_all(cm, c1, c2, knots1, deg1, knots2, deg2, s, out):
    for t in range(cm.shape[0]):
        _recurse_task(cm[t], c1, c2, knots1, deg1, knots2, deg2, s[t, 0], s[t, 1], out[t])


def bspline_moments(exp: KernelExpansion, s: np.ndarray, knots1: np.ndarray, deg1: int,
                    knots2: np.ndarray, deg2: int, task=None) -> np.ndarray:
    """Moments int U^m_s(s - t) B_k1(t1) B_k2(t2) dt for all product B-splines.

    ``knots1``/``knots2`` are the (clamped) knot vectors of the product
    space.  Returns (T, n1, n2).
    """
    s = np.atleast_2d(np.asarray(s, dtype=float))
    knots1 = np.asarray(knots1, dtype=float)
    knots2 = np.asarray(knots2, dtype=float)
    u = np.unique(knots1)
    v = np.unique(knots2)
    cm = cell_moments(exp, s, u, v, deg1, deg2, task)
    c1 = np.where(np.diff(knots1) > 0, np.searchsorted(u, knots1[:-1], side="right") - 1, -1)
    c2 = np.where(np.diff(knots2) > 0, np.searchsorted(v, knots2[:-1], side="right") - 1, -1)
    out = np.empty((s.shape[0], knots1.size - deg1 - 1, knots2.size - deg2 - 1))
    _recurse_all(np.ascontiguousarray(cm), c1.astype(np.int64), c2.astype(np.int64), knots1, int(deg1),
                 knots2, int(deg2), np.ascontiguousarray(s), out)
    return out
