"""NURBS patches, multi-patch closed surfaces and differential geometry.

Parameter directions are called t1 and t2.  Control nets are stored as
arrays of shape ``(n1, n2, 3)`` with the first index running along t1.
Patch edges are numbered 0: t2=0, 1: t1=1, 2: t2=1, 3: t1=0; along each
edge the free parameter increases with the free coordinate (t1 on edges
0 and 2, t2 on edges 1 and 3).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .spline_core import basis_funs, check_clamped, collocation_matrix, gauss_legendre


class GeometryError(ValueError):
    pass


def _binom(n: int, k: int) -> int:
    return math.comb(n, k)


@dataclass(frozen=True)
class FundamentalForms:
    E: float
    F: float
    G: float
    L: float
    M: float
    N: float

    @property
    def metric(self) -> np.ndarray:
        return np.array([[self.E, self.F], [self.F, self.G]])

    @property
    def second(self) -> np.ndarray:
        return np.array([[self.L, self.M], [self.M, self.N]])


def fundamental_forms_from_jets(f1, f2, f11, f12, f22) -> FundamentalForms:
    """First form from tangents, second form w.r.t. the unnormalized normal."""
    nu = np.cross(f1, f2)
    return FundamentalForms(
        float(f1 @ f1), float(f1 @ f2), float(f2 @ f2),
        float(f11 @ nu), float(f12 @ nu), float(f22 @ nu),
    )


@dataclass(frozen=True, eq=False)
class NurbsPatch:
    """Rational tensor-product surface map on [0, 1]^2."""

    degrees: tuple
    knots_u: np.ndarray
    knots_v: np.ndarray
    control_points: np.ndarray
    weights: np.ndarray
    margin: float = 0.25

    def __post_init__(self):
        ku = np.asarray(self.knots_u, dtype=float)
        kv = np.asarray(self.knots_v, dtype=float)
        cp = np.asarray(self.control_points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        p1, p2 = (int(d) for d in self.degrees)
        check_clamped(ku, p1)
        check_clamped(kv, p2)
        n1, n2 = ku.size - p1 - 1, kv.size - p2 - 1
        if cp.shape != (n1, n2, 3) or w.shape != (n1, n2):
            raise GeometryError("control net shape does not match knot vectors")
        if np.any(w <= 0):
            raise GeometryError("weights must be positive")
        if ku[0] != 0 or ku[-1] != 1 or kv[0] != 0 or kv[-1] != 1:
            raise GeometryError("patch parameter domain must be [0, 1]^2")
        object.__setattr__(self, "degrees", (p1, p2))
        object.__setattr__(self, "knots_u", ku)
        object.__setattr__(self, "knots_v", kv)
        object.__setattr__(self, "control_points", cp)
        object.__setattr__(self, "weights", w)

    @cached_property
    def homogeneous(self) -> np.ndarray:
        return np.concatenate([self.control_points * self.weights[..., None], self.weights[..., None]], axis=-1)

    @property
    def extended_domain(self) -> tuple:
        m = self.margin
        return ((-m, 1 + m), (-m, 1 + m))

    # evaluation -------------------------------------------------------

    def derivatives(self, t1, t2, order: int = 2) -> np.ndarray:
        """Partial derivatives at scattered points.

        Returns ``S`` of shape ``(npt, order+1, order+1, 3)`` where
        ``S[:, k, l]`` is d^(k+l) F / dt1^k dt2^l (entries with k+l >
        order are zero).  Points outside [0, 1]^2 are evaluated on the
        polynomial pieces of the boundary spans.
        """
        t1 = np.atleast_1d(np.asarray(t1, dtype=float))
        t2 = np.atleast_1d(np.asarray(t2, dtype=float))
        t1, t2 = np.broadcast_arrays(t1, t2)
        t1, t2 = t1.ravel(), t2.ravel()
        p1, p2 = self.degrees
        s1, d1 = basis_funs(self.knots_u, p1, t1, order)
        s2, d2 = basis_funs(self.knots_v, p2, t2, order)
        i1 = s1[:, None] - p1 + np.arange(p1 + 1)
        i2 = s2[:, None] - p2 + np.arange(p2 + 1)
        pw = self.homogeneous[i1[:, :, None], i2[:, None, :]]
        aw = np.einsum("nka,nlb,nabc->nklc", d1, d2, pw)
        return _rational(aw, order)

    def grid_derivatives(self, t1, t2, order: int = 1) -> np.ndarray:
        """Derivatives on the tensor grid ``t1 x t2``: ``(n1, n2, o+1, o+1, 3)``."""
        p1, p2 = self.degrees
        t1 = np.atleast_1d(np.asarray(t1, dtype=float))
        t2 = np.atleast_1d(np.asarray(t2, dtype=float))
        b1 = np.stack([collocation_matrix(self.knots_u, p1, t1, k, extrapolate=True) for k in range(order + 1)], 1)
        b2 = np.stack([collocation_matrix(self.knots_v, p2, t2, k, extrapolate=True) for k in range(order + 1)], 1)
        aw = np.einsum("xka,ylb,abc->xyklc", b1, b2, self.homogeneous, optimize=True)
        sh = aw.shape
        out = _rational(aw.reshape(-1, *sh[2:]), order)
        return out.reshape(sh[0], sh[1], *out.shape[1:])

    def eval_point(self, t1, t2) -> np.ndarray:
        d = self.derivatives(t1, t2, 0)[:, 0, 0]
        return d[0] if np.ndim(t1) == 0 and np.ndim(t2) == 0 else d

    def eval_jets(self, t1, t2):
        """Point, first and second partial derivatives at one parameter."""
        d = self.derivatives(t1, t2, 2)[0]
        return d[0, 0], d[1, 0], d[0, 1], d[2, 0], d[1, 1], d[0, 2]

    def normal_and_jacobian(self, t1, t2):
        d = self.derivatives(t1, t2, 1)
        nu = np.cross(d[:, 1, 0], d[:, 0, 1])
        jac = np.linalg.norm(nu, axis=-1)
        if np.any(jac < 1e-14):
            raise GeometryError("degenerate parameterization (J below 1e-14)")
        if np.ndim(t1) == 0 and np.ndim(t2) == 0:
            return nu[0], float(jac[0])
        return nu, jac

    def fundamental_forms(self, s1, s2) -> FundamentalForms:
        f, f1, f2, f11, f12, f22 = self.eval_jets(s1, s2)
        return fundamental_forms_from_jets(f1, f2, f11, f12, f22)

    def edge_point(self, edge: int, tau) -> np.ndarray:
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        one, zero = np.ones_like(tau), np.zeros_like(tau)
        t1, t2 = {0: (tau, zero), 1: (one, tau), 2: (tau, one), 3: (zero, tau)}[edge]
        return self.eval_point(t1, t2)

    def edge_knots(self, edge: int) -> np.ndarray:
        return self.knots_u if edge in (0, 2) else self.knots_v

    @cached_property
    def area(self) -> float:
        return patch_area(self)

    # distance queries -------------------------------------------------

    def min_distance(self, box, x, n_samples: int = 16, tol: float = 1e-10):
        """Minimum of ||x - F(t)|| over the rectangle ``box``; returns (r, t*)."""
        r, t = closest_points(self, np.atleast_2d(x), np.asarray(box, dtype=float)[None], n_samples, tol)
        return float(r[0]), t[0]

    def project(self, x, n_samples: int = 16, tol: float = 1e-10):
        """Closest point on the extended domain: (s_e, residual, unreliable)."""
        box = np.asarray(self.extended_domain)
        r, t = closest_points(self, np.atleast_2d(x), box[None], n_samples, tol)
        s = t[0]
        on_boundary = np.any(np.isclose(s, box[:, 0], atol=1e-9) | np.isclose(s, box[:, 1], atol=1e-9))
        size = math.sqrt(self.area)
        unreliable = bool(on_boundary and r[0] > 1e-6 * size)
        return s, float(r[0]), unreliable

    # serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "degrees": list(self.degrees),
            "knots_u": self.knots_u.tolist(),
            "knots_v": self.knots_v.tolist(),
            "control_points": self.control_points.tolist(),
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict, margin: float = 0.25) -> "NurbsPatch":
        return cls(tuple(d["degrees"]), np.array(d["knots_u"]), np.array(d["knots_v"]),
                   np.array(d["control_points"]), np.array(d["weights"]), margin)

    def transformed(self, rot: np.ndarray) -> "NurbsPatch":
        return NurbsPatch(self.degrees, self.knots_u, self.knots_v,
                          self.control_points @ np.asarray(rot).T, self.weights, self.margin)


def _rational(aw: np.ndarray, order: int) -> np.ndarray:
    """Derivatives of A/W from derivatives of the homogeneous map."""
    a = aw[..., :3]
    w = aw[..., 3]
    s = np.zeros_like(a)
    if np.any(w[:, 0, 0] <= 0):
        raise GeometryError("nonpositive rational denominator")
    for k in range(order + 1):
        for l in range(order + 1 - k):
            v = a[:, k, l].copy()
            for j in range(1, l + 1):
                v -= _binom(l, j) * w[:, 0, j, None] * s[:, k, l - j]
            for i in range(1, k + 1):
                v -= _binom(k, i) * w[:, i, 0, None] * s[:, k - i, l]
                for j in range(1, l + 1):
                    v -= _binom(k, i) * _binom(l, j) * w[:, i, j, None] * s[:, k - i, l - j]
            s[:, k, l] = v / w[:, 0, 0, None]
    return s


def patch_area(patch: NurbsPatch, n_gauss: int = 12) -> float:
    """Surface area by tensor Gauss-Legendre on the knot spans."""
    xg, wg = gauss_legendre(n_gauss)
    total = 0.0
    b1 = np.unique(patch.knots_u)
    b2 = np.unique(patch.knots_v)
    t1 = ((b1[:-1, None] + b1[1:, None]) + (b1[1:, None] - b1[:-1, None]) * xg) / 2
    w1 = ((b1[1:, None] - b1[:-1, None]) * wg / 2).ravel()
    t2 = ((b2[:-1, None] + b2[1:, None]) + (b2[1:, None] - b2[:-1, None]) * xg) / 2
    w2 = ((b2[1:, None] - b2[:-1, None]) * wg / 2).ravel()
    d = patch.grid_derivatives(t1.ravel(), t2.ravel(), 1)
    jac = np.linalg.norm(np.cross(d[:, :, 1, 0], d[:, :, 0, 1]), axis=-1)
    total = float(w1 @ jac @ w2)
    return total


def patch_scale(patch: NurbsPatch) -> float:
    """Scaling length mu = sqrt(area)."""
    return math.sqrt(patch.area)


def closest_points(patch: NurbsPatch, x: np.ndarray, boxes: np.ndarray, n_samples: int = 16,
                   tol: float = 1e-10, max_iter: int = 40):
    """Vectorized box-constrained closest point search.

    ``x`` has shape (N, 3) and ``boxes`` shape (N, 2, 2) or (1, 2, 2).
    Coarse sampling on an ``n_samples`` grid per box is followed by a
    projected, damped Newton iteration on the squared distance.  Returns
    distances (N,) and minimizers (N, 2).
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    boxes = np.broadcast_to(boxes, (n, 2, 2))
    g = (np.arange(n_samples) + 0.5) / n_samples
    g = np.r_[0.0, g, 1.0]
    lo, hi = boxes[:, :, 0], boxes[:, :, 1]
    s1 = lo[:, 0, None] + (hi[:, 0] - lo[:, 0])[:, None] * g
    s2 = lo[:, 1, None] + (hi[:, 1] - lo[:, 1])[:, None] * g
    ng = g.size
    t1 = np.repeat(s1, ng, axis=1)
    t2 = np.tile(s2, (1, ng))
    pts = patch.derivatives(t1.ravel(), t2.ravel(), 0)[:, 0, 0].reshape(n, ng * ng, 3)
    dist2 = np.sum((pts - x[:, None, :]) ** 2, axis=-1)
    best = np.argmin(dist2, axis=1)
    t = np.stack([t1[np.arange(n), best], t2[np.arange(n), best]], axis=1)
    scale = np.maximum(hi - lo, 1e-300)
    active = np.ones(n, dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        d = patch.derivatives(t[idx, 0], t[idx, 1], 2)
        diff = d[:, 0, 0] - x[idx]
        f1, f2 = d[:, 1, 0], d[:, 0, 1]
        grad = np.stack([np.sum(diff * f1, -1), np.sum(diff * f2, -1)], -1)
        h11 = np.sum(f1 * f1, -1) + np.sum(diff * d[:, 2, 0], -1)
        h12 = np.sum(f1 * f2, -1) + np.sum(diff * d[:, 1, 1], -1)
        h22 = np.sum(f2 * f2, -1) + np.sum(diff * d[:, 0, 2], -1)
        det = h11 * h22 - h12 ** 2
        gn11 = np.sum(f1 * f1, -1)
        gn12 = np.sum(f1 * f2, -1)
        gn22 = np.sum(f2 * f2, -1)
        indefinite = (det <= 0) | (h11 <= 0)
        h11 = np.where(indefinite, gn11, h11)
        h12 = np.where(indefinite, gn12, h12)
        h22 = np.where(indefinite, gn22, h22)
        # freeze coordinates sitting on a bound with the gradient pushing out
        tl, th = lo[idx], hi[idx]
        at_lo = (t[idx] <= tl + 1e-15) & (grad > 0)
        at_hi = (t[idx] >= th - 1e-15) & (grad < 0)
        fixed = at_lo | at_hi
        step = np.zeros((idx.size, 2))
        both = ~fixed[:, 0] & ~fixed[:, 1]
        det = h11 * h22 - h12 ** 2
        step[both, 0] = -(h22[both] * grad[both, 0] - h12[both] * grad[both, 1]) / det[both]
        step[both, 1] = -(h11[both] * grad[both, 1] - h12[both] * grad[both, 0]) / det[both]
        only1 = ~fixed[:, 0] & fixed[:, 1]
        step[only1, 0] = -grad[only1, 0] / h11[only1]
        only2 = fixed[:, 0] & ~fixed[:, 1]
        step[only2, 1] = -grad[only2, 1] / h22[only2]
        # damping: limit step to a quarter of the box and backtrack
        lim = 0.25 * scale[idx]
        step = np.clip(step, -lim, lim)
        f0 = np.sum(diff * diff, -1)
        lam = np.ones(idx.size)
        tnew = np.clip(t[idx] + step, tl, th)
        for _ in range(8):
            pn = patch.derivatives(tnew[:, 0], tnew[:, 1], 0)[:, 0, 0]
            fn = np.sum((pn - x[idx]) ** 2, -1)
            worse = fn > f0 * (1 + 1e-14) + 1e-300
            if not worse.any():
                break
            lam = np.where(worse, lam * 0.5, lam)
            tnew = np.where(worse[:, None], np.clip(t[idx] + lam[:, None] * step, tl, th), tnew)
        moved = np.abs(tnew - t[idx]).max(axis=1)
        t[idx] = tnew
        active[idx] = moved > tol * scale[idx].max(axis=1)
    pts = patch.derivatives(t[:, 0], t[:, 1], 0)[:, 0, 0]
    return np.linalg.norm(pts - x, axis=-1), t


# multi-patch surfaces ------------------------------------------------

@dataclass(frozen=True)
class Interface:
    patch_a: int
    edge_a: int
    patch_b: int
    edge_b: int
    reversed: bool

    def to_dict(self) -> dict:
        return {"patches": [self.patch_a, self.patch_b], "edges": [self.edge_a, self.edge_b],
                "reversed": self.reversed}


def _edge_samples(patch: NurbsPatch, edge: int, tau: np.ndarray) -> np.ndarray:
    return patch.edge_point(edge, tau)


def detect_interfaces(patches, tol: float = 1e-10) -> list:
    tau = np.linspace(0.0, 1.0, 7)
    samples = {(p, e): _edge_samples(patches[p], e, tau) for p in range(len(patches)) for e in range(4)}
    scale = max(float(np.ptp(np.concatenate([s for s in samples.values()]), axis=0).max()), 1.0)
    found = []
    used = set()
    keys = sorted(samples)
    for a in keys:
        if a in used:
            continue
        for b in keys:
            if b == a or b in used or b[0] == a[0] and b[1] == a[1]:
                continue
            sa, sb = samples[a], samples[b]
            if np.abs(sa - sb).max() <= tol * scale:
                found.append(Interface(a[0], a[1], b[0], b[1], False))
            elif np.abs(sa - sb[::-1]).max() <= tol * scale:
                found.append(Interface(a[0], a[1], b[0], b[1], True))
            else:
                continue
            used.update((a, b))
            break
    return found


@dataclass(frozen=True, eq=False)
class MultiPatchSurface:
    """Closed surface made of conforming NURBS patches."""

    patches: tuple
    interfaces: tuple = field(default=None)
    name: str = "surface"

    def __post_init__(self):
        object.__setattr__(self, "patches", tuple(self.patches))
        if self.interfaces is None:
            object.__setattr__(self, "interfaces", tuple(detect_interfaces(self.patches)))
        else:
            object.__setattr__(self, "interfaces", tuple(self.interfaces))

    def __len__(self) -> int:
        return len(self.patches)

    def __getitem__(self, k: int) -> NurbsPatch:
        return self.patches[k]

    @property
    def is_closed(self) -> bool:
        edges = [(i.patch_a, i.edge_a) for i in self.interfaces] + [(i.patch_b, i.edge_b) for i in self.interfaces]
        return len(edges) == len(set(edges)) == 4 * len(self.patches)

    def interface_error(self, n: int = 21) -> float:
        tau = np.linspace(0.0, 1.0, n)
        err = 0.0
        for itf in self.interfaces:
            a = self.patches[itf.patch_a].edge_point(itf.edge_a, tau)
            b = self.patches[itf.patch_b].edge_point(itf.edge_b, 1 - tau if itf.reversed else tau)
            err = max(err, float(np.abs(a - b).max()))
        return err

    def vertices(self) -> list:
        """Groups of (patch, corner) sharing a position; corner = (t1, t2) in {0,1}^2."""
        pos = []
        for k, p in enumerate(self.patches):
            for c in ((0, 0), (1, 0), (1, 1), (0, 1)):
                pos.append(((k, c), p.eval_point(float(c[0]), float(c[1]))))
        groups = []
        taken = [False] * len(pos)
        for i, (key, x) in enumerate(pos):
            if taken[i]:
                continue
            g = [key]
            taken[i] = True
            for j in range(i + 1, len(pos)):
                if not taken[j] and np.linalg.norm(pos[j][1] - x) < 1e-9:
                    g.append(pos[j][0])
                    taken[j] = True
            groups.append(g)
        return groups

    def signed_volume(self, n_gauss: int = 10) -> float:
        """(1/3) sum of the flux of the position field through nu = F1 x F2."""
        xg, wg = gauss_legendre(n_gauss)
        vol = 0.0
        for p in self.patches:
            b1, b2 = np.unique(p.knots_u), np.unique(p.knots_v)
            t1 = (((b1[:-1, None] + b1[1:, None]) + (b1[1:, None] - b1[:-1, None]) * xg) / 2).ravel()
            w1 = ((b1[1:, None] - b1[:-1, None]) * wg / 2).ravel()
            t2 = (((b2[:-1, None] + b2[1:, None]) + (b2[1:, None] - b2[:-1, None]) * xg) / 2).ravel()
            w2 = ((b2[1:, None] - b2[:-1, None]) * wg / 2).ravel()
            d = p.grid_derivatives(t1, t2, 1)
            nu = np.cross(d[:, :, 1, 0], d[:, :, 0, 1])
            vol += float(w1 @ np.sum(d[:, :, 0, 0] * nu, -1) @ w2) / 3.0
        return vol

    @cached_property
    def orientation(self) -> int:
        """+1 if nu = F1 x F2 points out of the enclosed body, else -1."""
        return 1 if self.signed_volume() > 0 else -1

    def orientation_consistent(self) -> bool:
        for itf in self.interfaces:
            pa, pb = self.patches[itf.patch_a], self.patches[itf.patch_b]
            t = 0.37
            ta = {0: (t, 0.0), 1: (1.0, t), 2: (t, 1.0), 3: (0.0, t)}[itf.edge_a]
            tb_ = 1 - t if itf.reversed else t
            tb = {0: (tb_, 0.0), 1: (1.0, tb_), 2: (tb_, 1.0), 3: (0.0, tb_)}[itf.edge_b]
            na, _ = pa.normal_and_jacobian(*ta)
            nb, _ = pb.normal_and_jacobian(*tb)
            if na @ nb <= 0:
                return False
        return True

    def to_dict(self) -> dict:
        return {"name": self.name, "patches": [p.to_dict() for p in self.patches],
                "interfaces": [i.to_dict() for i in self.interfaces]}

    @classmethod
    def from_dict(cls, d: dict) -> "MultiPatchSurface":
        patches = [NurbsPatch.from_dict(p) for p in d["patches"]]
        itfs = None
        if d.get("interfaces"):
            itfs = [Interface(i["patches"][0], i["edges"][0], i["patches"][1], i["edges"][1], bool(i["reversed"]))
                    for i in d["interfaces"]]
        return cls(patches, itfs, d.get("name", "surface"))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "MultiPatchSurface":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


# benchmark geometries --------------------------------------------------

def _cobb_face() -> NurbsPatch:
    """Quartic rational patch covering the sphere face around +z."""
    s2, s3, s6 = math.sqrt(2), math.sqrt(3), math.sqrt(6)
    rows = [
        [(4 * (1 - s3), 4 * (1 - s3), 4 * (s3 - 1), 4 * (3 - s3)),
         (-s2, s2 * (s3 - 4), s2 * (4 - s3), s2 * (3 * s3 - 2)),
         (0, 4 * (1 - 2 * s3) / 3, 4 * (2 * s3 - 1) / 3, 4 * (5 - s3) / 3)],
        [(s2 * (s3 - 4), -s2, s2 * (4 - s3), s2 * (3 * s3 - 2)),
         ((2 - 3 * s3) / 2, (2 - 3 * s3) / 2, (s3 + 6) / 2, (s3 + 6) / 2),
         (0, s2 * (2 * s3 - 7) / 3, 5 * s6 / 3, s2 * (s3 + 6) / 3)],
        [(4 * (1 - 2 * s3) / 3, 0, 4 * (2 * s3 - 1) / 3, 4 * (5 - s3) / 3),
         (s2 * (2 * s3 - 7) / 3, 0, 5 * s6 / 3, s2 * (s3 + 6) / 3),
         (0, 0, 4 * (5 - s3) / 3, 4 * (5 * s3 - 1) / 9)],
    ]
    hom = np.zeros((5, 5, 4))
    # first index along x (t1), second along y (t2)
    for a in range(5):
        for b in range(5):
            v = np.array(rows[min(b, 4 - b)][min(a, 4 - a)], dtype=float)
            if a > 2:
                v[0] = -v[0]
            if b > 2:
                v[1] = -v[1]
            hom[a, b] = v
    knots = np.r_[np.zeros(5), np.ones(5)]
    w = hom[..., 3]
    return NurbsPatch((4, 4), knots, knots, hom[..., :3] / w[..., None], w)


_FACE_ROTATIONS = (
    np.eye(3),                                    # +z
    np.array([[0, 0, 1], [0, 1, 0], [-1, 0, 0]]),   # +x
    np.array([[1, 0, 0], [0, 0, 1], [0, -1, 0]]),   # +y
    np.array([[0, 0, -1], [0, 1, 0], [1, 0, 0]]),   # -x
    np.array([[1, 0, 0], [0, 0, -1], [0, 1, 0]]),   # -y
    np.array([[1, 0, 0], [0, -1, 0], [0, 0, -1]]),  # -z
)


def sphere(radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> MultiPatchSurface:
    """Six-patch quartic NURBS sphere without singular points."""
    face = _cobb_face()
    patches = []
    for rot in _FACE_ROTATIONS:
        p = face.transformed(rot.astype(float))
        patches.append(NurbsPatch(p.degrees, p.knots_u, p.knots_v,
                                  radius * p.control_points + np.asarray(center, float), p.weights))
    return MultiPatchSurface(patches, name="sphere")


def _quarter_arcs():
    """Control points (x, y) and weights of four rational quadratic quarter arcs."""
    h = math.sqrt(0.5)
    arcs = []
    for q in range(4):
        a0 = q * math.pi / 2
        c0, s0 = math.cos(a0), math.sin(a0)
        c1, s1 = math.cos(a0 + math.pi / 2), math.sin(a0 + math.pi / 2)
        pts = np.array([[c0, s0], [c0 - s0, s0 + c0], [c1, s1]])
        arcs.append((pts, np.array([1.0, h, 1.0])))
    return arcs


def torus(major: float = 2.0, minor: float = 1.0) -> MultiPatchSurface:
    """Sixteen-patch biquadratic NURBS torus around the z axis.

    t1 runs along the toroidal circle, t2 along the poloidal circle.
    """
    arcs = _quarter_arcs()
    knots = np.r_[np.zeros(3), np.ones(3)]
    patches = []
    for pts_phi, w_phi in arcs:
        for pts_th, w_th in arcs:
            rho = major + minor * pts_th[:, 0]
            z = minor * pts_th[:, 1]
            cp = np.zeros((3, 3, 3))
            cp[:, :, 0] = pts_phi[:, 0, None] * rho[None, :]
            cp[:, :, 1] = pts_phi[:, 1, None] * rho[None, :]
            cp[:, :, 2] = z[None, :]
            patches.append(NurbsPatch((2, 2), knots, knots, cp, np.outer(w_phi, w_th)))
    return MultiPatchSurface(patches, name="torus")


def plane_patch(origin=(0.0, 0.0, 0.0), e1=(1.0, 0.0, 0.0), e2=(0.0, 1.0, 0.0), degree: int = 1) -> NurbsPatch:
    """Flat parallelogram patch F(t) = origin + t1 e1 + t2 e2."""
    o, a, b = (np.asarray(v, dtype=float) for v in (origin, e1, e2))
    g = np.linspace(0.0, 1.0, degree + 1)
    cp = o + g[:, None, None] * a + g[None, :, None] * b
    knots = np.r_[np.zeros(degree + 1), np.ones(degree + 1)]
    return NurbsPatch((degree, degree), knots, knots, cp, np.ones((degree + 1, degree + 1)))
