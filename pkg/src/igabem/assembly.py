"""Collocation assembly of the Helmholtz boundary integral equations.

All integrals use the patch-scaled variables x~ = x / mu, F~ = F / mu,
nu~ = nu / mu^2, J~ = J / mu^2, kappa_k = kappa mu with mu = sqrt(area).
For a weight family of B-splines B_j on patch k (trial functions or the
degree-zero right-hand-side cells) the layer integrals are

    single:  mu/(4 pi) int [cos(kappa_k r)/r + i sin(kappa_k r)/r] rho B_j J~ dt
    double:  sigma/(4 pi) int [(r.nu~)/r^3 (cos + kappa_k r sin)
                               + i (r.nu~)/r^2 (sin/r - kappa_k cos)] rho B_j dt

with r = x~ - F~(t), rho an optional density and sigma = +-1 chosen so
that sigma nu / J points out of the computational domain.  Imaginary parts
always use the regular rule; for flagged pairs the weakly singular real
kernel parts (times the density) are integrated by singularity extraction.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .expansion import KernelExpansion, expand_from_derivatives
from .geometry import NurbsPatch, closest_points, patch_scale
from .kernels import FOUR_PI, double_zero_factor, sinc_factor
from .quadrature import build_thresholds, singular_weights, support_rule_1d
from .space import CollocationPoints, DiscretizationSpace
from .spline_core import KnotVector

log = logging.getLogger(__name__)

LAYERS = ("single", "double")
_CHUNK = 1_500_000
# scaled distances below this are treated as coincident points
COINCIDENT = 1e-10


class QuadratureWarning(UserWarning):
    pass


@dataclass(frozen=True)
class QuadratureConfig:
    """QI degrees, node counts per support and the threshold constant.

    Node counts default to the knots and knot midpoints of the trial
    B-spline (2d + 3); ``nu_rhs`` is used for the degree-zero cells of the
    right-hand side and for field evaluation.
    """

    p_reg: int = 4
    p_sing: int = 2
    m: int = 2
    c: float = 0.1
    nu_reg: int | None = None
    nu_sing: int | None = None
    nu_rem: int | None = None
    nu_rhs: int | None = None

    def __post_init__(self):
        if not 0.0 < self.c < 1.0:
            raise ValueError("threshold constant c must lie in (0, 1)")
        if not 1 <= self.m <= 3:
            raise ValueError("extraction order m must be 1, 2 or 3")

    def counts(self, d: int) -> dict:
        base = 2 * int(d) + 3
        reg = self.nu_reg or base
        out = {"reg": reg, "sing": self.nu_sing or reg, "rem": self.nu_rem or self.nu_sing or reg,
               "rhs": self.nu_rhs or max(self.p_reg, self.p_sing) + 3}
        for key, p in (("reg", self.p_reg), ("sing", self.p_sing), ("rem", self.p_sing),
                       ("rhs", max(self.p_reg, self.p_sing))):
            if out[key] < p + 2:
                raise ValueError("%s node count %d is below QI degree + 2 = %d" % (key, out[key], p + 2))
        return out


# weight families --------------------------------------------------------

@dataclass(eq=False)
class NodeGrid:
    """Union of the uniform node sets of all supports in one direction."""

    nodes: np.ndarray        # (U,)
    index: np.ndarray        # (n, nu): node positions of each support
    lo: np.ndarray           # first/last union index inside each support
    hi: np.ndarray
    gap: np.ndarray          # largest union spacing inside each support


def _node_grid(supports: np.ndarray, nu: int) -> NodeGrid:
    raw = supports[:, :1] + (supports[:, 1:] - supports[:, :1]) * np.linspace(0.0, 1.0, nu)
    key = np.round(raw, 13)
    nodes, inv = np.unique(key, return_inverse=True)
    index = inv.reshape(raw.shape)
    lo, hi = index[:, 0], index[:, -1]
    gap = np.array([np.diff(nodes[a:b + 1]).max() for a, b in zip(lo, hi)])
    return NodeGrid(nodes, index, lo, hi, gap)


@dataclass(eq=False)
class Family:
    """B-splines of one direction pair used as integration weights on a patch."""

    knots1: np.ndarray
    deg1: int
    knots2: np.ndarray
    deg2: int
    _grids: dict = field(default_factory=dict, repr=False)

    @classmethod
    def trial(cls, space) -> "Family":
        return cls(space.knots_u.array, space.knots_u.degree, space.knots_v.array, space.knots_v.degree)

    @classmethod
    def cells(cls, space) -> "Family":
        b1, b2 = space.knots_u.breakpoints, space.knots_v.breakpoints
        return cls(KnotVector.from_breakpoints(b1, 0).array, 0, KnotVector.from_breakpoints(b2, 0).array, 0)

    @cached_property
    def shape(self) -> tuple:
        return self.knots1.size - self.deg1 - 1, self.knots2.size - self.deg2 - 1

    @cached_property
    def local_knots(self) -> tuple:
        n1, n2 = self.shape
        t1 = np.stack([self.knots1[i:i + self.deg1 + 2] for i in range(n1)])
        t2 = np.stack([self.knots2[i:i + self.deg2 + 2] for i in range(n2)])
        return t1, t2

    @cached_property
    def supports(self) -> tuple:
        t1, t2 = self.local_knots
        return t1[:, [0, -1]], t2[:, [0, -1]]

    def widths(self) -> np.ndarray:
        s1, s2 = self.supports
        w1, w2 = s1[:, 1] - s1[:, 0], s2[:, 1] - s2[:, 0]
        return np.stack(np.meshgrid(w1, w2, indexing="ij"), -1).reshape(-1, 2)

    def grid(self, nu: int) -> tuple:
        if nu not in self._grids:
            s1, s2 = self.supports
            self._grids[nu] = (_node_grid(s1, nu), _node_grid(s2, nu))
        return self._grids[nu]

    def weights(self, nu: int, p: int) -> tuple:
        """Regular-rule weights embedded in the union grids: (n1, U1), (n2, U2)."""
        key = ("w", nu, p)
        if key not in self._grids:
            out = []
            for g, tau, deg in zip(self.grid(nu), self.local_knots, (self.deg1, self.deg2)):
                W = np.zeros((tau.shape[0], g.nodes.size))
                for i, tk in enumerate(tau):
                    r = support_rule_1d(tk, p, nu)
                    np.add.at(W[i], g.index[i], (tk[-1] - tk[0]) * r.weights)
                out.append(W)
            self._grids[key] = tuple(out)
        return self._grids[key]


# patch geometry ---------------------------------------------------------

@dataclass(eq=False)
class PatchContext:
    """Scaled geometry of one patch; ``sigma`` orients the normal."""

    patch: NurbsPatch
    sigma: int

    @cached_property
    def mu(self) -> float:
        return patch_scale(self.patch)

    def grid_geometry(self, u1: np.ndarray, u2: np.ndarray) -> dict:
        d = self.patch.grid_derivatives(u1, u2, 1)
        y = d[:, :, 0, 0]
        nu = np.cross(d[:, :, 1, 0], d[:, :, 0, 1])
        jac = np.linalg.norm(nu, axis=-1)
        mu = self.mu
        return {"y": y, "F": y / mu, "nu": nu / mu ** 2, "J": jac / mu ** 2,
                "n": self.sigma * nu / jac[..., None],
                "dmax": max(float(np.linalg.norm(d[:, :, 1, 0], axis=-1).max()),
                            float(np.linalg.norm(d[:, :, 0, 1], axis=-1).max())) / mu}


def _real_imag(layer: str, kappa: float, r: np.ndarray, diff: np.ndarray | None, nu: np.ndarray | None,
               jac: np.ndarray | None):
    """Kernel pieces (without 1/(4 pi) and prefactors) on scaled distances."""
    zero = r <= COINCIDENT
    rs = np.where(zero, 1.0, r)
    if layer == "single":
        re = np.where(zero, 0.0, np.cos(kappa * r) / rs) * jac
        im = sinc_factor(kappa, r) * jac
    else:
        rn = np.einsum("...c,...c->...", diff, nu)
        x = kappa * r
        re = np.where(zero, 0.0, rn / rs ** 3 * (np.cos(x) + x * np.sin(x)))
        im = np.where(zero, 0.0, rn / rs ** 2 * double_zero_factor(kappa, r))
    return re, im


def _singular_g(layer: str, kappa: float, r: np.ndarray, jac: np.ndarray | None) -> np.ndarray:
    """Smooth cofactor g multiplying the weakly singular factor U."""
    if layer == "single":
        return np.cos(kappa * r) * jac
    x = kappa * r
    return np.cos(x) + x * np.sin(x)


def _exact_u(layer: str, r: np.ndarray, diff: np.ndarray, nu: np.ndarray) -> np.ndarray:
    zero = r <= COINCIDENT
    rs = np.where(zero, 1.0, r)
    if layer == "single":
        return np.where(zero, 0.0, 1.0 / rs)
    rn = np.einsum("...c,...c->...", diff, nu)
    return np.where(zero, 0.0, rn / rs ** 3)


@dataclass
class IntegrationStats:
    regular: int = 0
    nearly_singular: int = 0
    singular: int = 0
    refined: int = 0
    unreliable: int = 0

    def add(self, other: "IntegrationStats") -> None:
        for k in vars(self):
            setattr(self, k, getattr(self, k) + getattr(other, k))


class _Projections:
    """Cached expansion points s_e of collocation points on extended patches."""

    def __init__(self):
        self.cache = {}
        self.unreliable = set()

    def report(self) -> None:
        """One warning summarizing all unreliable projections seen so far."""
        if self.unreliable:
            patches = sorted({k for k, _ in self.unreliable})
            warnings.warn("extrapolated expansion point unreliable for %d (point, patch) pairs on patches %s; "
                          "the nearly singular integrals there may be less accurate"
                          % (len(self.unreliable), patches), QuadratureWarning, stacklevel=3)
            self.unreliable.clear()

    def get(self, k: int, ctx: PatchContext, x: np.ndarray, idx: np.ndarray, stats: IntegrationStats) -> np.ndarray:
        missing = np.array([i for i in idx if (k, int(i)) not in self.cache], dtype=int)
        if missing.size:
            box = np.asarray(ctx.patch.extended_domain)[None]
            r, t = closest_points(ctx.patch, x[missing], box)
            lo, hi = box[0, :, 0], box[0, :, 1]
            on_bd = np.any(np.isclose(t, lo, atol=1e-9) | np.isclose(t, hi, atol=1e-9), axis=1)
            bad = on_bd & (r > 1e-6 * ctx.mu)
            for i, tt in zip(missing, t):
                self.cache[(k, int(i))] = tt
            if bad.any():
                stats.unreliable += int(bad.sum())
                self.unreliable.update((k, int(i)) for i in missing[bad])
        return np.array([self.cache[(k, int(i))] for i in idx]).reshape(-1, 2)


def layer_integrals(ctx: PatchContext, k: int, family: Family, layer: str, points: CollocationPoints,
                    kappa: float, qc: QuadratureConfig, nus: dict, density=None, extraction: bool = True,
                    projections: _Projections | None = None, stats: IntegrationStats | None = None) -> np.ndarray:
    """Integrals of the layer kernel against every B-spline of ``family``.

    Returns an array (N, n1, n2) for the N collocation points.  ``density``
    is an optional callable (y, n) -> values multiplying the kernel.  ``nus``
    holds node counts for the keys 'reg', 'sing' and 'rem'.
    """
    if layer not in LAYERS:
        raise ValueError("layer must be 'single' or 'double'")
    stats = IntegrationStats() if stats is None else stats
    own = projections is None
    projections = _Projections() if own else projections
    mu, sigma = ctx.mu, ctx.sigma
    kap = kappa * mu
    xs = points.x / mu
    npt = xs.shape[0]
    n1, n2 = family.shape
    pref = (mu if layer == "single" else sigma) / FOUR_PI

    # regular pass on the union grid
    g1, g2 = family.grid(nus["reg"])
    W1, W2 = family.weights(nus["reg"], qc.p_reg)
    geo = ctx.grid_geometry(g1.nodes, g2.nodes)
    rho = 1.0 if density is None else density(geo["y"], geo["n"])
    out = np.empty((npt, n1, n2), dtype=complex)
    smooth = np.empty((npt, n1, n2), dtype=complex) if extraction else None
    rmin = np.empty((npt, n1, n2))
    step = max(1, _CHUNK // (g1.nodes.size * g2.nodes.size))
    for a in range(0, npt, step):
        b = min(npt, a + step)
        diff = xs[a:b, None, None, :] - geo["F"]
        r = np.sqrt(np.einsum("...c,...c->...", diff, diff))
        re, im = _real_imag(layer, kap, r, diff, geo["nu"], geo["J"])
        fs = 1j * im * rho
        f = re * rho + fs
        out[a:b] = W1 @ (f @ W2.T)
        if extraction:
            smooth[a:b] = W1 @ (fs @ W2.T)
        m2 = np.stack([r[:, :, lo:hi + 1].min(-1) for lo, hi in zip(g2.lo, g2.hi)], -1)
        rmin[a:b] = np.stack([m2[:, lo:hi + 1].min(1) for lo, hi in zip(g1.lo, g1.hi)], 1)
    out *= pref
    if not extraction:
        stats.regular += out.size
        return out

    # classification
    thr = qc.c * build_thresholds([family.widths()], qc.p_reg, qc.c).delta[0]
    s1, s2 = family.supports
    flag = rmin <= thr
    slack = 0.5 * 1.25 * geo["dmax"] * (g1.gap[:, None] + g2.gap[None, :])
    ambiguous = ~flag & (rmin - slack[None] <= thr)
    inc_pt, inc_s = points.incidences_on(k)
    sing = np.zeros_like(flag)
    exp_point = {}
    tol = 1e-12
    for i, s in zip(inc_pt, inc_s):
        in1 = (s1[:, 0] - tol <= s[0]) & (s[0] <= s1[:, 1] + tol)
        in2 = (s2[:, 0] - tol <= s[1]) & (s[1] <= s2[:, 1] + tol)
        sing[i] |= in1[:, None] & in2[None, :]
        exp_point.setdefault(int(i), s)
    ambiguous &= ~sing
    if ambiguous.any():
        ia, ja1, ja2 = np.nonzero(ambiguous)
        boxes = np.stack([s1[ja1], s2[ja2]], 1)
        r_true, _ = closest_points(ctx.patch, points.x[ia], boxes, n_samples=4)
        flag[ia, ja1, ja2] = r_true / mu <= thr
        stats.refined += ia.size
    flag |= sing
    stats.singular += int(sing.sum())
    stats.nearly_singular += int(flag.sum() - sing.sum())
    stats.regular += int(flag.size - flag.sum())
    if not flag.any():
        return out

    # expansion points: true preimage if x lies on this patch, else projection
    fp = np.nonzero(flag.any(axis=(1, 2)))[0]
    off = np.array([i for i in fp if int(i) not in exp_point], dtype=int)
    if off.size:
        se = projections.get(k, ctx, points.x, off, stats)
        for i, s in zip(off, se):
            exp_point[int(i)] = s
    e = np.array([exp_point[int(i)] for i in fp])
    m = qc.m
    D = ctx.patch.derivatives(e[:, 0], e[:, 1], m + 1) / mu
    exp = expand_from_derivatives(D, m, 0 if layer == "single" else 1)
    slot = np.full(npt, -1)
    slot[fp] = np.arange(fp.size)

    gs1, gs2 = family.grid(nus["sing"])
    gr1, gr2 = family.grid(nus["rem"])
    geo_s = ctx.grid_geometry(gs1.nodes, gs2.nodes)
    geo_r = ctx.grid_geometry(gr1.nodes, gr2.nodes)
    rho_s = None if density is None else density(geo_s["y"], geo_s["n"])
    rho_r = None if density is None else density(geo_r["y"], geo_r["n"])
    t1, t2 = family.local_knots
    ti, tj1, tj2 = np.nonzero(flag)
    # group tasks by the translated knot pattern of the support
    keys = {}
    for a in range(ti.size):
        j1, j2 = tj1[a], tj2[a]
        keys.setdefault(_pattern(t1[j1], t2[j2]), []).append(a)
    for members in keys.values():
        members = np.array(members)
        pi, p1, p2 = ti[members], tj1[members], tj2[members]
        out[pi, p1, p2] = pref * (smooth[pi, p1, p2] + _extracted(
            layer, kap, exp, slot[pi], xs[pi], np.array([exp_point[int(i)] for i in pi]),
            t1, t2, p1, p2, qc, nus, gs1, gs2, geo_s, rho_s, gr1, gr2, geo_r, rho_r))
    if own:
        projections.report()
    return out


def _pattern(tau1: np.ndarray, tau2: np.ndarray) -> tuple:
    return tuple(np.round(tau1 - tau1[0], 11)), tuple(np.round(tau2 - tau2[0], 11))


def _extracted(layer, kap, exp: KernelExpansion, slot, xs, e, t1, t2, j1, j2, qc, nus,
               gs1, gs2, geo_s, rho_s, gr1, gr2, geo_r, rho_r) -> np.ndarray:
    """Weakly singular kernel part of the layer integral by extraction for a task batch.

    All tasks share the translated support pattern; ``e`` are expansion
    points and ``slot`` their rows in ``exp``.
    """
    tau1, tau2 = t1[j1[0]], t2[j2[0]]
    a = np.stack([t1[j1, 0], t2[j2, 0]], -1)
    W = singular_weights(exp, e - a, tau1 - tau1[0], tau2 - tau2[0], qc.p_sing, nus["sing"], task=slot)
    # smooth cofactor at the singular-rule nodes
    i1 = gs1.index[j1][:, :, None]
    i2 = gs2.index[j2][:, None, :]
    diff = xs[:, None, None, :] - geo_s["F"][i1, i2]
    r = np.sqrt(np.einsum("...c,...c->...", diff, diff))
    g = _singular_g(layer, kap, r, geo_s["J"][i1, i2])
    if rho_s is not None:
        g = g * rho_s[i1, i2]
    val = np.einsum("tab,tab->t", W, g)
    # regularized remainder (U - U^m) g by the regular rule with degree p_sing
    r1 = support_rule_1d(tau1, qc.p_sing, nus["rem"])
    r2 = support_rule_1d(tau2, qc.p_sing, nus["rem"])
    w = np.outer((tau1[-1] - tau1[0]) * r1.weights, (tau2[-1] - tau2[0]) * r2.weights)
    i1 = gr1.index[j1][:, :, None]
    i2 = gr2.index[j2][:, None, :]
    F = geo_r["F"][i1, i2]
    nu = geo_r["nu"][i1, i2]
    diff = xs[:, None, None, :] - F
    r = np.sqrt(np.einsum("...c,...c->...", diff, diff))
    u = _exact_u(layer, r, diff, nu)
    z1 = e[:, 0, None, None] - gr1.nodes[i1]
    z2 = e[:, 1, None, None] - gr2.nodes[i2]
    zero = (np.abs(z1) <= COINCIDENT) & (np.abs(z2) <= COINCIDENT)
    with np.errstate(divide="ignore", invalid="ignore"):
        um = exp(np.where(zero, 1.0, z1), np.where(zero, 1.0, z2), batch=slot[:, None, None])
    rem = np.where(zero | (r <= COINCIDENT), 0.0, u - um)
    g = _singular_g(layer, kap, r, geo_r["J"][i1, i2])
    if rho_r is not None:
        g = g * rho_r[i1, i2]
    return val + np.einsum("ab,tab->t", w, rem * g)


# systems ------------------------------------------------------------------

@dataclass(eq=False)
class CollocationSystem:
    A: np.ndarray
    beta: np.ndarray
    space: DiscretizationSpace
    points: CollocationPoints
    stats: IntegrationStats
    alpha: np.ndarray | None = None
    condition: float | None = None

    def residual(self, alpha=None) -> float:
        alpha = self.alpha if alpha is None else alpha
        return float(np.abs(self.A @ alpha - self.beta).max() / max(np.abs(self.beta).max(), 1e-300))

    def dump(self, path) -> None:
        """Write A and beta as text: 'A row col re im' and 'b row re im' lines."""
        with open(path, "w") as fh:
            fh.write("# A row col re im | b row re im\n")
            for i, row in enumerate(self.A):
                for j, v in enumerate(row):
                    fh.write("A %d %d %.17e %.17e\n" % (i, j, v.real, v.imag))
            for i, v in enumerate(self.beta):
                fh.write("b %d %.17e %.17e\n" % (i, v.real, v.imag))


def normal_sign(surface, domain: str) -> int:
    """sigma such that sigma * nu points out of the computational domain."""
    if domain not in ("interior", "exterior"):
        raise ValueError("domain must be 'interior' or 'exterior'")
    return surface.orientation if domain == "interior" else -surface.orientation


def patch_contexts(surface, domain: str) -> list:
    sigma = normal_sign(surface, domain)
    return [PatchContext(p, sigma) for p in surface.patches]


def boundary_operator(space: DiscretizationSpace, points: CollocationPoints, layer: str, kappa: float,
                      qc: QuadratureConfig, contexts, projections=None, stats=None) -> np.ndarray:
    """Dense matrix of a layer operator on the trial space, without jump term."""
    nus = qc.counts(max(space.degrees))
    P = space.local_to_global_matrix()
    blocks = []
    for k, ctx in enumerate(contexts):
        fam = Family.trial(space.spaces[k])
        blocks.append(layer_integrals(ctx, k, fam, layer, points, kappa, qc, nus,
                                      projections=projections, stats=stats).reshape(len(points), -1))
    local = np.concatenate(blocks, axis=1)
    return np.asarray((P.T @ local.T).T)


def potential_of_datum(space: DiscretizationSpace, points: CollocationPoints, layer: str, kappa: float,
                       qc: QuadratureConfig, contexts, density, projections=None, stats=None) -> np.ndarray:
    """Layer potential of a known density at the collocation points (cell splitting)."""
    nu = qc.counts(max(space.degrees))["rhs"]
    nus = {"reg": nu, "sing": nu, "rem": nu}
    total = np.zeros(len(points), dtype=complex)
    for k, ctx in enumerate(contexts):
        fam = Family.cells(space.spaces[k])
        total += layer_integrals(ctx, k, fam, layer, points, kappa, qc, nus, density=density,
                                 projections=projections, stats=stats).reshape(len(points), -1).sum(1)
    return total


def jump_matrix(space: DiscretizationSpace, points: CollocationPoints) -> np.ndarray:
    """B_J(x_i) from the primary preimage of each collocation point."""
    B = np.zeros((len(points), space.n_dof))
    for i in range(len(points)):
        dofs, vals = space.basis_row(int(points.patch[i]), points.s[i])
        np.add.at(B[i], dofs, vals)
    return B


def assemble(problem, space: DiscretizationSpace, qc: QuadratureConfig, points: CollocationPoints | None = None,
             jump: bool = True) -> CollocationSystem:
    """Collocation system for ``problem`` (see :class:`igabem.post.BoundaryProblem`).

    Neumann data: (1/2 I + K) phi = V u_N (+ incident field);
    Dirichlet data: V phi = (1/2 I + K) u_D (+ incident field).
    """
    from .space import collocation_points
    points = collocation_points(space) if points is None else points
    contexts = patch_contexts(space.surface, problem.domain)
    stats = IntegrationStats()
    proj = _Projections()
    kappa = problem.kappa
    B = jump_matrix(space, points) if jump else 0.0
    if problem.bc == "neumann":
        A = boundary_operator(space, points, "double", kappa, qc, contexts, proj, stats) + 0.5 * B
        beta = np.zeros(len(points), dtype=complex)
        if problem.datum is not None:
            beta += potential_of_datum(space, points, "single", kappa, qc, contexts, problem.datum, proj, stats)
    elif problem.bc == "dirichlet":
        A = boundary_operator(space, points, "single", kappa, qc, contexts, proj, stats)
        beta = np.zeros(len(points), dtype=complex)
        if problem.datum is not None:
            n_pts = _unit_normals(space, points, contexts)
            beta += 0.5 * problem.datum(points.x, n_pts) if jump else 0.0
            beta += potential_of_datum(space, points, "double", kappa, qc, contexts, problem.datum, proj, stats)
    else:
        raise ValueError("boundary condition must be 'neumann' or 'dirichlet'")
    if problem.incident is not None:
        beta += problem.incident(points.x)
    proj.report()
    if not np.all(np.isfinite(A)) or not np.all(np.isfinite(beta)):
        raise FloatingPointError("non-finite entries in the collocation system")
    log.info("assembled N=%d: %s", len(points), stats)
    return CollocationSystem(A, beta, space, points, stats)


def _unit_normals(space, points, contexts) -> np.ndarray:
    n = np.empty_like(points.x)
    for k, ctx in enumerate(contexts):
        sel = points.patch == k
        if sel.any():
            nu, jac = space.surface[k].normal_and_jacobian(points.s[sel, 0], points.s[sel, 1])
            n[sel] = ctx.sigma * np.atleast_2d(nu) / np.atleast_1d(jac)[:, None]
    return n


def solve(system: CollocationSystem, cond_limit: float = 1e12) -> np.ndarray:
    """Dense LU solve with a 1-norm condition estimate."""
    from scipy.linalg import lapack, lu_factor, lu_solve
    A = system.A
    anorm = float(np.abs(A).sum(axis=0).max())
    lu, piv = lu_factor(A)
    rcond, info = lapack.zgecon(lu, anorm) if np.iscomplexobj(lu) else lapack.dgecon(lu, anorm)
    cond = math.inf if rcond == 0 else 1.0 / rcond
    if cond > cond_limit:
        warnings.warn("collocation matrix ill-conditioned (estimate %.3e); kappa^2 may be close to an "
                      "eigenvalue" % cond, QuadratureWarning, stacklevel=2)
    alpha = lu_solve((lu, piv), system.beta)
    system.alpha = alpha
    system.condition = cond
    return alpha


def c_diagnostic(space: DiscretizationSpace, points: CollocationPoints, qc: QuadratureConfig) -> np.ndarray:
    """-int dG_0/dn dGamma at each point, n pointing out of the enclosed body.

    Equals the jump coefficient 1/2 at smooth points; computed with the
    same extraction machinery as the assembly, on the cells of ``space``.
    """
    surface = space.surface
    contexts = [PatchContext(p, surface.orientation) for p in surface.patches]
    nu = qc.counts(max(space.degrees))["rhs"]
    nus = {"reg": nu, "sing": nu, "rem": nu}
    total = np.zeros(len(points))
    proj = _Projections()
    for k, ctx in enumerate(contexts):
        fam = Family.cells(space.spaces[k])
        total += layer_integrals(ctx, k, fam, "double", points, 0.0, qc, nus,
                                 projections=proj).reshape(len(points), -1).sum(1).real
    proj.report()
    return -total
