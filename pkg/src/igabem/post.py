"""Boundary value problems, field reconstruction, far field and error norms.

Normals passed to data callables are unit vectors pointing out of the
computational domain.  With this convention the representation formula
reads u(x) = int G du/dn - int dG/dn_y u  (+ incident field) for both
interior and exterior problems.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .assembly import Family, PatchContext, QuadratureConfig, patch_contexts
from .geometry import closest_points
from .kernels import FOUR_PI
from .quadrature import build_thresholds
from .space import DiscretizationSpace


class FieldEvaluationError(ValueError):
    pass


class UndefinedErrorNorm(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class BoundaryProblem:
    """Helmholtz problem  Delta u + kappa^2 u = 0  in the interior or exterior of a surface.

    ``datum(y, n)`` is the prescribed Cauchy datum (Neumann or Dirichlet),
    ``incident(x)`` an optional incident field for scattering,
    ``exact(y, n)`` the exact unknown on the surface and ``exact_field(x)``
    the exact solution in the domain (both optional, used for errors).
    """

    domain: str
    bc: str
    kappa: float
    surface: object = None
    datum: Callable | None = None
    incident: Callable | None = None
    exact: Callable | None = None
    exact_field: Callable | None = None
    name: str = "custom"

    def __post_init__(self):
        if self.domain not in ("interior", "exterior"):
            raise ValueError("domain must be 'interior' or 'exterior'")
        if self.bc not in ("neumann", "dirichlet"):
            raise ValueError("bc must be 'neumann' or 'dirichlet'")
        if not self.kappa >= 0:
            raise ValueError("wavenumber must be nonnegative")


class SplineDensity:
    """Discrete boundary function sum_J alpha_J B_J, evaluable on node grids."""

    def __init__(self, space: DiscretizationSpace, coeffs):
        self.space = space
        self.coeffs = np.asarray(coeffs)

    def on_grid(self, k: int, u1, u2, geo) -> np.ndarray:
        return self.space.evaluate_grid(self.coeffs, k, u1, u2)


def grid_values(f, k: int, u1, u2, geo) -> np.ndarray:
    """Values of a boundary function on the tensor grid u1 x u2 of patch k."""
    if hasattr(f, "on_grid"):
        return np.asarray(f.on_grid(k, u1, u2, geo))
    return np.broadcast_to(f(geo["y"], geo["n"]), geo["J"].shape)


@dataclass(eq=False)
class BoundarySolution:
    """Both Cauchy data of a solved problem."""

    problem: BoundaryProblem
    space: DiscretizationSpace
    alpha: np.ndarray
    qc: QuadratureConfig

    @property
    def trace(self):
        """u on the boundary."""
        if self.problem.bc == "neumann":
            return SplineDensity(self.space, self.alpha)
        return self.problem.datum if self.problem.datum is not None else _zero

    @property
    def flux(self):
        """du/dn on the boundary."""
        if self.problem.bc == "dirichlet":
            return SplineDensity(self.space, self.alpha)
        return self.problem.datum if self.problem.datum is not None else _zero


def _zero(y, n):
    return np.zeros(y.shape[:-1])


def _surface_rule(space: DiscretizationSpace, k: int, nu: int, p: int):
    """Nodes and weights of the regular rule over the element cells of patch k."""
    fam = Family.cells(space.spaces[k])
    g1, g2 = fam.grid(nu)
    W1, W2 = fam.weights(nu, p)
    return g1.nodes, g2.nodes, W1.sum(0), W2.sum(0)


def _nodes(qc: QuadratureConfig, space: DiscretizationSpace, factor: int = 1) -> tuple:
    nu = qc.counts(max(space.degrees))["rhs"]
    return factor * (nu - 1) + 1, max(qc.p_reg, qc.p_sing)


def boundary_distance(solution: BoundarySolution, x) -> tuple:
    """Smallest scaled distance of each x to the surface and the offending patch."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    space = solution.space
    best = np.full(x.shape[0], np.inf)
    arg = np.zeros(x.shape[0], dtype=int)
    box = np.array([[[0.0, 1.0], [0.0, 1.0]]])
    for k, patch in enumerate(space.surface.patches):
        mu = PatchContext(patch, 1).mu
        r, _ = closest_points(patch, x, box)
        r = r / mu
        upd = r < best
        best[upd] = r[upd]
        arg[upd] = k
    return best, arg


def evaluate_field(solution: BoundarySolution, x, include_incident: bool = True,
                   check_distance: bool = True) -> np.ndarray:
    """u(x) at points of the domain by the representation formula."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    pb = solution.problem
    space = solution.space
    qc = solution.qc
    if check_distance:
        dist, arg = boundary_distance(solution, x)
        fam = Family.trial(space.spaces[0])
        thr = qc.c * build_thresholds([fam.widths()], qc.p_reg, qc.c).delta[0]
        bad = dist <= thr
        if bad.any():
            i = int(np.nonzero(bad)[0][0])
            raise FieldEvaluationError(
                "point %s is within the near-singular band of patch %d (scaled distance %.3e <= %.3e)"
                % (x[i].tolist(), int(arg[i]), dist[i], thr))
    nu, p = _nodes(qc, space, 2)
    kappa = pb.kappa
    total = np.zeros(x.shape[0], dtype=complex)
    for k, ctx in enumerate(patch_contexts(space.surface, pb.domain)):
        u1, u2, w1, w2 = _surface_rule(space, k, nu, p)
        geo = ctx.grid_geometry(u1, u2)
        jac = geo["J"] * ctx.mu ** 2
        u = grid_values(solution.trace, k, u1, u2, geo)
        dn = grid_values(solution.flux, k, u1, u2, geo)
        y, n = geo["y"], geo["n"]
        for a in range(x.shape[0]):
            d = x[a] - y
            r = np.linalg.norm(d, axis=-1)
            g = np.exp(1j * kappa * r) / (FOUR_PI * r)
            dg = g * (1j * kappa - 1.0 / r) * (-np.einsum("...c,...c->...", d, n) / r)
            total[a] += w1 @ ((g * dn - dg * u) * jac) @ w2
    if include_incident and pb.incident is not None:
        total += pb.incident(x)
    return total


def far_field(solution: BoundarySolution, w) -> np.ndarray:
    """u_inf(w) = 1/(4 pi) int (i kappa u (w.n) + du/dn) exp(-i kappa w.y) dGamma."""
    pb = solution.problem
    if pb.domain != "exterior":
        raise ValueError("far field pattern is defined for exterior problems only")
    w = np.atleast_2d(np.asarray(w, dtype=float))
    w = w / np.linalg.norm(w, axis=1, keepdims=True)
    space = solution.space
    nu, p = _nodes(solution.qc, space, 2)
    kappa = pb.kappa
    total = np.zeros(w.shape[0], dtype=complex)
    for k, ctx in enumerate(patch_contexts(space.surface, pb.domain)):
        u1, u2, w1, w2 = _surface_rule(space, k, nu, p)
        geo = ctx.grid_geometry(u1, u2)
        jac = geo["J"] * ctx.mu ** 2
        u = grid_values(solution.trace, k, u1, u2, geo)
        dn = grid_values(solution.flux, k, u1, u2, geo)
        y, n = geo["y"], geo["n"]
        for a in range(w.shape[0]):
            ph = np.exp(-1j * kappa * (y @ w[a]))
            f = (1j * kappa * u * (n @ w[a]) + dn) * ph * jac
            total[a] += w1 @ f @ w2
    return total / FOUR_PI


def l2_norms(space: DiscretizationSpace, f, g, domain: str = "interior", qc: QuadratureConfig | None = None):
    """(||f - g||, ||g||) in L2 of the surface by the regular rule at doubled nodes."""
    qc = QuadratureConfig() if qc is None else qc
    nu, p = _nodes(qc, space, 2)
    num = den = 0.0
    for k, ctx in enumerate(patch_contexts(space.surface, domain)):
        u1, u2, w1, w2 = _surface_rule(space, k, nu, p)
        geo = ctx.grid_geometry(u1, u2)
        jac = geo["J"] * ctx.mu ** 2
        fv = grid_values(f, k, u1, u2, geo)
        gv = grid_values(g, k, u1, u2, geo)
        num += float(w1 @ (np.abs(fv - gv) ** 2 * jac) @ w2)
        den += float(w1 @ (np.abs(gv) ** 2 * jac) @ w2)
    return np.sqrt(max(num, 0.0)), np.sqrt(max(den, 0.0))


def l2_relative_error(phi_h, phi_ex, space: DiscretizationSpace, domain: str = "interior",
                      qc: QuadratureConfig | None = None) -> float:
    """||phi_h - phi_ex|| / ||phi_ex|| over the surface of ``space``."""
    num, den = l2_norms(space, phi_h, phi_ex, domain, qc)
    if den == 0.0:
        raise UndefinedErrorNorm("exact solution has zero L2 norm")
    return num / den


def pointwise_error_eP(u_h, u_ex) -> np.ndarray:
    """| |u_h| - |u_ex| | / |u_ex|."""
    u_h = np.asarray(u_h)
    u_ex = np.asarray(u_ex)
    if np.any(u_ex == 0):
        raise UndefinedErrorNorm("exact value vanishes")
    return np.abs(np.abs(u_h) - np.abs(u_ex)) / np.abs(u_ex)


def solution_error(solution: BoundarySolution) -> float:
    """Relative L2 error of the computed unknown against ``problem.exact``."""
    pb = solution.problem
    if pb.exact is None:
        raise ValueError("problem has no exact boundary solution")
    return l2_relative_error(SplineDensity(solution.space, solution.alpha), pb.exact, solution.space,
                             pb.domain, solution.qc)


def error_extrema(solution: BoundarySolution) -> tuple:
    """(max |Re(phi_h - phi)|, max |Im(phi_h - phi)|) over the doubled regular-rule nodes."""
    pb = solution.problem
    if pb.exact is None:
        raise ValueError("problem has no exact boundary solution")
    space = solution.space
    dens = SplineDensity(space, solution.alpha)
    nu, p = _nodes(solution.qc, space, 2)
    re = im = 0.0
    for k, ctx in enumerate(patch_contexts(space.surface, pb.domain)):
        u1, u2, _, _ = _surface_rule(space, k, nu, p)
        geo = ctx.grid_geometry(u1, u2)
        diff = grid_values(dens, k, u1, u2, geo) - grid_values(pb.exact, k, u1, u2, geo)
        re = max(re, float(np.abs(diff.real).max()))
        im = max(im, float(np.abs(diff.imag).max()))
    return re, im
