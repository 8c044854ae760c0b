"""Multi-patch spline discretization spaces and collocation points."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import MultiPatchSurface
from .spline_core import KnotVector, TensorSplineSpace, collocation_matrix, greville

CONTINUITIES = ("discontinuous", "C0")


class ConformityError(ValueError):
    pass


class CollocationError(ValueError):
    pass


def edge_local_indices(shape: tuple, edge: int) -> np.ndarray:
    """Flat local indices of the functions on ``edge``, ordered along the edge."""
    n1, n2 = shape
    if edge == 0:
        return np.arange(n1) * n2
    if edge == 1:
        return (n1 - 1) * n2 + np.arange(n2)
    if edge == 2:
        return np.arange(n1) * n2 + n2 - 1
    if edge == 3:
        return np.arange(n2)
    raise ValueError("edge id must be 0..3")


def _edge_knots(space: TensorSplineSpace, edge: int) -> np.ndarray:
    return space.knots_u.array if edge in (0, 2) else space.knots_v.array


@dataclass(eq=False)
class DiscretizationSpace:
    """Per-patch tensor spaces glued into global degrees of freedom.

    ``dof_of_local[offsets[k] + j]`` is the global DOF of local function
    ``j`` of patch ``k``; ``constituents[J]`` lists the global local
    indices merged into DOF ``J`` (lowest first).
    """

    surface: MultiPatchSurface
    spaces: tuple
    continuity: str
    offsets: np.ndarray
    dof_of_local: np.ndarray
    constituents: tuple
    classes: tuple = field(default=())

    @property
    def n_dof(self) -> int:
        return len(self.constituents)

    @property
    def n_local(self) -> int:
        return int(self.offsets[-1])

    @property
    def degrees(self) -> tuple:
        return self.spaces[0].degrees

    def local(self, g: int) -> tuple:
        """Patch and flat local index of a global local index."""
        k = int(np.searchsorted(self.offsets, g, side="right") - 1)
        return k, int(g - self.offsets[k])

    def patch_dofs(self, k: int) -> np.ndarray:
        return self.dof_of_local[self.offsets[k]:self.offsets[k + 1]]

    def patch_coefficients(self, coeffs, k: int) -> np.ndarray:
        """Local coefficient array (n1, n2) of patch ``k``."""
        c = np.asarray(coeffs)[self.patch_dofs(k)]
        return c.reshape(self.spaces[k].shape)

    def local_to_global_matrix(self):
        from scipy import sparse
        n = self.n_local
        return sparse.csr_matrix((np.ones(n), (np.arange(n), self.dof_of_local)), shape=(n, self.n_dof))

    def evaluate(self, coeffs, k: int, t1, t2) -> np.ndarray:
        """phi_h on patch ``k`` at scattered parameters."""
        sp = self.spaces[k]
        b1 = collocation_matrix(sp.knots_u.array, sp.knots_u.degree, np.atleast_1d(t1))
        b2 = collocation_matrix(sp.knots_v.array, sp.knots_v.degree, np.atleast_1d(t2))
        c = self.patch_coefficients(coeffs, k)
        return np.einsum("na,ab,nb->n", b1, c, b2)

    def evaluate_grid(self, coeffs, k: int, t1, t2) -> np.ndarray:
        sp = self.spaces[k]
        b1 = collocation_matrix(sp.knots_u.array, sp.knots_u.degree, np.atleast_1d(t1))
        b2 = collocation_matrix(sp.knots_v.array, sp.knots_v.degree, np.atleast_1d(t2))
        return b1 @ self.patch_coefficients(coeffs, k) @ b2.T

    def basis_row(self, k: int, s) -> tuple:
        """Global DOFs and values of all basis functions nonzero at s on patch k."""
        sp = self.spaces[k]
        b1 = collocation_matrix(sp.knots_u.array, sp.knots_u.degree, np.atleast_1d(s[0]))[0]
        b2 = collocation_matrix(sp.knots_v.array, sp.knots_v.degree, np.atleast_1d(s[1]))[0]
        vals = np.outer(b1, b2).ravel()
        nz = np.nonzero(vals)[0]
        return self.patch_dofs(k)[nz], vals[nz]


def _uniform_spaces(surface: MultiPatchSurface, degree, elements) -> list:
    d1, d2 = np.broadcast_to(degree, 2)
    if isinstance(elements, (list, tuple)) and len(elements) == len(surface) and np.ndim(elements[0]) > 0 \
            and isinstance(elements[0][0], (KnotVector, np.ndarray, list)):
        out = []
        for k1, k2 in elements:
            ku = k1 if isinstance(k1, KnotVector) else KnotVector(k1, int(d1))
            kv = k2 if isinstance(k2, KnotVector) else KnotVector(k2, int(d2))
            out.append(TensorSplineSpace(ku, kv))
        return out
    n1, n2 = np.broadcast_to(elements, 2)
    return [TensorSplineSpace.uniform(int(n1), int(n2), int(d1), int(d2)) for _ in surface.patches]


def build_space(surface: MultiPatchSurface, degree, elements, continuity: str = "C0",
                breakpoints=None) -> DiscretizationSpace:
    """Discretization space on every patch of ``surface``.

    ``elements`` is an element count (or pair) per direction; alternatively
    ``breakpoints`` = (b1, b2) gives the breakpoint sequences shared by all
    patches.  For ``continuity='C0'`` functions on shared edges are merged.
    """
    if continuity not in CONTINUITIES:
        raise ValueError("continuity must be one of %s" % (CONTINUITIES,))
    d1, d2 = (int(v) for v in np.broadcast_to(degree, 2))
    if breakpoints is not None:
        b1, b2 = breakpoints
        spaces = [TensorSplineSpace(KnotVector.from_breakpoints(b1, d1), KnotVector.from_breakpoints(b2, d2))
                  for _ in surface.patches]
    else:
        spaces = _uniform_spaces(surface, (d1, d2), elements)
    if continuity == "C0" and min(d1, d2) < 1:
        raise ConformityError("a C0 space needs degree >= 1 in both directions")
    sizes = [sp.dim for sp in spaces]
    offsets = np.r_[0, np.cumsum(sizes)].astype(int)
    n = int(offsets[-1])
    parent = np.arange(n)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    if continuity == "C0":
        for itf in surface.interfaces:
            sa, sb = spaces[itf.patch_a], spaces[itf.patch_b]
            ka, kb = _edge_knots(sa, itf.edge_a), _edge_knots(sb, itf.edge_b)
            if itf.reversed:
                kb = 1.0 - kb[::-1]
            if ka.shape != kb.shape or np.abs(ka - kb).max() > 1e-12:
                raise ConformityError("knot vectors do not match on interface %s" % (itf,))
            ia = offsets[itf.patch_a] + edge_local_indices(sa.shape, itf.edge_a)
            ib = offsets[itf.patch_b] + edge_local_indices(sb.shape, itf.edge_b)
            if itf.reversed:
                ib = ib[::-1]
            for a, b in zip(ia, ib):
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(a) for a in range(n)])
    # DOFs ordered by their lowest constituent, i.e. by root
    uniq, dof_of_local = np.unique(roots, return_inverse=True)
    groups = [[] for _ in range(uniq.size)]
    for g, J in enumerate(dof_of_local):
        groups[J].append(g)
    constituents = tuple(np.array(gr) for gr in groups)
    classes = []
    for gr in constituents:
        patches = {int(np.searchsorted(offsets, g, side="right") - 1) for g in gr}
        if len(gr) == 1:
            classes.append("interior")
        elif len(patches) == 2 and len(gr) == 2:
            classes.append("edge")
        else:
            classes.append("vertex")
    return DiscretizationSpace(surface, tuple(spaces), continuity, offsets, dof_of_local.astype(int),
                               constituents, tuple(classes))


@dataclass(eq=False)
class CollocationPoints:
    """One collocation point per DOF with every (patch, parameter) preimage."""

    x: np.ndarray              # (N, 3)
    patch: np.ndarray          # (N,) patch of the primary preimage
    s: np.ndarray              # (N, 2) primary preimage
    inc_point: np.ndarray      # incidence records (point, patch, parameter)
    inc_patch: np.ndarray
    inc_s: np.ndarray

    def __len__(self) -> int:
        return self.x.shape[0]

    def incidences_on(self, k: int) -> tuple:
        sel = self.inc_patch == k
        return self.inc_point[sel], self.inc_s[sel]


def collocation_points(space: DiscretizationSpace, improved: bool | None = None,
                       omega: float = 0.5) -> CollocationPoints:
    """Greville points (improved ones for discontinuous spaces).

    Degree-0 directions use element midpoints.  A merged C0 DOF uses the
    Greville point of its constituents, which coincide on shared edges.
    """
    if improved is None:
        improved = space.continuity == "discontinuous"
    grev = []
    for sp in space.spaces:
        g1 = greville(sp.knots_u.array, sp.knots_u.degree, improved, omega)
        g2 = greville(sp.knots_v.array, sp.knots_v.degree, improved, omega)
        grev.append((g1, g2))
    x, patch, s = [], [], []
    ip, ik, isv = [], [], []
    for J, gr in enumerate(space.constituents):
        for n, g in enumerate(gr):
            k, j = space.local(int(g))
            i1, i2 = space.spaces[k].unflat(j)
            par = np.array([grev[k][0][i1], grev[k][1][i2]])
            if n == 0:
                patch.append(k)
                s.append(par)
            ip.append(J)
            ik.append(k)
            isv.append(par)
    s = np.array(s)
    patch = np.array(patch, dtype=int)
    x = np.empty((len(s), 3))
    for k in range(len(space.spaces)):
        sel = patch == k
        if sel.any():
            x[sel] = space.surface[k].eval_point(s[sel, 0], s[sel, 1])
    # distinct DOFs must not share a point
    if len(x) > 1:
        from scipy.spatial import cKDTree
        pairs = cKDTree(x).query_pairs(1e-10 * max(1.0, float(np.ptp(x, axis=0).max())))
        if pairs:
            raise CollocationError("distinct DOFs share a collocation point")
    return CollocationPoints(x, patch, s, np.array(ip, dtype=int), np.array(ik, dtype=int), np.array(isv))
