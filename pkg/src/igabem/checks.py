"""Built-in invariant checks behind ``igabem check``."""
from __future__ import annotations

import warnings

import numpy as np


def _partition_of_unity():
    from .spline_core import KnotVector, collocation_matrix
    rng = np.random.default_rng(1)
    err = 0.0
    for d in range(0, 5):
        br = np.r_[0.0, np.sort(rng.uniform(0, 1, 6)), 1.0]
        kv = KnotVector.from_breakpoints(br, d)
        t = rng.uniform(0, 1, 200)
        err = max(err, np.abs(collocation_matrix(kv.array, d, t).sum(1) - 1).max())
    return err <= 1e-14, "max |sum B - 1| = %.2e" % err


def _qi_exactness():
    from .quasi_interpolation import build_qi
    from .spline_core import collocation_matrix
    rng = np.random.default_rng(2)
    err = 0.0
    for p, nu in ((2, 7), (3, 9), (4, 13)):
        op = build_qi(p, p, nu, nu)
        (k1, k2) = op.knots
        c = rng.standard_normal((k1.size - p - 1, k2.size - p - 1))
        x1, x2 = op.nodes
        f = collocation_matrix(k1, p, x1) @ c @ collocation_matrix(k2, p, x2).T
        err = max(err, np.abs(op.apply(f) - c).max() / np.abs(c).max())
    return err <= 1e-12, "max coefficient error %.2e" % err


def _kernel_reassembly():
    from .kernels import kernel_pieces
    rng = np.random.default_rng(3)
    kappa = 2.0
    r_vec = rng.standard_normal((100, 3))
    n = rng.standard_normal((100, 3))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    r = np.linalg.norm(r_vec, axis=1)
    rn = np.sum(r_vec * n, 1)
    pc = kernel_pieces(kappa)
    sl = (pc["single", "real"](r) + 1j * pc["single", "imag"](r)) / (4 * np.pi)
    dl = (pc["double", "real"](r, rn) + 1j * pc["double", "imag"](r, rn)) / (4 * np.pi)
    g = np.exp(1j * kappa * r) / (4 * np.pi * r)
    dg = g * (1.0 - 1j * kappa * r) * rn / r ** 2
    e1 = np.max(np.abs(sl - g) / np.abs(g))
    e2 = np.max(np.abs(dl - dg) / np.abs(dg))
    err = max(e1, e2)
    return err <= 1e-15, "relative reassembly error %.2e" % err


def _special_functions():
    from .special import spherical_bessel_j, spherical_hankel_h1
    x = np.linspace(0.3, 20.0, 50)
    err = 0.0
    for n in range(11):
        w = spherical_bessel_j(n, x) * spherical_hankel_h1(n, x, True) \
            - spherical_bessel_j(n, x, True) * spherical_hankel_h1(n, x)
        err = max(err, np.abs(w - 1j / x ** 2).max() * x.min() ** 2)
    return err <= 1e-10, "Wronskian defect %.2e" % err


def _jump_coefficient():
    from .assembly import QuadratureConfig, c_diagnostic
    from .geometry import sphere
    from .space import build_space, collocation_points
    sp = build_space(sphere(), 2, 2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        c = c_diagnostic(sp, collocation_points(sp), QuadratureConfig())
    err = np.abs(c - 0.5).max()
    return err <= 1e-3, "max |c(x) - 1/2| = %.2e on the sphere" % err


def _solver_residual():
    from .assembly import QuadratureConfig, assemble, solve
    from .benchmarks import pulsating_sphere_problem
    from .space import build_space
    pb = pulsating_sphere_problem(1.0)
    sp = build_space(pb.surface, 2, 2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        system = assemble(pb, sp, QuadratureConfig())
    solve(system)
    res = system.residual()
    return res <= 1e-10, "relative residual %.2e" % res


CHECKS = [
    ("partition of unity", _partition_of_unity, True),
    ("quasi-interpolation exactness", _qi_exactness, True),
    ("kernel factorization", _kernel_reassembly, True),
    ("spherical Bessel Wronskian", _special_functions, True),
    ("jump coefficient c(x) = 1/2", _jump_coefficient, False),
    ("collocation solve residual", _solver_residual, False),
]


def run_checks(quick: bool = False) -> list:
    """List of (name, passed, detail)."""
    out = []
    for name, fn, cheap in CHECKS:
        if quick and not cheap:
            continue
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, "%s: %s" % (type(exc).__name__, exc)
        out.append((name, bool(ok), detail))
    return out
