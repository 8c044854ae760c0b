"""Benchmark problems with analytic solutions.

All data callables take points ``y`` (..., 3) and unit normals ``n``
(..., 3) pointing out of the computational domain.
"""
from __future__ import annotations

import numpy as np

from .geometry import sphere, torus
from .post import BoundaryProblem
from .special import legendre_p, spherical_bessel_j, spherical_hankel_h1

SERIES_TERMS = 10
SQRT3 = np.sqrt(3.0)


def _dot(a, b):
    return np.einsum("...c,...c->...", a, b)


# pulsating sphere --------------------------------------------------------

def monopole(kappa: float, x) -> np.ndarray:
    r = np.linalg.norm(x, axis=-1)
    return np.exp(1j * kappa * r) / (4 * np.pi * r)


def monopole_gradient(kappa: float, x) -> np.ndarray:
    r = np.linalg.norm(x, axis=-1)
    du = np.exp(1j * kappa * r) * (1j * kappa * r - 1.0) / (4 * np.pi * r ** 2)
    return (du / r)[..., None] * x


def pulsating_sphere_problem(kappa: float = 1.0, radius: float = 1.0) -> BoundaryProblem:
    """Exterior Neumann problem on a sphere with the outgoing monopole as solution.

    On the unit sphere du/dr = e^{i kappa}(i kappa - 1)/(4 pi) and
    u = e^{i kappa}/(4 pi).  The datum passed to the solver is du/dn with n
    pointing out of the exterior domain, i.e. into the sphere.
    """
    def datum(y, n):
        return _dot(monopole_gradient(kappa, y), n)

    def exact(y, n):
        return monopole(kappa, y)

    return BoundaryProblem("exterior", "neumann", float(kappa), sphere(radius), datum, None, exact,
                           lambda x: monopole(kappa, np.asarray(x, float)), "pulsating_sphere")


def pulsating_sphere_data(kappa: float) -> tuple:
    """(du/dr, u) of the monopole on the unit sphere."""
    e = np.exp(1j * kappa)
    return e * (1j * kappa - 1.0) / (4 * np.pi), e / (4 * np.pi)


# rigid scattering --------------------------------------------------------

def _cos_theta(x, v):
    x = np.asarray(x, dtype=float)
    return np.clip(_dot(x, v) / np.linalg.norm(x, axis=-1), -1.0, 1.0)


def scattered_series(kappa: float, x, radius: float = 1.0, amplitude: float = 1.0,
                     direction=(1.0, 0.0, 0.0), terms: int = SERIES_TERMS) -> np.ndarray:
    """Field scattered by a sound-hard sphere, n = 0..terms."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(direction, float) / np.linalg.norm(direction)
    r = np.linalg.norm(x, axis=-1)
    ct = _cos_theta(x, v)
    ka = kappa * radius
    out = np.zeros(r.shape, dtype=complex)
    for n in range(terms + 1):
        c = 1j ** n * (2 * n + 1) * spherical_bessel_j(n, ka, True) / spherical_hankel_h1(n, ka, True)
        out -= c * legendre_p(n, ct) * spherical_hankel_h1(n, kappa * r)
    return amplitude * out


def total_series(kappa: float, x, radius: float = 1.0, amplitude: float = 1.0,
                 direction=(1.0, 0.0, 0.0), terms: int = SERIES_TERMS) -> np.ndarray:
    """Incident plus scattered field, the incident wave expanded with the same truncation."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(direction, float) / np.linalg.norm(direction)
    r = np.linalg.norm(x, axis=-1)
    ct = _cos_theta(x, v)
    inc = np.zeros(r.shape, dtype=complex)
    for n in range(terms + 1):
        inc += 1j ** n * (2 * n + 1) * spherical_bessel_j(n, kappa * r) * legendre_p(n, ct)
    return amplitude * inc + scattered_series(kappa, x, radius, amplitude, v, terms)


def plane_wave(kappa: float, amplitude: float = 1.0, direction=(1.0, 0.0, 0.0)):
    v = np.asarray(direction, float) / np.linalg.norm(direction)

    def incident(x):
        return amplitude * np.exp(1j * kappa * _dot(np.asarray(x, float), v))
    return incident


def rigid_scattering_problem(kappa: float = 2.0, amplitude: float = 1.0, direction=(1.0, 0.0, 0.0),
                             radius: float = 1.0) -> BoundaryProblem:
    """Plane wave A e^{i kappa v.x} scattered by a sound-hard sphere.

    The unknown is the total pressure on the sphere; the solver sees a
    homogeneous Neumann datum and the incident field on the right-hand side.
    """
    if not kappa > 0:
        raise ValueError("scattering needs a positive wavenumber")
    v = np.asarray(direction, float) / np.linalg.norm(direction)
    inc = plane_wave(kappa, amplitude, v)

    def exact(y, n):
        return inc(y) + scattered_series(kappa, y, radius, amplitude, v)

    def exact_field(x):
        x = np.asarray(x, float)
        return inc(x) + scattered_series(kappa, x, radius, amplitude, v)

    return BoundaryProblem("exterior", "neumann", float(kappa), sphere(radius), None, inc, exact, exact_field,
                           "rigid_scattering")


def equatorial_circle(radius: float = 10.0, n: int = 360) -> np.ndarray:
    """Points on the circle of given radius in the plane z = 0."""
    th = 2 * np.pi * np.arange(n) / n
    return np.stack([radius * np.cos(th), radius * np.sin(th), np.zeros(n)], axis=1)


# interior torus ----------------------------------------------------------

def sine_product(kappa: float, x) -> np.ndarray:
    a = kappa / SQRT3
    x = np.asarray(x, dtype=float)
    return np.sin(a * x[..., 0]) * np.sin(a * x[..., 1]) * np.sin(a * x[..., 2])


def sine_product_gradient(kappa: float, x) -> np.ndarray:
    a = kappa / SQRT3
    x = np.asarray(x, dtype=float)
    s = np.sin(a * x)
    c = np.cos(a * x)
    return a * np.stack([c[..., 0] * s[..., 1] * s[..., 2],
                         s[..., 0] * c[..., 1] * s[..., 2],
                         s[..., 0] * s[..., 1] * c[..., 2]], axis=-1)


def torus_interior_problem(kappa: float = 2.0) -> BoundaryProblem:
    """Interior Neumann problem in the torus with inner radius 1 and outer radius 3."""
    def datum(y, n):
        return _dot(sine_product_gradient(kappa, y), n)

    def exact(y, n):
        return sine_product(kappa, y).astype(complex)

    return BoundaryProblem("interior", "neumann", float(kappa), torus(), datum, None, exact,
                           lambda x: sine_product(kappa, x).astype(complex), "torus_interior")


TORUS_START = (9, 3)


def torus_elements(level: int) -> tuple:
    """Elements per patch direction of the level-th uniform torus mesh (level 1 = starting mesh)."""
    if level < 1:
        raise ValueError("refinement level starts at 1")
    n = TORUS_START[1] + level - 1
    return 3 * n, n


PROBLEMS = {
    "pulsating_sphere": pulsating_sphere_problem,
    "rigid_scattering": rigid_scattering_problem,
    "torus_interior": torus_interior_problem,
}
