"""Spherical Bessel/Hankel functions and Legendre polynomials.

Thin wrappers over ``scipy.special`` with the domain checks and the
derivative convention used by the scattering series.
"""
from __future__ import annotations

import numpy as np
from scipy import special as sp

MAX_ORDER = 12


class SpecialFunctionError(ValueError):
    pass


def _check_order(n: int) -> int:
    n = int(n)
    if n < 0 or n > MAX_ORDER:
        raise SpecialFunctionError("order must lie in 0..%d" % MAX_ORDER)
    return n


def spherical_bessel_j(n: int, x, derivative: bool = False):
    return sp.spherical_jn(_check_order(n), np.asarray(x, dtype=float), derivative)


def spherical_bessel_y(n: int, x, derivative: bool = False):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise SpecialFunctionError("spherical Bessel y_n needs x > 0")
    return sp.spherical_yn(_check_order(n), x, derivative)


def spherical_hankel_h1(n: int, x, derivative: bool = False):
    """h_n = j_n + i y_n (outgoing for the e^{-i w t} time convention)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise SpecialFunctionError("spherical Hankel function needs x > 0")
    return spherical_bessel_j(n, x, derivative) + 1j * spherical_bessel_y(n, x, derivative)


def legendre_p(n: int, x):
    return sp.eval_legendre(_check_order(n), np.asarray(x, dtype=float))
