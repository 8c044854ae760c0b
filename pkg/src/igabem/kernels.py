"""Helmholtz layer kernels split into the pieces each quadrature path needs.

With r = x - y and r = |r|,

    G(x, y)      = (cos kr + i sin kr) / (4 pi r)
    dG/dn_y      = (r.n / r^3) (cos kr + kr sin kr)
                   + i (r.n / r^2) (sin kr / r - k cos kr) / (4 pi)

The real parts carry the weak singularity and go through singularity
extraction; the imaginary parts are bounded and use the regular rule.
Functions named ``*_factor`` omit the 1/(4 pi), which assembly applies.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

FOUR_PI = 4.0 * np.pi
_SMALL = 1e-4


class KernelError(ValueError):
    pass


def sinc_factor(kappa: float, r) -> np.ndarray:
    """sin(kappa r) / r with the removable point r = 0 filled in."""
    r = np.asarray(r, dtype=float)
    x = kappa * r
    small = np.abs(x) < _SMALL
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(small, 0.0, np.sin(x) / np.where(small, 1.0, r))
    x2 = x * x
    series = kappa * (1.0 - x2 / 6.0 * (1.0 - x2 / 20.0))
    return np.where(small, series, out)


def double_zero_factor(kappa: float, r) -> np.ndarray:
    """sin(kappa r) / r - kappa cos(kappa r), which vanishes like r^2."""
    r = np.asarray(r, dtype=float)
    x = kappa * r
    small = np.abs(x) < _SMALL
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sin(x) / np.where(small, 1.0, r) - kappa * np.cos(x)
    x2 = x * x
    series = kappa * x2 * (1.0 / 3.0 - x2 / 30.0 + x2 * x2 / 840.0)
    return np.where(small, series, out)


def sl_real_cofactor(kappa: float, r) -> np.ndarray:
    return np.cos(kappa * np.asarray(r, dtype=float))


def dl_real_cofactor(kappa: float, r) -> np.ndarray:
    x = kappa * np.asarray(r, dtype=float)
    return np.cos(x) + x * np.sin(x)


def sl_kernel(kappa: float, r):
    """Free-space Green's function for distance r > 0."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise KernelError("single layer kernel evaluated at r = 0; use singularity extraction")
    val = (np.cos(kappa * r) / r + 1j * sinc_factor(kappa, r)) / FOUR_PI
    return complex(val) if val.ndim == 0 else val


def dl_kernel(kappa: float, r_vec, n_y, unit_normal: bool = True):
    """Normal derivative of G with respect to y, with r_vec = x - y.

    ``n_y`` is scaled to unit length unless ``unit_normal`` is False, in
    which case the unnormalized normal is used as given.
    """
    rv = np.asarray(r_vec, dtype=float)
    n = np.asarray(n_y, dtype=float)
    if unit_normal:
        n = n / np.linalg.norm(n, axis=-1, keepdims=True)
    r = np.linalg.norm(rv, axis=-1)
    if np.any(r <= 0):
        raise KernelError("double layer kernel evaluated at r = 0; use singularity extraction")
    rn = np.sum(rv * n, axis=-1)
    val = (rn / r ** 3 * dl_real_cofactor(kappa, r) + 1j * rn / r ** 2 * double_zero_factor(kappa, r)) / FOUR_PI
    return complex(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True)
class KernelPiece:
    """One real or imaginary part of a layer kernel.

    ``singular`` is the factor carrying the (weak) singularity as a
    function of (r, r.n) and ``cofactor`` the smooth remainder as a
    function of r.  Their product is the piece without 1/(4 pi).
    """

    layer: str
    component: str
    singular_class: str
    singular: Callable
    cofactor: Callable

    def __call__(self, r, rn=None):
        return self.singular(np.asarray(r, float), rn) * self.cofactor(np.asarray(r, float))


def kernel_pieces(kappa: float) -> dict:
    return {
        ("single", "real"): KernelPiece("single", "real", "weak", lambda r, rn: 1.0 / r,
                                        lambda r: sl_real_cofactor(kappa, r)),
        ("single", "imag"): KernelPiece("single", "imag", "smooth", lambda r, rn: np.ones_like(r),
                                        lambda r: sinc_factor(kappa, r)),
        ("double", "real"): KernelPiece("double", "real", "weak", lambda r, rn: rn / r ** 3,
                                        lambda r: dl_real_cofactor(kappa, r)),
        ("double", "imag"): KernelPiece("double", "imag", "bounded", lambda r, rn: rn / r ** 2,
                                        lambda r: double_zero_factor(kappa, r)),
    }


def c_coefficient(surface=None, x=None) -> float:
    """Jump coefficient of the double layer at a smooth boundary point."""
    return 0.5
