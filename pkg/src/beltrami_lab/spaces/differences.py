"""Difference-based characterisation of ``F^s_{p,q}`` for compactly supported functions.

``d_t f(x) = t^{-2} int_{|h|<=t} |Delta^M_h f(x)| dh`` and
``w f(x) = ( int_0^1 d_t f(x)^q t^{-sq-1} dt )^{1/q}``; the norm is
``||f||_p + ||f||_{max(1,p)} + ||w f||_p``.
"""

from __future__ import annotations

import math

import numpy as np

from .. import _ext
from ..grid import GridField, lp_norm
from .exponents import SobolevIndex
from .norms import NormReport

__all__ = ["iterated_difference", "disk_pattern", "t_nodes", "w_field", "difference_norm"]

T_NODES = 48
DISK_POINTS = 64
_GOLDEN = math.pi * (3.0 - math.sqrt(5.0))


def iterated_difference(field: GridField, h: complex, M: int) -> GridField:
    """``Delta^M_h f(x) = sum_j C(M,j) (-1)^{M-j} f(x + j h)``, off-lattice samples bilinear."""
    if int(M) != M or M < 1:
        raise ValueError(f"difference order M must be a positive integer, got {M}")
    grid = field.grid
    if abs(h) < grid.spacing / 2:
        raise ValueError(f"displacement |h|={abs(h):.3g} below half a cell ({grid.spacing / 2:.3g})")
    dx, dy = h.real / grid.spacing, h.imag / grid.spacing
    acc = np.zeros_like(field.values)
    for j in range(M + 1):
        acc += (-1) ** (M - j) * math.comb(M, j) * _ext.shifted(field.values, j * dx, j * dy)
    return GridField(grid, acc)


def disk_pattern(count: int = DISK_POINTS) -> np.ndarray:
    """Fixed low-discrepancy points in the unit disk (Vogel spiral), shape ``(count, 2)``."""
    i = np.arange(count)
    r = np.sqrt((i + 0.5) / count)
    th = i * _GOLDEN
    return np.column_stack([r * np.cos(th), r * np.sin(th)])


def t_nodes(spacing: float, count: int = T_NODES) -> np.ndarray:
    return np.geomspace(spacing, 1.0, count)


def w_field(field: GridField, s: float, q: float, M: int) -> np.ndarray:
    """Pointwise ``w^M_q f`` with the t-integral trapezoidal in ``log t`` over ``[spacing, 1]``."""
    grid = field.grid
    ts = t_nodes(grid.spacing)
    pattern = disk_pattern()
    vals = np.ascontiguousarray(field.values, dtype=complex)
    logt = np.log(ts)
    integrand = []
    for t in ts:
        d_t = math.pi * _ext.difference_disk_mean(vals, np.ascontiguousarray(pattern * (t / grid.spacing)), int(M))
        if math.isinf(q):
            integrand.append(d_t * t ** (-s))
        else:
            integrand.append(d_t**q * t ** (-s * q))
    stack = np.array(integrand)
    if math.isinf(q):
        return stack.max(axis=0)
    return np.trapezoid(stack, logt, axis=0) ** (1.0 / q)


def difference_norm(field: GridField, index: SobolevIndex, M: int = 1) -> NormReport:
    """Difference norm; bands are ``[(0, ||f||_p), (1, ||f||_{max(1,p)}), (2, ||w f||_p)]``."""
    s, p, q = float(index.s), float(index.p), float(index.q)
    if int(M) != M or M < 1:
        raise ValueError(f"difference order M must be a positive integer, got {M}")
    if not 0 < s < M:
        raise ValueError(f"need 0 < s < M, got s={s}, M={M}")
    if math.isinf(p):
        raise ValueError("difference norm requires p < inf")
    w = field.grid.cell_area
    lp = lp_norm(field.values, p, w)
    lpbar = lp_norm(field.values, max(1.0, p), w)
    if not np.any(field.values):
        wn = 0.0
    else:
        wn = lp_norm(w_field(field, s, q, M), p, w)
    total = lp + lpbar + wn
    return NormReport(index, "difference", total, [(0, lp), (1, lpbar), (2, wn)], False)
