"""Fourier multipliers on the periodic grid.

Conventions: ``f^(xi) = sum f(z) exp(-2 pi i Re(conj(xi) z))`` (numpy's
unnormalised forward DFT) so that

* ``dbar`` has symbol ``pi i xi`` and ``d`` has symbol ``pi i conj(xi)``,
* the Beurling transform has symbol ``conj(xi) / xi``,
* the solid Cauchy transform (inverse of ``dbar``) has symbol ``1 / (pi i xi)``,
* the fractional derivative ``D^s`` has symbol ``|xi|^s``.

Symbols that are undefined at ``xi = 0`` take the value ``dc_value`` there
(``0`` by default), so these operators act on the mean-zero part of a field.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .grid import Grid, GridField

__all__ = [
    "MultiplierSpec",
    "set_workers",
    "forward_fft",
    "inverse_fft",
    "symbol",
    "apply_multiplier",
    "beurling",
    "conjugate_beurling",
    "beurling_bar",
    "cauchy",
    "cauchy_plane_correction",
    "dbar",
    "d",
    "fractional_derivative",
    "mollifier_profile",
    "mollifier_kernel",
    "mollify",
    "disk_indicator",
]

KINDS = ("beurling", "conjugate-beurling", "cauchy", "fractional", "dbar", "d")

_workers = None


def set_workers(n: int | None) -> None:
    """Thread count handed to ``scipy.fft``; ``None``/``0`` means scipy's default."""
    global _workers
    _workers = None if not n else int(n)


def _env_workers():
    raw = os.environ.get("BELTRAMI_LAB_THREADS")
    if raw:
        try:
            set_workers(int(raw))
        except ValueError:
            pass


_env_workers()


@dataclass(frozen=True)
class MultiplierSpec:
    kind: str
    s: float = 0.0
    dc_value: complex | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown multiplier kind {self.kind!r}")
        if self.kind == "fractional" and not self.s >= 0:
            raise ValueError(f"fractional order must be >= 0, got {self.s}")

    @property
    def dc(self) -> complex:
        if self.dc_value is not None:
            return complex(self.dc_value)
        if self.kind == "fractional" and self.s == 0:
            return 1.0
        return 0.0


def fft2(a: np.ndarray) -> np.ndarray:
    return sfft.fft2(a, workers=_workers)


def ifft2(a: np.ndarray) -> np.ndarray:
    return sfft.ifft2(a, workers=_workers)


def forward_fft(field: GridField) -> GridField:
    """Unnormalised DFT; the DC coefficient of a constant ``c`` is ``c n^2``."""
    return GridField(field.grid, sfft.fft2(field.values, workers=_workers))


def inverse_fft(coeffs: GridField) -> GridField:
    return GridField(coeffs.grid, sfft.ifft2(coeffs.values, workers=_workers))


@lru_cache(maxsize=64)
def _symbol_cached(grid: Grid, kind: str, s: float, dc: complex) -> np.ndarray:
    xi = grid.lattice.xi
    mod = grid.lattice.modulus
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind == "beurling":
            m = np.conj(xi) / xi
        elif kind == "conjugate-beurling":
            m = xi / np.conj(xi)
        elif kind == "cauchy":
            m = 1.0 / (np.pi * 1j * xi)
        elif kind == "dbar":
            m = np.pi * 1j * xi
        elif kind == "d":
            m = np.pi * 1j * np.conj(xi)
        else:
            m = mod**s
    m = np.asarray(m, dtype=complex)
    m[0, 0] = dc
    m.setflags(write=False)
    return m


def symbol(grid: Grid, spec: MultiplierSpec) -> np.ndarray:
    """Multiplier array in FFT order for ``spec`` on ``grid``."""
    return _symbol_cached(grid, spec.kind, float(spec.s), spec.dc)


def _apply(field: GridField, m: np.ndarray) -> GridField:
    spec = sfft.fft2(field.values, workers=_workers)
    spec *= m
    return GridField(field.grid, sfft.ifft2(spec, workers=_workers))


def apply_multiplier(field: GridField, spec: MultiplierSpec) -> GridField:
    return _apply(field, symbol(field.grid, spec))


def beurling(field: GridField) -> GridField:
    return _apply(field, symbol(field.grid, MultiplierSpec("beurling")))


def conjugate_beurling(field: GridField) -> GridField:
    """Multiplier ``xi / conj(xi)``: the L2 adjoint and inverse of :func:`beurling`."""
    return _apply(field, symbol(field.grid, MultiplierSpec("conjugate-beurling")))


def beurling_bar(field: GridField) -> GridField:
    """``conj(B f)``, the operator paired with ``nu`` in the Beltrami equation."""
    return beurling(field).conj()


def cauchy(field: GridField) -> GridField:
    """Periodic solid Cauchy transform of the mean-zero part of ``field``.

    ``dbar(cauchy(f)) = f - mean(f)`` exactly in the discrete algebra.  The
    plane transform ``(1/pi) int f(w) / (z - w) dA(w)`` of a field supported
    well inside the box is recovered by adding
    :func:`cauchy_plane_correction`, up to periodic-image terms of size
    ``O(|z|^3 / L^4)``.
    """
    grid = field.grid
    r = grid.half_side / 2.0
    outside = np.abs(grid.z) >= r
    if np.any(np.abs(field.values[outside]) > 1e-12 * max(field.sup(), 1e-300)):
        warnings.warn(
            "cauchy: field is not supported inside |z| < half_side/2; "
            "periodic images will be significant",
            RuntimeWarning,
            stacklevel=2,
        )
    return _apply(field, symbol(grid, MultiplierSpec("cauchy")))


def cauchy_plane_correction(field: GridField) -> GridField:
    """Affine term ``mean(f) * conj(z) - mean(conj(z) f)`` lost by the periodic Cauchy transform.

    The periodised Cauchy kernel on the square torus is
    ``zeta(z)/pi - conj(z)/A`` (``zeta`` the Weierstrass function of the
    square lattice, ``A`` the box area), which has zero mean and no linear
    term in ``z``; convolving it against ``f`` gives the expression above.
    """
    grid = field.grid
    zb = np.conj(grid.z)
    m = field.values.mean()
    c = (zb * field.values).mean()
    return GridField(grid, m * zb - c)


def dbar(field: GridField) -> GridField:
    return _apply(field, symbol(field.grid, MultiplierSpec("dbar")))


def d(field: GridField) -> GridField:
    return _apply(field, symbol(field.grid, MultiplierSpec("d")))


def fractional_derivative(field: GridField, s: float) -> GridField:
    if not s >= 0:
        raise ValueError(f"fractional order must be >= 0, got {s}")
    return _apply(field, symbol(field.grid, MultiplierSpec("fractional", s=float(s))))


# -- mollification ---------------------------------------------------------


def mollifier_profile(r) -> np.ndarray:
    """Unnormalised bump ``exp(-1/(1-r^2))`` on ``r < 1``, zero outside."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


def _wrapped_offsets(grid: Grid) -> np.ndarray:
    m = np.fft.fftfreq(grid.n, d=1.0 / grid.n) * grid.spacing
    return m[np.newaxis, :] + 1j * m[:, np.newaxis]


@lru_cache(maxsize=16)
def _mollifier_symbol(grid: Grid, n_moll: int) -> np.ndarray:
    kernel = mollifier_kernel(grid, n_moll)
    m = sfft.fft2(kernel).real
    m[0, 0] = 1.0
    m.setflags(write=False)
    return m


def mollifier_kernel(grid: Grid, n_moll: int, profile=mollifier_profile) -> np.ndarray:
    """Discrete ``psi_n(z) = n^2 psi(n z)`` with origin at index ``(0, 0)``, weights summing to 1."""
    if int(n_moll) != n_moll or n_moll < 1:
        raise ValueError(f"n_moll must be a positive integer, got {n_moll}")
    w = profile(np.abs(_wrapped_offsets(grid)) * n_moll)
    total = w.sum()
    if total == 0.0:
        # support below one cell: the discrete mollifier is the identity
        w = np.zeros_like(w)
        w[0, 0] = 1.0
        return w
    return w / total


def mollify(field: GridField, n_moll: int) -> GridField:
    """Circular convolution with the discrete ``psi_n`` (computed spectrally)."""
    if int(n_moll) != n_moll or n_moll < 1:
        raise ValueError(f"n_moll must be a positive integer, got {n_moll}")
    return _apply(field, _mollifier_symbol(field.grid, int(n_moll)))


# -- coefficient helpers -----------------------------------------------------


def disk_indicator(grid: Grid, radius: float = 1.0, supersample: int = 8) -> GridField:
    """Cell-averaged indicator of ``|z| < radius`` using ``supersample**2`` points per cell.

    Cells are centred on the sample points.
    """
    h = grid.spacing
    sub = (np.arange(supersample) + 0.5) / supersample - 0.5
    offsets = (sub[np.newaxis, :] + 1j * sub[:, np.newaxis]).ravel() * h
    z = grid.z
    acc = np.zeros(z.shape)
    near = np.abs(np.abs(z) - radius) <= h
    acc[(np.abs(z) < radius) & ~near] = 1.0
    zn = z[near]
    inside = np.abs(zn[:, np.newaxis] + offsets[np.newaxis, :]) < radius
    acc[near] = inside.mean(axis=1)
    return GridField(grid, acc)
