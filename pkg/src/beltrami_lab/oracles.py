"""Independent reference values: quadrature and closed forms.

Nothing here touches the FFT path; these functions are what the spectral
operators are checked against.
"""

from __future__ import annotations

import numpy as np
from scipy import integrate

from .grid import Grid, GridField

__all__ = [
    "beurling_disk_quadrature",
    "cauchy_disk_quadrature",
    "gaussian_fractional_at_origin",
    "RadialStretch",
    "radial_stretch_oracle",
    "probe_points",
]


def _chord(z: complex, theta: float, radius: float):
    """Distances ``r1 <= r2`` where the ray ``z + r e^{i theta}`` meets the disk, or None."""
    e = np.exp(1j * theta)
    # |z + r e|^2 = radius^2  ->  r^2 + 2 r Re(conj(e) z) + |z|^2 - radius^2 = 0
    b = (np.conj(e) * z).real
    c = abs(z) ** 2 - radius**2
    disc = b * b - c
    if disc <= 0:
        return None
    root = np.sqrt(disc)
    r1, r2 = -b - root, -b + root
    if r2 <= 0:
        return None
    return max(r1, 0.0), r2


def _angular(fn, z, radius, epsabs=1e-12):
    def re(t):
        return fn(t).real

    def im(t):
        return fn(t).imag

    pts = None
    if abs(z) > radius:
        # the ray grazes the disk at theta0 +- asin(radius/|z|)
        t0 = np.angle(-z)
        w = np.arcsin(radius / abs(z))
        lo, hi = t0 - w, t0 + w
        opts = dict(epsabs=epsabs, epsrel=1e-12, limit=400)
        a = integrate.quad(re, lo, hi, **opts)[0]
        b = integrate.quad(im, lo, hi, **opts)[0]
        return a + 1j * b
    opts = dict(epsabs=epsabs, epsrel=1e-12, limit=400, points=pts)
    a = integrate.quad(re, 0.0, 2 * np.pi, **opts)[0]
    b = integrate.quad(im, 0.0, 2 * np.pi, **opts)[0]
    return a + 1j * b


def beurling_disk_quadrature(z: complex, radius: float = 1.0) -> complex:
    """``-(1/pi) p.v. int_{|w|<radius} dA(w) / (z - w)^2`` by adaptive quadrature.

    In polar coordinates about ``z`` the kernel is ``e^{-2i theta} / r^2``; the
    radial integral is a logarithm, and inside the disk the principal value
    discards the ball ``|w - z| < radius - |z|`` (which integrates to zero by
    symmetry).
    """
    z = complex(z)
    if abs(abs(z) - radius) < 1e-9:
        raise ValueError("probe point on the disk boundary")
    rho = radius - abs(z) if abs(z) < radius else 0.0

    def integrand(theta):
        ch = _chord(z, theta, radius)
        if ch is None:
            return 0.0
        r1, r2 = ch
        r1 = max(r1, rho)
        if r2 <= r1:
            return 0.0
        return np.exp(-2j * theta) * np.log(r2 / r1)

    return -_angular(integrand, z, radius) / np.pi


def cauchy_disk_quadrature(z: complex, radius: float = 1.0) -> complex:
    """``(1/pi) int_{|w|<radius} dA(w) / (z - w)`` by adaptive quadrature."""
    z = complex(z)

    def integrand(theta):
        ch = _chord(z, theta, radius)
        if ch is None:
            return 0.0
        r1, r2 = ch
        return -np.exp(-1j * theta) * (r2 - r1)

    return _angular(integrand, z, radius) / np.pi


def gaussian_fractional_at_origin(s: float) -> float:
    """``D^s exp(-pi|z|^2)`` at 0, i.e. ``2 pi int_0^inf r^{s+1} exp(-pi r^2) dr``."""
    val, _ = integrate.quad(lambda r: r ** (s + 1) * np.exp(-np.pi * r * r), 0, np.inf,
                            epsabs=1e-14, epsrel=1e-13, limit=200)
    return 2 * np.pi * val


def probe_points(count: int = 20, r_min: float = 1.1, r_max: float = 2.0,
                 snap: float | None = None, seed: int = 7):
    """Deterministic probe points in the annulus ``r_min <= |z| <= r_max``.

    With ``snap`` set, points are rounded to multiples of ``snap`` (pass the
    coarsest grid spacing so that every refinement samples them exactly).
    """
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        r = np.sqrt(rng.uniform(r_min**2, r_max**2))
        z = r * np.exp(1j * rng.uniform(0, 2 * np.pi))
        if snap:
            z = complex(round(z.real / snap) * snap, round(z.imag / snap) * snap)
            if not r_min <= abs(z) <= r_max or z in out:
                continue
        out.append(complex(z))
    return np.array(out)


class RadialStretch:
    """The map ``f(z) = z |z|^alpha`` on the unit disk, ``f(z) = z`` outside.

    With ``alpha = 2k / (1 - k)`` its Beltrami coefficient is
    ``mu = k z / conj(z)`` on the disk, and ``h = dbar f = (alpha/2) z^2 |z|^{alpha-2}``.
    """

    def __init__(self, k: float):
        if not 0.0 <= k <= 0.9:
            raise ValueError(f"k must lie in [0, 0.9], got {k}")
        self.k = float(k)
        self.alpha = 2 * self.k / (1 - self.k)

    def mu(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        inside = (np.abs(z) < 1) & (z != 0)
        out[inside] = self.k * z[inside] / np.conj(z[inside])
        return out

    def f(self, z):
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        return np.where(r < 1, z * r**self.alpha, z)

    def h(self, z):
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        a = self.alpha
        out = np.zeros_like(z)
        inside = (r < 1) & (r > 0)
        out[inside] = 0.5 * a * z[inside] ** 2 * r[inside] ** (a - 2)
        return out

    def df(self, z):
        """``d f``: ``(1 + alpha/2) |z|^alpha`` inside, 1 outside."""
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        return np.where(r < 1, (1 + 0.5 * self.alpha) * r**self.alpha, 1.0).astype(complex)

    def h_norm(self, p: float) -> float:
        """``||h||_{L^p}`` on the plane: ``(2 pi (alpha/2)^p / (alpha p + 2))^{1/p}``."""
        a = self.alpha
        if a == 0:
            return 0.0
        return float((2 * np.pi * (a / 2) ** p / (a * p + 2)) ** (1 / p))

    def sampled(self, grid: Grid, supersample: int = 8):
        """Cell-averaged (mu, f - z, h) on ``grid``."""
        h = grid.spacing
        sub = (np.arange(supersample) + 0.5) / supersample - 0.5
        offs = (sub[np.newaxis, :] + 1j * sub[:, np.newaxis]).ravel() * h
        z = grid.z
        mu = self.mu(z)
        hh = self.h(z)
        near = np.abs(np.abs(z) - 1) <= h
        near |= np.abs(z) <= h
        zn = z[near][:, np.newaxis] + offs[np.newaxis, :]
        mu[near] = self.mu(zn).mean(axis=1)
        hh[near] = self.h(zn).mean(axis=1)
        disp = self.f(z) - z
        return GridField(grid, mu), GridField(grid, disp), GridField(grid, hh)


def radial_stretch_oracle(k: float, grid: Grid):
    """``(mu, f_exact, h_exact)`` sampled on ``grid`` for the radial stretch with parameter ``k``."""
    rs = RadialStretch(k)
    mu, disp, h = rs.sampled(grid)
    return mu, GridField(grid, grid.z + disp.values), h
