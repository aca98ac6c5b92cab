"""Beltrami coefficients, the Neumann-series solver and the commutator diagnostics.

The principal solution of ``dbar f = mu d f + nu conj(d f)`` is ``f = z + C h``
with ``h`` the fixed point of::

    h = mu B h + nu conj(B h) + mu + nu

On the torus ``B`` is a multiplier of modulus one (zero at the mean), so the
map is a contraction in ``L^2`` with factor ``kappa = max(|mu| + |nu|)``.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, GridField, write_bfld
from .spectral import (
    beurling,
    cauchy,
    cauchy_plane_correction,
    d,
    fft2,
    fractional_derivative,
    ifft2,
    symbol,
    MultiplierSpec,
)

__all__ = [
    "CoefficientError",
    "ConvergenceError",
    "BeltramiCoefficients",
    "validate_coefficients",
    "SolverConfig",
    "PrincipalSolution",
    "solve",
    "beltrami_operator",
    "commutator",
    "identity_residual",
    "LiftedSplit",
    "lifted_derivative_split",
]


class CoefficientError(ValueError):
    """Coefficients violate ellipticity or the support normalisation."""


class ConvergenceError(RuntimeError):
    """The fixed-point iteration did not reach the tolerance."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = list(history)


SUPPORT_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class BeltramiCoefficients:
    mu: GridField
    nu: GridField
    kappa: float
    support_radius: float

    @property
    def grid(self) -> Grid:
        return self.mu.grid


def validate_coefficients(mu: GridField, nu: GridField | None = None, *,
                          rescale: bool = False) -> BeltramiCoefficients:
    """Measure ``kappa = max(|mu| + |nu|)`` and the support radius.

    Cell-averaged data may touch cells whose centres lie up to one spacing
    outside the disk; beyond that the field is rejected unless ``rescale`` is
    set, in which case the caller takes responsibility for the change of
    coordinates and only ``kappa < 1`` is enforced.
    """
    if nu is None:
        nu = mu.grid.zeros()
    if mu.grid != nu.grid:
        raise CoefficientError("mu and nu live on different grids")
    grid = mu.grid
    mag = np.abs(mu.values) + np.abs(nu.values)
    kappa = float(mag.max())
    if not kappa < 1.0:
        raise CoefficientError(f"ellipticity fails: max(|mu|+|nu|) = {kappa:.6g} >= 1")
    # spectral smoothing leaves roundoff-level tails everywhere; ignore them
    nz = mag > SUPPORT_FLOOR * max(kappa, 1e-300)
    radius = float(np.abs(grid.z[nz]).max()) if np.any(nz) else 0.0
    if radius > 1.0 + grid.spacing and not rescale:
        raise CoefficientError(
            f"coefficients supported up to |z| = {radius:.4g}; expected the closed unit disk"
        )
    return BeltramiCoefficients(mu, nu, kappa, radius)


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-10
    max_iterations: int = 200
    over_relaxation: float = 1.0
    anderson: int = 0  # history depth; 0 = plain fixed-point iteration

    def __post_init__(self):
        if not 0 < self.tolerance < 1:
            raise ValueError(f"tolerance must lie in (0, 1), got {self.tolerance}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not 0 < self.over_relaxation < 2:
            raise ValueError("over_relaxation must lie in (0, 2)")
        if self.anderson < 0:
            raise ValueError("anderson depth must be >= 0")

    def iteration_bound(self, kappa: float) -> int:
        """``ceil(log(tol (1 - kappa)) / log kappa) + 1``."""
        if kappa <= 0:
            return 1
        return math.ceil(math.log(self.tolerance * (1 - kappa)) / math.log(kappa)) + 1

    def check(self, kappa: float) -> None:
        if kappa > 0 and self.anderson == 0 and self.over_relaxation == 1.0:
            need = self.iteration_bound(kappa)
            if self.max_iterations < need:
                raise ValueError(
                    f"max_iterations={self.max_iterations} cannot reach tolerance "
                    f"{self.tolerance:g} at kappa={kappa:.4g}; need {need}"
                )


@dataclass(eq=False)
class PrincipalSolution:
    coefficients: BeltramiCoefficients
    h: GridField
    Bh: GridField
    f_displacement: GridField
    iterations: int
    residual: float
    history: list = field(default_factory=list)  # (iteration, relative, absolute, elapsed)

    @property
    def grid(self) -> Grid:
        return self.h.grid

    @property
    def dbar_f(self) -> GridField:
        return self.h

    @property
    def d_f(self) -> GridField:
        return self.Bh + 1.0

    def f(self, plane: bool = True) -> GridField:
        """``z + C h``; with ``plane`` the mean-removal correction is added back."""
        disp = self.f_displacement
        if plane:
            disp = disp + cauchy_plane_correction(self.h)
        return GridField(self.grid, self.grid.z + disp.values)

    def jacobian(self) -> np.ndarray:
        return np.abs(self.d_f.values) ** 2 - np.abs(self.h.values) ** 2

    def iteration_log_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "residual", "elapsed"])
        for it, res, _, el in self.history:
            w.writerow([it, repr(res), f"{el:.6f}"])
        return buf.getvalue()

    def increments(self) -> np.ndarray:
        """Absolute residuals ``||T h_m + g - h_m||_2``; these contract by ``kappa`` per step."""
        return np.array([row[2] for row in self.history])

    def dump(self, directory) -> dict:
        """Write ``h.bfld``, ``Bh.bfld``, ``f_disp.bfld`` and ``iterations.csv``."""
        from pathlib import Path

        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "h": out / "h.bfld",
            "Bh": out / "Bh.bfld",
            "f_disp": out / "f_disp.bfld",
            "iterations": out / "iterations.csv",
        }
        write_bfld(paths["h"], self.h)
        write_bfld(paths["Bh"], self.Bh)
        write_bfld(paths["f_disp"], self.f_displacement)
        paths["iterations"].write_text(self.iteration_log_csv())
        return paths


def beltrami_operator(coeffs: BeltramiCoefficients):
    """``T g = mu B g + nu conj(B g)`` on raw arrays (the linear part of the fixed-point map)."""
    mu, nu = coeffs.mu.values, coeffs.nu.values
    m = symbol(coeffs.grid, MultiplierSpec("beurling"))
    has_nu = bool(np.any(nu))

    def apply(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        bg = ifft2(fft2(g) * m)
        out = mu * bg
        if has_nu:
            out = out + nu * np.conj(bg)
        return out, bg

    return apply


def _l2(a: np.ndarray, w: float) -> float:
    return float(np.sqrt(np.sum(np.abs(a) ** 2) * w))


def solve(coeffs: BeltramiCoefficients, config: SolverConfig | None = None,
          forcing: GridField | None = None) -> PrincipalSolution:
    """Iterate ``h <- T h + g`` with ``g = mu + nu`` (or ``forcing``) until the relative residual
    ``||h - T h - g|| / ||h||`` drops below ``config.tolerance``.

    The returned ``h`` is the iterate whose residual is reported.
    """
    config = config or SolverConfig()
    config.check(coeffs.kappa)
    grid = coeffs.grid
    w = grid.cell_area
    g = (coeffs.mu.values + coeffs.nu.values) if forcing is None else forcing.values
    T = beltrami_operator(coeffs)
    h = np.zeros_like(g)
    history = []
    t0 = time.perf_counter()
    tiny = 1e-300
    omega = config.over_relaxation
    hist_x, hist_f = [], []
    for it in range(1, config.max_iterations + 1):
        th, bh = T(h)
        new = th + g
        r = new - h
        rn = _l2(r, w)
        hn = _l2(h, w)
        rel = rn / max(hn, tiny) if rn > 0 else 0.0
        history.append((it, rel, rn, time.perf_counter() - t0))
        if rel <= config.tolerance:
            return _assemble(coeffs, h, bh, it, rel, history)
        if config.anderson:
            h = _anderson_step(h, new, hist_x, hist_f, config.anderson)
        else:
            h = h + omega * r
    raise ConvergenceError(
        f"no convergence in {config.max_iterations} iterations "
        f"(kappa={coeffs.kappa:.4g}, last residual {history[-1][1]:.3g})",
        history,
    )


def _anderson_step(x, gx, hist_x, hist_f, depth):
    # type-II Anderson mixing on the real-ified residual
    f = gx - x
    hist_x.append(x.copy())
    hist_f.append(f.copy())
    if len(hist_x) > depth + 1:
        hist_x.pop(0)
        hist_f.pop(0)
    if len(hist_f) < 2:
        return gx
    dF = np.stack([(hist_f[i + 1] - hist_f[i]).ravel() for i in range(len(hist_f) - 1)], axis=1)
    dX = np.stack([(hist_x[i + 1] - hist_x[i]).ravel() for i in range(len(hist_x) - 1)], axis=1)
    A = np.concatenate([dF.real, dF.imag])
    b = np.concatenate([f.ravel().real, f.ravel().imag])
    gamma, *_ = np.linalg.lstsq(A, b, rcond=None)
    step = (x + f).ravel() - (dX + dF) @ gamma
    return step.reshape(x.shape)


def _assemble(coeffs, h, bh, iterations, residual, history) -> PrincipalSolution:
    grid = coeffs.grid
    hf = GridField(grid, h)
    return PrincipalSolution(
        coefficients=coeffs,
        h=hf,
        Bh=GridField(grid, bh),
        f_displacement=_quiet_cauchy(hf),
        iterations=iterations,
        residual=residual,
        history=history,
    )


def _quiet_cauchy(h: GridField) -> GridField:
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return cauchy(h)


# -- commutators and identities ------------------------------------------------


def _commutator(mu: GridField, s: float, target: GridField) -> GridField:
    return mu * fractional_derivative(target, s) - fractional_derivative(mu * target, s)


def commutator(mu: GridField, s: float, target: GridField) -> GridField:
    """``[mu, D^s] f = mu D^s f - D^s(mu f)`` for ``0 < s < 1``."""
    if not 0 < s < 1:
        raise ValueError(f"commutator order must lie in (0, 1), got {s}")
    if mu.grid != target.grid:
        raise ValueError("fields live on different grids")
    return _commutator(mu, s, target)


@dataclass
class IdentityReport:
    residual: float
    lhs_norm: float
    rhs_norm: float


def identity_residual(coeffs: BeltramiCoefficients, sol: PrincipalSolution, s: float) -> IdentityReport:
    """Relative mismatch in
    ``D^s h - mu B D^s h - nu conj(B D^s h) = -[mu,D^s](Bh) - [nu,D^s](conj Bh) + D^s mu + D^s nu``.
    """
    if not 0 < s < 1:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    mu, nu, h = coeffs.mu, coeffs.nu, sol.h
    Dh = fractional_derivative(h, s)
    BDh = beurling(Dh)
    lhs = Dh - mu * BDh - nu * BDh.conj()
    Bh = beurling(h)
    rhs = (
        -_commutator(mu, s, Bh)
        - _commutator(nu, s, Bh.conj())
        + fractional_derivative(mu, s)
        + fractional_derivative(nu, s)
    )
    diff = (lhs - rhs).norm()
    rn = rhs.norm()
    rel = 0.0 if diff == 0 else diff / max(rn, 1e-300)
    return IdentityReport(rel, lhs.norm(), rn)


@dataclass
class LiftedSplit:
    direct: GridField
    assembled: GridField
    discrepancy: float
    dmu_growth: float
    under_resolved: bool


def _band_limited_norm(field: GridField, fraction: float) -> float:
    lat = field.grid.lattice
    keep = (np.abs(lat.xi_x) <= fraction * lat.nyquist) & (np.abs(lat.xi_y) <= fraction * lat.nyquist)
    spec = fft2(field.values)
    return _l2(ifft2(spec * keep), field.grid.cell_area)


UNDER_RESOLVED_GROWTH = 0.5
UNDER_RESOLVED_BAND = 0.25  # grid n/4 resolves a quarter of the band


def lifted_derivative_split(sol: PrincipalSolution, s: float,
                            config: SolverConfig | None = None) -> LiftedSplit:
    """``D^{s-1} d h`` directly and through the differentiated Beltrami equation, ``1 < s < 2``.

    Differentiating ``h = mu (1 + B h) + nu conj(1 + B h)`` gives, with ``X = d h``::

        X - mu B X - nu conj(X) = d mu (1 + B h) + d nu conj(1 + B h)

    and applying ``D^{s-1}`` with the commutator expansion yields
    ``(I - mu B - nu conj) D^{s-1} X = R``; ``R`` is assembled term by term and the
    operator inverted by fixed-point iteration.  ``under_resolved`` is raised
    when ``||d mu||_2^2 + ||d nu||_2^2`` grows by 50% or more over the two
    refinement levels ``n/4 -> n`` (emulated by spectral truncation).
    """
    if not 1 < s < 2:
        raise ValueError(f"s must lie in (1, 2), got {s}")
    config = config or SolverConfig(tolerance=1e-13, max_iterations=400)
    coeffs = sol.coefficients
    grid = coeffs.grid
    mu, nu, h = coeffs.mu, coeffs.nu, sol.h
    r = s - 1.0
    Bh = beurling(h)
    dh = d(h)
    Bdh = beurling(dh)
    dmu, dnu = d(mu), d(nu)
    Dr = lambda g: fractional_derivative(g, r)  # noqa: E731
    direct = Dr(dh)

    rhs = (
        -_commutator(mu, r, Bdh)
        + dmu * Dr(Bh)
        - _commutator(dmu, r, Bh)
        + Dr(dmu)
        - _commutator(nu, r, dh.conj())
        + dnu * Dr(Bh).conj()
        - _commutator(dnu, r, Bh.conj())
        + Dr(dnu)
    )
    assembled = _solve_mu_b_nu_conj(mu, nu, rhs, config)
    disc = (direct - assembled).norm()
    ref = direct.norm()
    rel = 0.0 if disc == 0 else disc / max(ref, 1e-300)

    full = dmu.norm() ** 2 + dnu.norm() ** 2
    coarse = (_band_limited_norm(dmu, UNDER_RESOLVED_BAND) ** 2
              + _band_limited_norm(dnu, UNDER_RESOLVED_BAND) ** 2)
    growth = 0.0 if coarse == 0 else full / coarse - 1.0
    return LiftedSplit(direct, assembled, rel, growth, growth >= UNDER_RESOLVED_GROWTH)


def _solve_mu_b_nu_conj(mu: GridField, nu: GridField, rhs: GridField, config: SolverConfig) -> GridField:
    """Solve ``X - mu B X - nu conj(X) = rhs`` by fixed-point iteration."""
    grid = mu.grid
    w = grid.cell_area
    m = symbol(grid, MultiplierSpec("beurling"))
    a, b, g = mu.values, nu.values, rhs.values
    has_nu = bool(np.any(b))
    x = np.zeros_like(g)
    gn = _l2(g, w)
    if gn == 0:
        return grid.zeros()
    for _ in range(config.max_iterations):
        new = a * ifft2(fft2(x) * m) + g
        if has_nu:
            new = new + b * np.conj(x)
        step = _l2(new - x, w)
        x = new
        if step <= config.tolerance * max(_l2(x, w), 1e-300):
            return GridField(grid, x)
    raise ConvergenceError("lifted split: fixed-point iteration did not converge", [])
