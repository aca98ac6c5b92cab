"""Littlewood-Paley windows on the frequency lattice."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..grid import FrequencyLattice, Grid

__all__ = ["smoothstep", "low_pass", "DyadicPartition", "build_partition", "default_band_count"]


def smoothstep(x, order: int = 3) -> np.ndarray:
    """Polynomial step, ``0`` for ``x <= 0`` and ``1`` for ``x >= 1``, ``C^order`` at both ends."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    n = order
    acc = np.zeros_like(x)
    for k in range(n + 1):
        acc += math.comb(n + k, k) * math.comb(2 * n + 1, n - k) * (-x) ** k
    return acc * x ** (n + 1)


def low_pass(modulus, j: int) -> np.ndarray:
    """``Phi_j(xi) = sigma(2 - |xi| / 2^j)``: 1 on ``|xi| <= 2^j``, 0 on ``|xi| >= 2^{j+1}``."""
    return smoothstep(2.0 - np.asarray(modulus) / 2.0**j)


def default_band_count(grid: Grid) -> int:
    """``log2(n) - 3``."""
    return int(round(math.log2(grid.n))) - 3


@dataclass(frozen=True, eq=False)
class DyadicPartition:
    """Windows ``psi_0 .. psi_J`` with ``psi_j = Phi_j - Phi_{j-1}`` (telescoping)."""

    lattice: FrequencyLattice
    windows: tuple
    J: int

    @property
    def grid(self) -> Grid:
        return self.lattice.grid

    def __len__(self):
        return len(self.windows)

    def total(self) -> np.ndarray:
        acc = np.zeros_like(self.windows[0])
        for w in self.windows:
            acc = acc + w
        return acc

    def unity_deviation(self, below: float | None = None) -> float:
        """Max of ``|sum_j psi_j - 1|`` over lattice points with ``|xi| < below`` (default ``2^J``)."""
        below = 2.0**self.J if below is None else below
        mask = self.lattice.modulus < below
        return float(np.max(np.abs(self.total()[mask] - 1.0)))

    def derivative_decay(self) -> np.ndarray:
        """``2^j * max|first difference of psi_j| / lattice step`` per band.

        Bounded uniformly in ``j`` when the windows obey
        ``|D psi_j| <= c 2^{-j}``.
        """
        step = 1.0 / (2.0 * self.grid.half_side)
        out = []
        for j, w in enumerate(self.windows):
            dx = np.abs(np.diff(np.fft.fftshift(w), axis=1)).max()
            dy = np.abs(np.diff(np.fft.fftshift(w), axis=0)).max()
            out.append(2.0**j * max(dx, dy) / step)
        return np.array(out)


def build_partition(lattice: FrequencyLattice | Grid, J: int | None = None) -> DyadicPartition:
    if isinstance(lattice, Grid):
        lattice = lattice.lattice
    grid = lattice.grid
    if J is None:
        J = default_band_count(grid)
    J = int(J)
    if J < 2:
        raise ValueError(f"need at least J = 2 bands, got {J}")
    top = lattice.max_modulus
    if not 2.0 ** (J - 1) < top:
        raise ValueError(
            f"J={J} exceeds the lattice: band {J} starts at |xi| = {2.0 ** (J - 1):g} "
            f"but the largest resolved frequency is {top:.4g} (n={grid.n}, L={grid.half_side})"
        )
    mod = lattice.modulus
    lows = [low_pass(mod, j) for j in range(J + 1)]
    windows = [lows[0]] + [lows[j] - lows[j - 1] for j in range(1, J + 1)]
    for w in windows:
        w.setflags(write=False)
    return DyadicPartition(lattice, tuple(windows), J)
