"""Pure numpy implementation of the compiled kernels (same signatures, same results)."""

from __future__ import annotations

import math

import numpy as np


def _shift_weights(px: float, py: float):
    ax, ay = math.floor(px), math.floor(py)
    fx, fy = px - ax, py - ay
    return int(ax), int(ay), fx, fy


def shifted(f: np.ndarray, px: float, py: float) -> np.ndarray:
    """``f(x + (px, py))`` in grid units, bilinear and periodic."""
    ax, ay, fx, fy = _shift_weights(px, py)
    base = np.roll(f, (-ay, -ax), axis=(0, 1))
    right = np.roll(base, -1, axis=1)
    out = (1 - fx) * (1 - fy) * base + fx * (1 - fy) * right
    if fy:
        down = np.roll(base, -1, axis=0)
        out = out + (1 - fx) * fy * down + fx * fy * np.roll(down, -1, axis=1)
    return out


def difference_disk_mean(f: np.ndarray, offsets: np.ndarray, M: int) -> np.ndarray:
    n = f.shape[0]
    if n & (n - 1):
        raise ValueError("grid size must be a power of two")
    if M < 1:
        raise ValueError("difference order must be >= 1")
    coef = [(-1) ** (M - j) * math.comb(M, j) for j in range(M + 1)]
    out = np.zeros(f.shape)
    for dx, dy in np.asarray(offsets, dtype=float):
        acc = np.zeros_like(f)
        for j, c in enumerate(coef):
            acc += c * shifted(f, j * dx, j * dy)
        out += np.abs(acc)
    return out / len(offsets)
