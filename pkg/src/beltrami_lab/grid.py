"""Periodic sampling of the plane and the BFLD1 field dump format.

The plane is truncated to the torus ``[-L, L)^2`` with ``n`` samples per
axis.  Arrays are stored as ``values[k, j]`` where ``j`` runs along the real
axis (fastest, row-major) and ``k`` along the imaginary axis, so that the
sample ``values[k, j]`` sits at ``z = (-L + j*h) + 1j*(-L + k*h)``.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Grid",
    "GridField",
    "FrequencyLattice",
    "make_grid",
    "write_bfld",
    "read_bfld",
    "BfldError",
    "sample_at",
]


class BfldError(ValueError):
    """Malformed BFLD1 file."""


@dataclass(frozen=True)
class Grid:
    """Square periodic grid covering ``[-half_side, half_side)^2``."""

    n: int
    half_side: float

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise ValueError(f"n must be an integer, got {n!r}")
        if n < 16 or n & (n - 1):
            raise ValueError(f"n must be a power of two >= 16, got {n}")
        if not np.isfinite(self.half_side) or self.half_side <= 1.0:
            raise ValueError(
                f"half_side must exceed 1 so the unit disk fits inside, got {self.half_side}"
            )
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "half_side", float(self.half_side))

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_side / self.n

    @property
    def cell_area(self) -> float:
        return self.spacing**2

    @property
    def area(self) -> float:
        return (2.0 * self.half_side) ** 2

    @property
    def axis(self) -> np.ndarray:
        """Sample coordinates along one axis."""
        return -self.half_side + np.arange(self.n) * self.spacing

    @cached_property
    def z(self) -> np.ndarray:
        """Complex sample positions, shape ``(n, n)``."""
        a = self.axis
        return a[np.newaxis, :] + 1j * a[:, np.newaxis]

    def point(self, j: int, k: int) -> complex:
        h = self.spacing
        return complex(-self.half_side + j * h, -self.half_side + k * h)

    @cached_property
    def lattice(self) -> "FrequencyLattice":
        return FrequencyLattice(self)

    def field(self, values) -> "GridField":
        return GridField(self, values)

    def zeros(self) -> "GridField":
        return GridField(self, np.zeros((self.n, self.n), dtype=complex))

    def constant(self, c: complex) -> "GridField":
        return GridField(self, np.full((self.n, self.n), c, dtype=complex))


def make_grid(n: int, half_side: float) -> Grid:
    return Grid(n, half_side)


class FrequencyLattice:
    """Frequencies ``xi = (m_x + i m_y) / (2L)`` in FFT order.

    ``m`` runs over ``[-n/2, n/2)`` exactly as returned by ``fftfreq``; the
    unpaired Nyquist index carries ``m = -n/2``.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        m = np.fft.fftfreq(grid.n, d=1.0 / grid.n)
        scale = 1.0 / (2.0 * grid.half_side)
        self.xi_x = (m * scale)[np.newaxis, :]
        self.xi_y = (m * scale)[:, np.newaxis]
        self.xi = self.xi_x + 1j * self.xi_y
        self.modulus = np.abs(self.xi)

    @property
    def nyquist(self) -> float:
        """Largest resolved frequency modulus along an axis."""
        return self.grid.n / (4.0 * self.grid.half_side)

    @property
    def max_modulus(self) -> float:
        return float(self.modulus.max())

    def index_of(self, mx: int, my: int) -> tuple[int, int]:
        n = self.grid.n
        return my % n, mx % n


class GridField:
    """Complex samples on a :class:`Grid`.

    Instances are treated as immutable; arithmetic returns new fields.
    """

    __slots__ = ("grid", "values")
    __array_priority__ = 100

    def __init__(self, grid: Grid, values):
        arr = np.asarray(values)
        n = grid.n
        if arr.size != n * n:
            raise ValueError(f"expected {n * n} samples, got {arr.size}")
        arr = np.array(arr, dtype=complex).reshape(n, n)
        if not np.all(np.isfinite(arr)):
            raise ValueError("field contains non-finite samples")
        arr.setflags(write=False)
        self.grid = grid
        self.values = arr

    def __repr__(self):
        return f"GridField(n={self.grid.n}, half_side={self.grid.half_side})"

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def _coerce(self, other):
        if isinstance(other, GridField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return GridField(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridField(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return GridField(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return GridField(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return GridField(self.grid, -self.values)

    def __truediv__(self, other):
        return GridField(self.grid, self.values / self._coerce(other))

    def conj(self) -> "GridField":
        return GridField(self.grid, np.conj(self.values))

    def abs(self) -> np.ndarray:
        return np.abs(self.values)

    def mean(self) -> complex:
        return complex(self.values.mean())

    def norm(self, p: float = 2.0) -> float:
        """Discrete ``L^p`` norm with cell weight ``spacing**2``."""
        return lp_norm(self.values, p, self.grid.cell_area)

    def sup(self) -> float:
        return float(np.abs(self.values).max())


def lp_norm(values: np.ndarray, p: float, weight: float) -> float:
    a = np.abs(values)
    if np.isinf(p):
        return float(a.max()) if a.size else 0.0
    if p == 2:
        return float(np.sqrt(np.sum(a * a) * weight))
    return float((np.sum(a**p) * weight) ** (1.0 / p))


# -- BFLD1 ---------------------------------------------------------------

_MAGIC = "BFLD1"


def write_bfld(path, field: GridField) -> None:
    """Dump ``field`` as BFLD1: ASCII header then little-endian (re, im) pairs."""
    header = f"{_MAGIC} {field.grid.n} {field.grid.half_side!r}\n".encode("ascii")
    payload = np.empty((field.grid.n * field.grid.n, 2), dtype="<f8")
    payload[:, 0] = field.flat.real
    payload[:, 1] = field.flat.imag
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())
    os.replace(tmp, path)


def read_bfld(path) -> GridField:
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_bfld(data)


def parse_bfld(data: bytes) -> GridField:
    stream = io.BytesIO(data)
    line = stream.readline(256)
    if not line.endswith(b"\n"):
        raise BfldError("missing BFLD1 header line")
    try:
        parts = line.decode("ascii").split()
    except UnicodeDecodeError as exc:
        raise BfldError("header is not ASCII") from exc
    if len(parts) != 3 or parts[0] != _MAGIC:
        raise BfldError(f"bad header {line!r}")
    try:
        n = int(parts[1])
        half_side = float(parts[2])
    except ValueError as exc:
        raise BfldError(f"bad header {line!r}") from exc
    payload = data[len(line):]
    expected = n * n * 16
    if len(payload) != expected:
        raise BfldError(f"payload is {len(payload)} bytes, expected {expected} for n={n}")
    grid = Grid(n, half_side)
    pairs = np.frombuffer(payload, dtype="<f8").reshape(n * n, 2)
    return GridField(grid, pairs[:, 0] + 1j * pairs[:, 1])


def sample_at(field: GridField, points) -> np.ndarray:
    """Values of ``field`` at points that lie exactly on the grid."""
    grid = field.grid
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    j = (pts.real + grid.half_side) / grid.spacing
    k = (pts.imag + grid.half_side) / grid.spacing
    ji, ki = np.rint(j).astype(int), np.rint(k).astype(int)
    if np.max(np.abs(j - ji), initial=0) > 1e-9 or np.max(np.abs(k - ki), initial=0) > 1e-9:
        raise ValueError("points are not grid nodes")
    return field.values[ki % grid.n, ji % grid.n]
