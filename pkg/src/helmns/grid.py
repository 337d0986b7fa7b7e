"""Sampling lattice, field containers, norms and snapshot I/O.

Arrays are stored with shape ``(nx, ny, nz)`` and indexed ``[i, j, k]``.  The
flat sample order used by :attr:`ScalarField.data` and by snapshot files is
x-fastest, i.e. ``values.ravel(order="F")``.
"""
from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Union

import numpy as np

MAGIC = b"HNSF"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIB3I3dB")


class Boundary(enum.IntEnum):
    PERIODIC = 0
    TRUNCATED_WINDOW = 1


class SnapshotError(ValueError):
    """Malformed or inconsistent snapshot file."""


@dataclass(frozen=True)
class Grid3:
    n: tuple[int, int, int]
    length: tuple[float, float, float]
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        n = tuple(int(v) for v in self.n)
        length = tuple(float(v) for v in self.length)
        if len(n) != 3 or len(length) != 3:
            raise ValueError(f"grid needs three sizes and three lengths, got n={self.n}, length={self.length}")
        if any(v < 4 for v in n):
            raise ValueError(f"every grid dimension must be >= 4, got n={n}")
        if not all(np.isfinite(length)) or any(v <= 0 for v in length):
            raise ValueError(f"box lengths must be positive and finite, got length={length}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "length", length)
        object.__setattr__(self, "boundary", Boundary(self.boundary))

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.n

    @property
    def spacing(self) -> tuple[float, float, float]:
        return tuple(L / n for L, n in zip(self.length, self.n))

    @property
    def size(self) -> int:
        return self.n[0] * self.n[1] * self.n[2]

    @property
    def cell_volume(self) -> float:
        hx, hy, hz = self.spacing
        return hx * hy * hz

    @property
    def volume(self) -> float:
        return self.length[0] * self.length[1] * self.length[2]

    @property
    def periodic(self) -> bool:
        return self.boundary is Boundary.PERIODIC

    def axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """1-D sample coordinates: ``i*h`` when periodic, cell centres otherwise."""
        shift = 0.0 if self.periodic else 0.5
        return tuple((np.arange(n) + shift) * h for n, h in zip(self.n, self.spacing))

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.meshgrid(*self.axes(), indexing="ij"))


def make_grid(n, length, boundary=Boundary.PERIODIC) -> Grid3:
    if isinstance(boundary, str):
        boundary = parse_boundary(boundary)
    return Grid3(tuple(n), tuple(length), boundary)


def parse_boundary(name: str) -> Boundary:
    key = name.strip().lower().replace("-", "_")
    aliases = {"periodic": Boundary.PERIODIC, "window": Boundary.TRUNCATED_WINDOW,
               "truncated_window": Boundary.TRUNCATED_WINDOW, "truncatedwindow": Boundary.TRUNCATED_WINDOW}
    if key not in aliases:
        raise ValueError(f"unknown boundary mode {name!r}")
    return aliases[key]


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=np.float64, copy=True)
    values.flags.writeable = False
    return values


class ScalarField:
    """Real samples of a scalar on a :class:`Grid3`.  Immutable."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid3, values):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != grid.shape:
            if values.size == grid.size and values.ndim == 1:
                values = values.reshape(grid.shape, order="F")
            else:
                raise ValueError(f"sample array of shape {values.shape} does not fit grid {grid.shape}")
        self.grid = grid
        self.values = _frozen(values)

    @classmethod
    def zeros(cls, grid: Grid3) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    @property
    def data(self) -> np.ndarray:
        """Samples flattened x-fastest."""
        return self.values.ravel(order="F")

    def _check(self, other):
        if isinstance(other, ScalarField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return ScalarField(self.grid, self.values + self._check(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - self._check(other))

    def __rsub__(self, other):
        return ScalarField(self.grid, self._check(other) - self.values)

    def __mul__(self, other):
        return ScalarField(self.grid, self.values * self._check(other))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return ScalarField(self.grid, self.values / c)

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def mean(self) -> float:
        return float(np.mean(self.values))

    def __repr__(self):
        return f"ScalarField(n={self.grid.n}, sup={np.max(np.abs(self.values)):.3e})"


class VectorField:
    """Three components on one grid, stored as a ``(3, nx, ny, nz)`` array.  Immutable."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid3, values):
        if isinstance(values, (list, tuple)):
            parts = []
            for c in values:
                if isinstance(c, ScalarField):
                    if c.grid != grid:
                        raise ValueError("vector components must share the vector's grid")
                    parts.append(c.values)
                else:
                    parts.append(np.asarray(c, dtype=np.float64))
            values = np.stack(parts)
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (3,) + grid.shape:
            raise ValueError(f"vector array of shape {values.shape} does not fit grid {grid.shape}")
        self.grid = grid
        self.values = _frozen(values)

    @classmethod
    def zeros(cls, grid: Grid3) -> "VectorField":
        return cls(grid, np.zeros((3,) + grid.shape))

    @classmethod
    def from_components(cls, x: ScalarField, y: ScalarField, z: ScalarField) -> "VectorField":
        return cls(x.grid, [x, y, z])

    @property
    def components(self) -> tuple[ScalarField, ScalarField, ScalarField]:
        return tuple(ScalarField(self.grid, c) for c in self.values)

    def __getitem__(self, i: int) -> ScalarField:
        return ScalarField(self.grid, self.values[i])

    def _check(self, other):
        if isinstance(other, VectorField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        if isinstance(other, ScalarField):
            raise TypeError("cannot combine a vector field with a scalar field elementwise")
        return other

    def __add__(self, other):
        return VectorField(self.grid, self.values + self._check(other))

    __radd__ = __add__

    def __sub__(self, other):
        return VectorField(self.grid, self.values - self._check(other))

    def __mul__(self, c):
        if isinstance(c, ScalarField):
            return VectorField(self.grid, self.values * c.values[None])
        return VectorField(self.grid, self.values * self._check(c))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return VectorField(self.grid, self.values / c)

    def __neg__(self):
        return VectorField(self.grid, -self.values)

    def dot(self, other: "VectorField") -> ScalarField:
        return ScalarField(self.grid, np.einsum("i...,i...->...", self.values, self._check(other)))

    def magnitude(self) -> ScalarField:
        return ScalarField(self.grid, np.sqrt(np.sum(self.values**2, axis=0)))

    def __repr__(self):
        return f"VectorField(n={self.grid.n}, sup={norms(self).sup:.3e})"


Field = Union[ScalarField, VectorField]


def sample_function(grid: Grid3, f: Callable) -> ScalarField:
    """Evaluate ``f(x, y, z)`` (numpy-broadcastable) at every grid point."""
    x, y, z = grid.mesh()
    with np.errstate(all="ignore"):
        values = np.broadcast_to(np.asarray(f(x, y, z), dtype=np.float64), grid.shape)
    bad = ~np.isfinite(values)
    if bad.any():
        i, j, k = (int(a[0]) for a in np.nonzero(bad))
        flat = i + grid.n[0] * (j + grid.n[1] * k)
        raise ValueError(f"non-finite sample at index (i={i}, j={j}, k={k}) [flat {flat}]: {values[i, j, k]}")
    return ScalarField(grid, values)


def sample_vector(grid: Grid3, fx: Callable, fy: Callable, fz: Callable) -> VectorField:
    return VectorField(grid, [sample_function(grid, f) for f in (fx, fy, fz)])


@dataclass(frozen=True)
class FieldNormSet:
    sup: float
    l2: float
    energy: float


def pointwise_magnitude(field: Field) -> np.ndarray:
    if isinstance(field, VectorField):
        return np.sqrt(np.sum(field.values**2, axis=0))
    return np.abs(field.values)


def norms(field: Field) -> FieldNormSet:
    """Sup norm and grid-weighted L2 norm (Euclidean point norm for vectors)."""
    mag = pointwise_magnitude(field)
    # np.sum is a fixed pairwise reduction, so the result is independent of worker count
    energy = float(np.sum(mag * mag)) * field.grid.cell_volume
    return FieldNormSet(sup=float(np.max(mag)), l2=float(np.sqrt(energy)), energy=energy)


def inner(a: Field, b: Field) -> float:
    """Grid inner product  sum(a.b) * cell volume."""
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    return float(np.sum(a.values * b.values)) * a.grid.cell_volume


def write_snapshot(field: Field, path) -> None:
    grid = field.grid
    ncomp = 3 if isinstance(field, VectorField) else 1
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, int(grid.boundary), *grid.n, *grid.length, ncomp)
    comps = field.values if ncomp == 3 else field.values[None]
    with open(path, "wb") as fh:
        fh.write(header)
        for c in comps:
            fh.write(c.ravel(order="F").astype("<f8").tobytes())


def read_snapshot(path) -> Field:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise SnapshotError(f"{path}: file shorter than the {_HEADER.size}-byte header")
    magic, version, boundary, nx, ny, nz, lx, ly, lz, ncomp = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SnapshotError(f"{path}: bad magic bytes {magic!r}")
    if version != FORMAT_VERSION:
        raise SnapshotError(f"{path}: unsupported format version {version}")
    if ncomp not in (1, 3) or boundary not in (0, 1):
        raise SnapshotError(f"{path}: bad header (boundary={boundary}, components={ncomp})")
    grid = Grid3((nx, ny, nz), (lx, ly, lz), Boundary(boundary))
    expected = _HEADER.size + 8 * ncomp * grid.size
    if len(raw) != expected:
        raise SnapshotError(f"{path}: length mismatch, expected {expected} bytes, found {len(raw)}")
    samples = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    comps = [samples[c * grid.size:(c + 1) * grid.size].reshape(grid.shape, order="F") for c in range(ncomp)]
    if ncomp == 1:
        return ScalarField(grid, comps[0])
    return VectorField(grid, comps)
