"""Periodic grids on the flat tori T^1 and T^2, value fields and the torus metric."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


class ConfigurationError(ValueError):
    """Raised for parameter blocks outside their documented ranges."""


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform axis-aligned grid with ``resolution`` nodes per axis.

    Nodes are flattened in C order, so in 2D node ``i * N + j`` sits at
    ``(i / N, j / N)``.
    """

    dim: int
    resolution: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ConfigurationError(f"dim must be 1 or 2, got {self.dim}")
        if self.resolution < 8:
            raise ConfigurationError(f"resolution must be >= 8, got {self.resolution}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.resolution

    @property
    def size(self) -> int:
        return self.resolution**self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.resolution,) * self.dim

    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``(size, dim)``."""
        ax = np.arange(self.resolution) / self.resolution
        mesh = np.meshgrid(*([ax] * self.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def index_of(self, multi_index) -> int:
        idx = np.mod(np.asarray(multi_index, dtype=int), self.resolution)
        return int(np.ravel_multi_index(tuple(np.atleast_1d(idx)), self.shape))

    def nearest_node(self, point) -> int:
        p = reduce_point(point, self.dim)
        return self.index_of(np.rint(p * self.resolution).astype(int))


def make_grid(dim: int, resolution: int) -> PeriodicGrid:
    return PeriodicGrid(dim, resolution)


@dataclass(frozen=True)
class ValueField:
    grid: PeriodicGrid
    samples: np.ndarray
    time_tag: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float).reshape(-1)
        if s.size != self.grid.size:
            raise GridMismatchError(
                f"expected {self.grid.size} samples, got {s.size}"
            )
        if not np.all(np.isfinite(s)):
            raise ValueError("value field samples must be finite")
        s = s.copy()
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "time_tag", float(self.time_tag) % 1.0)

    def __add__(self, c: float) -> "ValueField":
        return ValueField(self.grid, self.samples + c, self.time_tag)

    def __sub__(self, c: float) -> "ValueField":
        return ValueField(self.grid, self.samples - c, self.time_tag)

    def with_samples(self, samples, time_tag=None) -> "ValueField":
        tag = self.time_tag if time_tag is None else time_tag
        return ValueField(self.grid, samples, tag)

    def as_array(self) -> np.ndarray:
        return self.samples.reshape(self.grid.shape)

    def interpolate(self, points) -> np.ndarray:
        return interpolate(self, points)

    @classmethod
    def from_function(cls, grid: PeriodicGrid, fn, time_tag: float = 0.0):
        x = grid.coords()
        vals = fn(x[:, 0]) if grid.dim == 1 else fn(x)
        return cls(grid, np.asarray(vals, dtype=float), time_tag)


def reduce_point(point, dim: int | None = None) -> np.ndarray:
    """Reduce coordinates into ``[0, 1)``; idempotent."""
    p = np.atleast_1d(np.asarray(point, dtype=float))
    if dim is not None and p.shape[-1] != dim:
        raise ValueError(f"point has {p.shape[-1]} coordinates, expected {dim}")
    r = np.mod(p, 1.0)
    # mod can return exactly 1.0 for tiny negative inputs
    return np.where(r >= 1.0, 0.0, r)


def wrap_displacement(d) -> np.ndarray:
    """Minimal-lift representative of a displacement, componentwise in [-1/2, 1/2)."""
    d = np.asarray(d, dtype=float)
    return d - np.floor(d + 0.5)


def torus_distance(a, b) -> float | np.ndarray:
    """Flat distance on T^n; broadcasts over leading axes."""
    d = wrap_displacement(np.asarray(b, dtype=float) - np.asarray(a, dtype=float))
    d = np.atleast_1d(d)
    out = np.sqrt(np.sum(d * d, axis=-1))
    return float(out) if np.ndim(out) == 0 else out


def min_lift_displacement(a, b, lift_radius: int = 2) -> np.ndarray:
    """All lifted displacements ``b - a + k`` with ``|k_i| <= lift_radius``.

    Both points are reduced into ``[0, 1)`` first.  Rows are sorted by Euclidean norm; ties keep the enumeration order
    (k lexicographic from ``-lift_radius``), with the sort being stable.
    """
    if lift_radius < 1:
        raise ValueError("lift_radius must be >= 1")
    a = reduce_point(a)
    b = reduce_point(b)
    n = a.size
    shifts = np.array(
        list(itertools.product(range(-lift_radius, lift_radius + 1), repeat=n)),
        dtype=float,
    )
    disp = (b - a)[None, :] + shifts
    norms = np.linalg.norm(disp, axis=1)
    order = np.argsort(norms, kind="stable")
    return disp[order]


def lift_shifts(dim: int, lift_radius: int) -> np.ndarray:
    return np.array(
        list(itertools.product(range(-lift_radius, lift_radius + 1), repeat=dim)),
        dtype=float,
    )


def sup_distance(u: ValueField, v: ValueField) -> float:
    if u.grid != v.grid:
        raise GridMismatchError(f"{u.grid} vs {v.grid}")
    return float(np.max(np.abs(u.samples - v.samples)))


def interpolate(u: ValueField, points) -> np.ndarray:
    """Periodic multilinear interpolation of ``u`` at arbitrary points.

    ``points`` has shape ``(m,)`` in 1D or ``(m, 2)`` in 2D.
    """
    g = u.grid
    n = g.resolution
    arr = u.as_array()
    pts = np.asarray(points, dtype=float)
    if g.dim == 1:
        s = np.mod(pts.reshape(-1), 1.0) * n
        i0 = np.floor(s).astype(int)
        w = s - i0
        i0 %= n
        return (1 - w) * arr[i0] + w * arr[(i0 + 1) % n]
    pts = pts.reshape(-1, 2)
    s = np.mod(pts, 1.0) * n
    i0 = np.floor(s).astype(int)
    w = s - i0
    i0 %= n
    i1 = (i0 + 1) % n
    wx, wy = w[:, 0], w[:, 1]
    return (
        (1 - wx) * (1 - wy) * arr[i0[:, 0], i0[:, 1]]
        + wx * (1 - wy) * arr[i1[:, 0], i0[:, 1]]
        + (1 - wx) * wy * arr[i0[:, 0], i1[:, 1]]
        + wx * wy * arr[i1[:, 0], i1[:, 1]]
    )


def random_field(grid: PeriodicGrid, rng: np.random.Generator, modes: int = 4,
                 amplitude: float = 1.0) -> ValueField:
    """Smooth random field: a trigonometric polynomial with decaying coefficients."""
    x = grid.coords()
    vals = np.zeros(grid.size)
    ks = [k for k in itertools.product(range(-modes, modes + 1), repeat=grid.dim)
          if any(k)]
    for k in ks:
        k = np.asarray(k, dtype=float)
        amp = amplitude * rng.normal() / (1.0 + k @ k)
        phase = rng.uniform(0, 2 * np.pi)
        vals += amp * np.cos(2 * np.pi * (x @ k) + phase)
    return ValueField(grid, vals)
