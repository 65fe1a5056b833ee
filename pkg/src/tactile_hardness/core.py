"""Field and trace value types shared by the simulator, the force pipeline and the controller.

Grids are numpy arrays of shape ``(height, width)``; cell ``(x, y)`` lives at ``grid[y, x]``.
Arrays held by the types are frozen (``writeable=False``) so every value can be shared freely.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

DEFAULT_FRAME_RATE = 120.0


class FieldError(ValueError):
    """Raised when a grid, field or trace violates its invariants."""


@dataclass(frozen=True)
class GridDims:
    width: int = 64
    height: int = 48
    pitch: float = 0.5  # mm per cell

    def __post_init__(self):
        if int(self.width) != self.width or int(self.height) != self.height:
            raise FieldError("grid width/height must be integers")
        if self.width < 1 or self.height < 1:
            raise FieldError(f"grid must be at least 1x1, got {self.width}x{self.height}")
        if not (self.pitch > 0 and math.isfinite(self.pitch)):
            raise FieldError(f"pitch must be positive, got {self.pitch}")

    @classmethod
    def full_scale(cls) -> "GridDims":
        """Native 320x240 sensor resolution at 0.1 mm per pixel."""
        return cls(320, 240, 0.1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    @property
    def cell_count(self) -> int:
        return self.width * self.height

    @property
    def cell_area(self) -> float:
        return self.pitch * self.pitch

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """In-plane (x, y) coordinates in mm of every cell center, origin at the grid center."""
        xs = (np.arange(self.width) - (self.width - 1) / 2.0) * self.pitch
        ys = (np.arange(self.height) - (self.height - 1) / 2.0) * self.pitch
        return np.meshgrid(xs, ys)


def _frozen_grid(values, dims: GridDims, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != dims.shape:
        raise FieldError(f"{name} has shape {arr.shape}, expected {dims.shape}")
    if not np.all(np.isfinite(arr)):
        raise FieldError(f"{name} contains non-finite entries")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class DisplacementField:
    """Marker displacement observed by the sensor (mm). ``dz`` is normal indentation."""

    dims: GridDims
    dx: np.ndarray
    dy: np.ndarray
    dz: np.ndarray

    def __post_init__(self):
        for name in ("dx", "dy", "dz"):
            object.__setattr__(self, name, _frozen_grid(getattr(self, name), self.dims, name))
        if np.any(self.dz < 0):
            raise FieldError("dz must be non-negative")

    def scaled(self, a: float) -> "DisplacementField":
        return DisplacementField(self.dims, a * self.dx, a * self.dy, a * self.dz)


@dataclass(frozen=True, eq=False)
class ForceField:
    """Per-cell force density in relative units (ru)."""

    dims: GridDims
    fx: np.ndarray
    fy: np.ndarray
    fz: np.ndarray

    def __post_init__(self):
        for name in ("fx", "fy", "fz"):
            object.__setattr__(self, name, _frozen_grid(getattr(self, name), self.dims, name))
        if np.any(self.fz < 0):
            raise FieldError("fz must be non-negative")

    def total_normal(self) -> float:
        return float(self.fz.sum() * self.dims.cell_area)


def new_zero_displacement(dims: GridDims) -> DisplacementField:
    zeros = np.zeros(dims.shape)
    return DisplacementField(dims, zeros, zeros, zeros)


def frame_times(n: int, frame_rate: float) -> list[float]:
    if n < 1:
        raise FieldError(f"need at least one frame, got {n}")
    if not frame_rate > 0:
        raise FieldError(f"frame rate must be positive, got {frame_rate}")
    return [i / frame_rate for i in range(n)]


def box_mean(grid: np.ndarray, k: int) -> np.ndarray:
    """k x k moving average where edge cells average only their in-bounds neighbours."""
    if k < 1 or k % 2 == 0:
        raise FieldError(f"kernel size must be odd and positive, got {k}")
    grid = np.asarray(grid, dtype=float)
    if k == 1:
        return grid.copy()
    r = k // 2
    h, w = grid.shape
    padded = np.pad(grid, r)
    edge = np.pad(grid, r, mode="edge")
    sums = np.zeros_like(grid)
    lo, hi = grid.copy(), grid.copy()
    # direct sums over shifted views; an all-zero neighbourhood sums to exactly zero
    for dy in range(k):
        for dx in range(k):
            sums += padded[dy:dy + h, dx:dx + w]
            np.minimum(lo, edge[dy:dy + h, dx:dx + w], out=lo)
            np.maximum(hi, edge[dy:dy + h, dx:dx + w], out=hi)

    def in_bounds(n):
        i = np.arange(n)
        return np.minimum(i + r, n - 1) - np.maximum(i - r, 0) + 1

    counts = np.outer(in_bounds(h), in_bounds(w))
    # rounding must not push a mean outside its window's range (a flat tau-level patch stays at tau)
    return np.clip(sums / counts, lo, hi)


@dataclass(frozen=True)
class TraceSample:
    t: float
    delta: float
    mean_normal: float
    max_normal: float
    mean_shear: float
    contact_area: int

    def __post_init__(self):
        if self.t < 0 or self.delta < 0 or self.mean_normal < 0 or self.contact_area < 0:
            raise FieldError(f"negative quantity in trace sample {self}")
        if self.contact_area == 0 and (self.mean_normal != 0 or self.max_normal != 0):
            raise FieldError("empty contact must report zero normal force")
        if self.contact_area > 0 and self.max_normal < self.mean_normal - 1e-12:
            raise FieldError("max normal below mean normal")


COLUMNS = ("t", "delta", "mean_normal", "max_normal", "mean_shear", "contact_area")


@dataclass(frozen=True)
class GraspTrace:
    samples: tuple[TraceSample, ...]
    frame_rate: float = DEFAULT_FRAME_RATE
    _cols: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if not self.frame_rate > 0:
            raise FieldError(f"frame rate must be positive, got {self.frame_rate}")
        dt = 1.0 / self.frame_rate
        for a, b in zip(self.samples, self.samples[1:]):
            if abs((b.t - a.t) - dt) > 1e-9:
                raise FieldError(f"sample spacing {b.t - a.t} does not match 1/{self.frame_rate}")
        cols = {c: np.array([getattr(s, c) for s in self.samples], dtype=float) for c in COLUMNS}
        for arr in cols.values():
            arr.flags.writeable = False
        object.__setattr__(self, "_cols", cols)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[TraceSample]:
        return iter(self.samples)

    def __getitem__(self, i):
        return self.samples[i]

    def column(self, name: str) -> np.ndarray:
        return self._cols[name]

    @classmethod
    def from_columns(cls, frame_rate: float, mean_normal: Sequence[float], *, t0: float = 0.0,
                     delta=None, max_normal=None, mean_shear=None, contact_area=None) -> "GraspTrace":
        """Build a trace from metric columns; missing columns get neutral values.

        Mostly for synthetic traces in tests and analysis scripts.
        """
        n = len(mean_normal)
        mean_normal = [float(v) for v in mean_normal]
        delta = [0.0] * n if delta is None else delta
        max_normal = mean_normal if max_normal is None else max_normal
        mean_shear = [0.0] * n if mean_shear is None else mean_shear
        if contact_area is None:
            contact_area = [1 if m > 0 else 0 for m in mean_normal]
        samples = [
            TraceSample(t0 + i / frame_rate, float(delta[i]), mean_normal[i], float(max_normal[i]),
                        float(mean_shear[i]), int(contact_area[i]))
            for i in range(n)
        ]
        return cls(tuple(samples), frame_rate)
