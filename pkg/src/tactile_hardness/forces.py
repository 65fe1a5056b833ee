"""Displacement to force decomposition, contact segmentation and region metrics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import DisplacementField, FieldError, ForceField, GridDims, box_mean


@dataclass(frozen=True)
class DecompositionCalib:
    normal_gain: float = 1.0  # ru per mm of normal indentation
    shear_gain: float = 1.0  # ru per mm of tangential marker motion

    def __post_init__(self):
        if not (self.normal_gain > 0 and self.shear_gain > 0):
            raise FieldError("decomposition gains must be positive")


@dataclass(frozen=True)
class SegmentationConfig:
    tau: float = 0.1
    filter_kernel: int = 3

    def __post_init__(self):
        if not self.tau >= 0:
            raise FieldError(f"tau must be non-negative, got {self.tau}")
        k = self.filter_kernel
        if int(k) != k or k < 1 or k % 2 == 0:
            raise FieldError(f"filter_kernel must be an odd positive integer, got {k}")


@dataclass(frozen=True, eq=False)
class ContactRegion:
    """Set of contact cells, stored as a read-only boolean mask."""

    dims: GridDims
    mask: np.ndarray

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool)
        if mask.shape != self.dims.shape:
            raise FieldError(f"mask shape {mask.shape} does not match {self.dims.shape}")
        mask.flags.writeable = False
        object.__setattr__(self, "mask", mask)

    @classmethod
    def from_cells(cls, dims: GridDims, cells) -> "ContactRegion":
        mask = np.zeros(dims.shape, dtype=bool)
        for x, y in cells:
            if not (0 <= x < dims.width and 0 <= y < dims.height):
                raise FieldError(f"cell {(x, y)} outside {dims.width}x{dims.height} grid")
            mask[y, x] = True
        return cls(dims, mask)

    @property
    def cells(self) -> frozenset[tuple[int, int]]:
        ys, xs = np.nonzero(self.mask)
        return frozenset(zip(xs.tolist(), ys.tolist()))

    @property
    def area(self) -> int:
        return int(self.mask.sum())

    def __len__(self) -> int:
        return self.area

    def __eq__(self, other):
        if not isinstance(other, ContactRegion):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self.mask, other.mask)


class RegionStat(NamedTuple):
    value: float
    empty: bool


class ShearStat(NamedTuple):
    fx: float
    fy: float
    magnitude: float
    empty: bool


def decompose(disp: DisplacementField, calib: DecompositionCalib) -> ForceField:
    return ForceField(disp.dims, calib.shear_gain * disp.dx, calib.shear_gain * disp.dy,
                      calib.normal_gain * disp.dz)


def filter_field(fz: np.ndarray, config: SegmentationConfig) -> np.ndarray:
    return box_mean(fz, config.filter_kernel)


def segment_contact(fz: np.ndarray, config: SegmentationConfig, dims: GridDims | None = None) -> ContactRegion:
    """Cells whose filtered normal force is strictly above ``tau``."""
    fz = np.asarray(fz, dtype=float)
    if dims is None:
        dims = GridDims(fz.shape[1], fz.shape[0])
    elif fz.shape != dims.shape:
        raise FieldError(f"grid shape {fz.shape} does not match {dims.shape}")
    return ContactRegion(dims, filter_field(fz, config) > config.tau)


def _check(field: ForceField, region: ContactRegion):
    if region.dims.shape != field.dims.shape:
        raise FieldError("contact region does not match field dims")


def mean_normal(field: ForceField, region: ContactRegion) -> RegionStat:
    _check(field, region)
    if region.area == 0:
        return RegionStat(0.0, True)
    return RegionStat(float(np.abs(field.fz[region.mask]).mean()), False)


def max_normal(field: ForceField, region: ContactRegion) -> RegionStat:
    _check(field, region)
    if region.area == 0:
        return RegionStat(0.0, True)
    return RegionStat(float(np.abs(field.fz[region.mask]).max()), False)


def mean_shear(field: ForceField, region: ContactRegion) -> ShearStat:
    _check(field, region)
    if region.area == 0:
        return ShearStat(0.0, 0.0, 0.0, True)
    fx = float(field.fx[region.mask].mean())
    fy = float(field.fy[region.mask].mean())
    return ShearStat(fx, fy, float(np.hypot(fx, fy)), False)
