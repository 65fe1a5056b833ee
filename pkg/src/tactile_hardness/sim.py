"""Deterministic forward model of a gel-pad tactile sensor squeezing a fruit.

The gel is a Winkler foundation (independent per-cell springs of stiffness ``gel_stiffness``)
in series with the fruit tissue. A rigid reference body (sphere or cylinder) is pushed
``closure`` mm past first touch; each cell carries ``kappa_eff * overlap`` of normal force
and the gel itself indents by ``kappa_eff / gel_stiffness * overlap``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .core import DEFAULT_FRAME_RATE, DisplacementField, FieldError, GridDims, box_mean

CORE_RAMP_WIDTH = 1.0  # mm over which the core stiffness phases in
TANGENTIAL_GAIN = 0.3  # mm of marker spread per unit surface slope


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class Sphere:
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise SimulationError(f"radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class Cylinder:
    radius: float
    axis: float = 0.0  # in-plane angle of the cylinder axis, rad

    def __post_init__(self):
        if not self.radius > 0:
            raise SimulationError(f"radius must be positive, got {self.radius}")


Geometry = Union[Sphere, Cylinder]


@dataclass(frozen=True)
class FruitModel:
    geometry: Geometry
    shell_stiffness: float
    name: str = "fruit"
    core_onset: Optional[float] = None
    core_stiffness: Optional[float] = None
    ripeness_decay: float = 0.0

    def __post_init__(self):
        if not self.shell_stiffness > 0:
            raise SimulationError(f"shell_stiffness must be positive, got {self.shell_stiffness}")
        if (self.core_onset is None) != (self.core_stiffness is None):
            raise SimulationError("core_onset and core_stiffness must be given together")
        if self.core_onset is not None:
            if not self.core_onset > 0:
                raise SimulationError(f"core_onset must be positive, got {self.core_onset}")
            if not self.core_stiffness > self.shell_stiffness:
                raise SimulationError("core_stiffness must exceed shell_stiffness")
        if not self.ripeness_decay >= 0:
            raise SimulationError(f"ripeness_decay must be non-negative, got {self.ripeness_decay}")

    @property
    def layered(self) -> bool:
        return self.core_onset is not None


@dataclass(frozen=True)
class SimConfig:
    dims: GridDims = field(default_factory=GridDims)
    gel_stiffness: float = 40.0
    closing_speed: float = 10.0
    frame_rate: float = DEFAULT_FRAME_RATE
    noise_sigma: float = 0.002
    seed: int = 0

    def __post_init__(self):
        for name in ("gel_stiffness", "closing_speed", "frame_rate"):
            if not getattr(self, name) > 0:
                raise SimulationError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.noise_sigma >= 0:
            raise SimulationError(f"noise_sigma must be non-negative, got {self.noise_sigma}")

    @property
    def step_closure(self) -> float:
        """Closure travelled in one frame at closing speed."""
        return self.closing_speed / self.frame_rate


@dataclass(frozen=True)
class SlipEvent:
    t_slip: float
    drift: float  # mm per frame, along +x


@dataclass(frozen=True)
class SimState:
    model: FruitModel
    config: SimConfig
    closure: float = 0.0
    t: float = 0.0
    frame: int = 0
    slip_event: Optional[SlipEvent] = None
    slip_offset: float = 0.0  # accumulated tangential drift, mm

    def __post_init__(self):
        if self.closure < 0:
            raise SimulationError(f"closure must be non-negative, got {self.closure}")
        if self.t < 0:
            raise SimulationError(f"time must be non-negative, got {self.t}")


def geometric_overlap(model: FruitModel, closure: float, dims: GridDims) -> np.ndarray:
    """Penetration (mm) of the undeformed fruit surface into the gel plane, per cell."""
    if closure < 0:
        raise SimulationError(f"closure must be non-negative, got {closure}")
    x, y = dims.cell_centers()
    geom = model.geometry
    if isinstance(geom, Sphere):
        dist2 = x * x + y * y
    elif isinstance(geom, Cylinder):
        # distance from the axis line through the grid center
        s = -x * math.sin(geom.axis) + y * math.cos(geom.axis)
        dist2 = s * s
    else:
        raise SimulationError(f"unknown geometry {geom!r}")
    return np.maximum(0.0, closure - dist2 / (2.0 * geom.radius))


def tissue_stiffness(model: FruitModel, closure: float) -> float:
    k = model.shell_stiffness
    if model.core_onset is None or closure < model.core_onset:
        return k
    ramp = min(1.0, (closure - model.core_onset) / CORE_RAMP_WIDTH)
    return k + (model.core_stiffness - k) * ramp


def effective_stiffness(model: FruitModel, gel_stiffness: float, closure: float) -> float:
    """Series combination of gel and tissue springs."""
    if closure < 0:
        raise SimulationError(f"closure must be non-negative, got {closure}")
    k = tissue_stiffness(model, closure)
    return gel_stiffness * k / (gel_stiffness + k)


def contact_force(model: FruitModel, config: SimConfig, closure: float) -> np.ndarray:
    """Noise-free per-cell normal force the sensor carries at this closure (ru)."""
    kappa = effective_stiffness(model, config.gel_stiffness, closure)
    return kappa * geometric_overlap(model, closure, config.dims)


def total_force(model: FruitModel, config: SimConfig, closure: float) -> float:
    return float(contact_force(model, config, closure).sum() * config.dims.cell_area)


def initial_state(model: FruitModel, config: SimConfig) -> SimState:
    return SimState(model, config)


def sim_step(state: SimState, delta_closure: float) -> tuple[SimState, DisplacementField]:
    """Advance the closure by ``delta_closure`` and emit the frame observed at ``state.t``."""
    closure = state.closure + delta_closure
    if closure < 0:
        raise SimulationError(f"release of {-delta_closure} mm exceeds closure {state.closure} mm")
    cfg = state.config
    dims = cfg.dims

    offset = state.slip_offset
    if state.slip_event is not None and state.t >= state.slip_event.t_slip - 1e-12:
        offset += state.slip_event.drift

    dz = contact_force(state.model, cfg, closure) / cfg.gel_stiffness
    # markers spread outward, down the slope of the indentation bowl
    gy, gx = np.gradient(box_mean(dz, 3), dims.pitch)
    dx = -TANGENTIAL_GAIN * gx + offset
    dy = -TANGENTIAL_GAIN * gy
    if cfg.noise_sigma > 0:
        rng = np.random.default_rng((cfg.seed, state.frame))
        noise = rng.normal(0.0, cfg.noise_sigma, size=(3,) + dims.shape)
        dx = dx + noise[0]
        dy = dy + noise[1]
        dz = np.maximum(0.0, dz + noise[2])

    new_state = replace(state, closure=closure, t=state.t + 1.0 / cfg.frame_rate,
                        frame=state.frame + 1, slip_offset=offset)
    return new_state, DisplacementField(dims, dx, dy, dz)


def ripen(model: FruitModel, days: float) -> FruitModel:
    """Soften the tissue exponentially with storage time."""
    if days < 0:
        raise SimulationError(f"days must be non-negative, got {days}")
    factor = math.exp(-model.ripeness_decay * days)
    core = None if model.core_stiffness is None else model.core_stiffness * factor
    return replace(model, shell_stiffness=model.shell_stiffness * factor, core_stiffness=core)


def inject_slip(state: SimState, t_slip: float, drift: float) -> SimState:
    if t_slip < state.t - 1e-12:
        raise SimulationError(f"slip time {t_slip} s is before current time {state.t} s")
    if not drift > 0:
        raise SimulationError(f"drift must be positive, got {drift}")
    return replace(state, slip_event=SlipEvent(t_slip, drift))


def arrest_slip(state: SimState) -> SimState:
    """Stop drift accumulation; the markers keep the offset already reached."""
    return replace(state, slip_event=None)
