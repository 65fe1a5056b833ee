"""JSON scenario files: strict parsing with defaults, and the inverse serializer.

A fruit may be given in full or as ``{"preset": "<name>", ...overrides}``. Serialization
always writes the fully expanded form, so ``parse(serialize(s)) == s``.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

from .control import ControllerConfig, FixedDistance, ForceThreshold, SlipConfig
from .core import GridDims
from .forces import DecompositionCalib, SegmentationConfig
from .hardness import SlopeConfig
from .presets import PRESETS
from .sim import Cylinder, FruitModel, SimConfig, Sphere

FORMAT_VERSION = 1


class ScenarioError(ValueError):
    """Invalid scenario; the message names the offending key."""


@dataclass(frozen=True)
class SlipInjection:
    t_slip: float
    drift: float


@dataclass(frozen=True)
class Scenario:
    fruit: FruitModel
    sim: SimConfig = field(default_factory=SimConfig)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    decomposition: Optional[DecompositionCalib] = None  # None: matched to the gel stiffness
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    slope: SlopeConfig = field(default_factory=SlopeConfig)
    days: Optional[tuple[float, ...]] = None
    slip_injection: Optional[SlipInjection] = None

    def __post_init__(self):
        if self.decomposition is None:
            object.__setattr__(self, "decomposition", DecompositionCalib(normal_gain=self.sim.gel_stiffness))

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, sim=replace(self.sim, seed=seed))

    def digest(self) -> str:
        return hashlib.sha256(dumps(serialize_scenario(self)).encode()).hexdigest()[:16]


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


# -- parsing ---------------------------------------------------------------------------


class _Section:
    """Reads keys out of one JSON object and rejects whatever is left over."""

    def __init__(self, data: Any, path: str):
        if not isinstance(data, dict):
            raise ScenarioError(f"{path}: expected an object, got {type(data).__name__}")
        self.data = dict(data)
        self.path = path

    def key(self, name: str) -> str:
        return f"{self.path}.{name}" if self.path else name

    def raw(self, name: str, default=None):
        return self.data.pop(name, default)

    def number(self, name: str, default=None, integer=False):
        if name not in self.data:
            if default is None:
                raise ScenarioError(f"{self.key(name)}: required")
            return default
        v = self.data.pop(name)
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ScenarioError(f"{self.key(name)}: expected a finite number, got {v!r}")
        if integer:
            if int(v) != v:
                raise ScenarioError(f"{self.key(name)}: expected an integer, got {v!r}")
            return int(v)
        return float(v)

    def optional_number(self, name: str):
        if self.data.get(name) is None:
            self.data.pop(name, None)
            return None
        return self.number(name)

    def string(self, name: str, default=None) -> str:
        v = self.data.pop(name, default)
        if not isinstance(v, str):
            raise ScenarioError(f"{self.key(name)}: expected a string, got {v!r}")
        return v

    def section(self, name: str) -> "_Section":
        return _Section(self.data.pop(name, {}), self.key(name))

    def done(self):
        if self.data:
            raise ScenarioError(f"{self.key(sorted(self.data)[0])}: unknown key")


def _build(path: str, factory, **kwargs):
    try:
        return factory(**kwargs)
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def _parse_geometry(s: _Section):
    kind = s.string("kind")
    if kind == "sphere":
        geom = _build(s.path, Sphere, radius=s.number("radius"))
    elif kind == "cylinder":
        geom = _build(s.path, Cylinder, radius=s.number("radius"), axis=s.number("axis", 0.0))
    else:
        raise ScenarioError(f"{s.key('kind')}: unknown geometry {kind!r}")
    s.done()
    return geom


def _parse_fruit(s: _Section) -> FruitModel:
    base = None
    if "preset" in s.data:
        name = s.string("preset")
        if name not in PRESETS:
            raise ScenarioError(f"{s.key('preset')}: unknown preset {name!r}; have {sorted(PRESETS)}")
        base = PRESETS[name]
    kw = {}
    if "geometry" in s.data or base is None:
        kw["geometry"] = _parse_geometry(s.section("geometry"))
    if "shell_stiffness" in s.data or base is None:
        kw["shell_stiffness"] = s.number("shell_stiffness")
    if "name" in s.data or base is None:
        kw["name"] = s.string("name", "fruit")
    for key in ("core_onset", "core_stiffness"):
        if key in s.data:
            kw[key] = s.optional_number(key)
    if "ripeness_decay" in s.data or base is None:
        kw["ripeness_decay"] = s.number("ripeness_decay", 0.0)
    s.done()
    if base is None:
        return _build(s.path, FruitModel, **kw)
    return _build(s.path, lambda **k: replace(base, **k), **kw)


def _parse_sim(s: _Section) -> SimConfig:
    d = SimConfig()
    dims_s = s.section("dims")
    dims = _build(dims_s.path, GridDims,
                  width=dims_s.number("width", d.dims.width, integer=True),
                  height=dims_s.number("height", d.dims.height, integer=True),
                  pitch=dims_s.number("pitch", d.dims.pitch))
    dims_s.done()
    sim = _build(s.path, SimConfig, dims=dims,
                 gel_stiffness=s.number("gel_stiffness", d.gel_stiffness),
                 closing_speed=s.number("closing_speed", d.closing_speed),
                 frame_rate=s.number("frame_rate", d.frame_rate),
                 noise_sigma=s.number("noise_sigma", d.noise_sigma),
                 seed=s.number("seed", d.seed, integer=True))
    s.done()
    return sim


def _parse_mode(s: _Section):
    kind = s.string("kind", "fixed_distance")
    if kind == "fixed_distance":
        mode = _build(s.path, FixedDistance, target=s.number("target", FixedDistance().target))
    elif kind == "force_threshold":
        d = ForceThreshold()
        mode = _build(s.path, ForceThreshold, threshold=s.number("threshold", d.threshold),
                      step=s.number("step", d.step),
                      settle_frames=s.number("settle_frames", d.settle_frames, integer=True))
    else:
        raise ScenarioError(f"{s.key('kind')}: unknown mode {kind!r}")
    s.done()
    return mode


def _parse_controller(s: _Section) -> ControllerConfig:
    d = ControllerConfig()
    mode = _parse_mode(s.section("mode"))
    slip_s = s.section("slip")
    ds = d.slip
    slip = _build(slip_s.path, SlipConfig,
                  shear_rise_threshold=slip_s.number("shear_rise_threshold", ds.shear_rise_threshold),
                  consecutive_frames=slip_s.number("consecutive_frames", ds.consecutive_frames, integer=True),
                  response_step=slip_s.number("response_step", ds.response_step),
                  normal_band=slip_s.number("normal_band", ds.normal_band))
    slip_s.done()
    ctl = _build(s.path, ControllerConfig, mode=mode, slip=slip,
                 contact_threshold=s.number("contact_threshold", d.contact_threshold),
                 max_closure=s.number("max_closure", d.max_closure),
                 hold_time=s.number("hold_time", d.hold_time))
    s.done()
    return ctl


def scenario_from_dict(data: Any) -> Scenario:
    top = _Section(data, "")
    if "fruit" not in top.data:
        raise ScenarioError("fruit: required")
    fruit = _parse_fruit(top.section("fruit"))
    sim = _parse_sim(top.section("sim"))
    controller = _parse_controller(top.section("controller"))

    dec_s = top.section("decomposition")
    decomposition = _build(dec_s.path, DecompositionCalib,
                           normal_gain=dec_s.number("normal_gain", sim.gel_stiffness),
                           shear_gain=dec_s.number("shear_gain", 1.0))
    dec_s.done()

    seg_s = top.section("segmentation")
    segmentation = _build(seg_s.path, SegmentationConfig,
                          tau=seg_s.number("tau", SegmentationConfig().tau),
                          filter_kernel=seg_s.number("filter_kernel", SegmentationConfig().filter_kernel,
                                                     integer=True))
    seg_s.done()

    sl_s = top.section("slope")
    d = SlopeConfig()
    slope = _build(sl_s.path, SlopeConfig, window=sl_s.number("window", d.window),
                   subwindows=sl_s.number("subwindows", d.subwindows, integer=True),
                   rate_tolerance=sl_s.number("rate_tolerance", d.rate_tolerance),
                   readout=sl_s.string("readout", d.readout))
    sl_s.done()

    days = top.raw("days")
    if days is not None:
        if not isinstance(days, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x) for x in days):
            raise ScenarioError("days: expected a list of numbers")
        days = tuple(float(x) for x in days)
        if any(x < 0 for x in days) or any(b <= a for a, b in zip(days, days[1:])):
            raise ScenarioError("days: must be non-negative and strictly increasing")

    slip_injection = None
    inj = top.raw("slip_injection")
    if inj is not None:
        inj_s = _Section(inj, "slip_injection")
        slip_injection = SlipInjection(inj_s.number("t_slip"), inj_s.number("drift"))
        inj_s.done()
        if slip_injection.t_slip < 0 or slip_injection.drift < 0:
            raise ScenarioError("slip_injection: t_slip and drift must be non-negative")
    top.done()

    return Scenario(fruit, sim, controller, decomposition, segmentation, slope, days, slip_injection)


def parse_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {path}") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"malformed JSON in {path}: {exc}") from None
    return scenario_from_dict(data)


# -- serialization ---------------------------------------------------------------------


def _geometry_dict(g) -> dict:
    if isinstance(g, Sphere):
        return {"kind": "sphere", "radius": g.radius}
    return {"kind": "cylinder", "radius": g.radius, "axis": g.axis}


def _mode_dict(m) -> dict:
    if isinstance(m, FixedDistance):
        return {"kind": "fixed_distance", "target": m.target}
    return {"kind": "force_threshold", "threshold": m.threshold, "step": m.step,
            "settle_frames": m.settle_frames}


def serialize_scenario(s: Scenario) -> dict:
    f, sim, c = s.fruit, s.sim, s.controller
    out = {
        "fruit": {
            "name": f.name, "geometry": _geometry_dict(f.geometry), "shell_stiffness": f.shell_stiffness,
            "core_onset": f.core_onset, "core_stiffness": f.core_stiffness, "ripeness_decay": f.ripeness_decay,
        },
        "sim": {
            "dims": {"width": sim.dims.width, "height": sim.dims.height, "pitch": sim.dims.pitch},
            "gel_stiffness": sim.gel_stiffness, "closing_speed": sim.closing_speed,
            "frame_rate": sim.frame_rate, "noise_sigma": sim.noise_sigma, "seed": sim.seed,
        },
        "controller": {
            "contact_threshold": c.contact_threshold, "max_closure": c.max_closure, "hold_time": c.hold_time,
            "mode": _mode_dict(c.mode),
            "slip": {"shear_rise_threshold": c.slip.shear_rise_threshold,
                     "consecutive_frames": c.slip.consecutive_frames,
                     "response_step": c.slip.response_step, "normal_band": c.slip.normal_band},
        },
        "decomposition": {"normal_gain": s.decomposition.normal_gain, "shear_gain": s.decomposition.shear_gain},
        "segmentation": {"tau": s.segmentation.tau, "filter_kernel": s.segmentation.filter_kernel},
        "slope": {"window": s.slope.window, "subwindows": s.slope.subwindows,
                  "rate_tolerance": s.slope.rate_tolerance, "readout": s.slope.readout},
    }
    if s.days is not None:
        out["days"] = list(s.days)
    if s.slip_injection is not None:
        out["slip_injection"] = {"t_slip": s.slip_injection.t_slip, "drift": s.slip_injection.drift}
    return out
