"""Closed-loop grasp controller driving the simulator frame by frame.

Two readout modes:

* fixed distance: close continuously to a set indentation past contact, read hardness from
  the slope of the mean normal force;
* force threshold: after contact, close in discrete steps with a settle pause after each,
  stop once the mean normal force reaches the threshold and read hardness from the
  force/distance differential.

Both modes finish with a hold phase during which slip is monitored.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence, Union

from .core import GraspTrace, TraceSample
from .forces import (DecompositionCalib, SegmentationConfig, decompose, max_normal, mean_normal,
                     mean_shear, segment_contact)
from .hardness import HardnessReport, SlopeConfig, analyze, hardness_from_distance
from .sim import FruitModel, SimConfig, SimState, arrest_slip, initial_state, inject_slip, sim_step

_EPS = 1e-9


class ControlError(ValueError):
    pass


@dataclass(frozen=True)
class FixedDistance:
    target: float = 10.0  # mm past contact

    def __post_init__(self):
        if not self.target > 0:
            raise ControlError(f"target must be positive, got {self.target}")


@dataclass(frozen=True)
class ForceThreshold:
    threshold: float = 20.0
    step: float = 1.5
    settle_frames: int = 4

    def __post_init__(self):
        if not (self.threshold > 0 and self.step > 0):
            raise ControlError("threshold and step must be positive")
        if int(self.settle_frames) != self.settle_frames or self.settle_frames < 1:
            raise ControlError(f"settle_frames must be an integer >= 1, got {self.settle_frames}")


GraspMode = Union[FixedDistance, ForceThreshold]


@dataclass(frozen=True)
class SlipConfig:
    shear_rise_threshold: float = 0.02  # ru per frame
    consecutive_frames: int = 3
    response_step: float = 1.0  # mm
    normal_band: float = 0.2  # allowed relative normal change during a slip run

    def __post_init__(self):
        if not (self.shear_rise_threshold > 0 and self.response_step > 0 and self.normal_band > 0):
            raise ControlError("slip thresholds and response step must be positive")
        if int(self.consecutive_frames) != self.consecutive_frames or self.consecutive_frames < 2:
            raise ControlError(f"consecutive_frames must be an integer >= 2, got {self.consecutive_frames}")


@dataclass(frozen=True)
class ControllerConfig:
    contact_threshold: float = 0.5
    mode: GraspMode = field(default_factory=FixedDistance)
    max_closure: float = 40.0
    hold_time: float = 0.5
    slip: SlipConfig = field(default_factory=SlipConfig)

    def __post_init__(self):
        if not (self.contact_threshold > 0 and self.max_closure > 0):
            raise ControlError("contact_threshold and max_closure must be positive")
        if not self.hold_time >= 0:
            raise ControlError(f"hold_time must be non-negative, got {self.hold_time}")
        if isinstance(self.mode, FixedDistance) and self.mode.target > self.max_closure:
            raise ControlError(f"target {self.mode.target} exceeds max_closure {self.max_closure}")


class Phase(str, Enum):
    APPROACHING = "approaching"
    CONTACTED = "contacted"
    CLOSING = "closing"
    HOLDING = "holding"
    SLIP_RECOVERY = "slip_recovery"
    DONE = "done"


TRANSITIONS = {
    Phase.APPROACHING: {Phase.CONTACTED, Phase.DONE},
    Phase.CONTACTED: {Phase.CLOSING},
    Phase.CLOSING: {Phase.HOLDING, Phase.DONE},
    Phase.HOLDING: {Phase.SLIP_RECOVERY, Phase.DONE},
    Phase.SLIP_RECOVERY: {Phase.HOLDING},
    Phase.DONE: set(),
}


class Termination(str, Enum):
    TARGET_REACHED = "TargetReached"
    THRESHOLD_REACHED = "ThresholdReached"
    MAX_CLOSURE = "MaxClosure"


@dataclass(frozen=True)
class Mark:
    t: float
    closure: float


@dataclass(frozen=True)
class SlipResponse:
    t: float
    response_applied: float
    clamped: bool = False


@dataclass(frozen=True)
class GraspOutcome:
    trace: GraspTrace
    report: Optional[HardnessReport]
    contact_at: Optional[Mark]
    threshold_at: Optional[Mark]
    steps_taken: int
    slip_events: tuple[SlipResponse, ...]
    terminated_by: Termination
    phases: tuple[tuple[int, Phase], ...]  # (frame index, phase entered)


def detect_contact(samples: Sequence[TraceSample], contact_threshold: float) -> Optional[int]:
    for i, s in enumerate(samples):
        if s.mean_normal >= contact_threshold:
            return i
    return None


def detect_slip(samples: Sequence[TraceSample], slip: SlipConfig) -> list[int]:
    """Indices where shear kept rising for ``consecutive_frames`` frames without a matching
    rise in normal force."""
    events = []
    run = 0
    for i in range(1, len(samples)):
        if samples[i].mean_shear - samples[i - 1].mean_shear > slip.shear_rise_threshold:
            run += 1
        else:
            run = 0
        if run >= slip.consecutive_frames:
            base = samples[i - run].mean_normal
            if base > 0 and abs(samples[i].mean_normal - base) <= slip.normal_band * base:
                events.append(i)
                run = 0
    return events


def respond_to_slip(state: SimState, slip: SlipConfig, max_closure: float) -> tuple[SimState, SlipResponse]:
    """Tighten the grip by one response step (clamped at ``max_closure``) and arrest the drift."""
    applied = min(slip.response_step, max(0.0, max_closure - state.closure))
    clamped = applied < slip.response_step
    new_state = arrest_slip(replace(state, closure=state.closure + applied))
    return new_state, SlipResponse(state.t, applied, clamped)


class _Run:
    """Mutable bookkeeping for one grasp; the simulator state itself stays a value."""

    def __init__(self, model, sim_config, controller, calib, segmentation, slip_injection):
        self.cfg = controller
        self.sim_config = sim_config
        self.calib = calib or DecompositionCalib(normal_gain=sim_config.gel_stiffness)
        self.seg = segmentation or SegmentationConfig()
        self.state = initial_state(model, sim_config)
        if slip_injection is not None:
            t_slip, drift = slip_injection
            if drift > 0:
                self.state = inject_slip(self.state, t_slip, drift)
        self.samples: list[TraceSample] = []
        self.phase = Phase.APPROACHING
        self.phases = [(0, Phase.APPROACHING)]
        self.contact_closure: Optional[float] = None
        self.slip_events: list[SlipResponse] = []

    def enter(self, phase: Phase):
        if phase not in TRANSITIONS[self.phase]:
            raise ControlError(f"illegal transition {self.phase.value} -> {phase.value}")
        self.phase = phase
        self.phases.append((len(self.samples), phase))

    def frame(self, delta_closure: float) -> TraceSample:
        room = self.cfg.max_closure - self.state.closure
        delta_closure = min(delta_closure, room)
        self.state, disp = sim_step(self.state, delta_closure)
        forces = decompose(disp, self.calib)
        region = segment_contact(forces.fz, self.seg, disp.dims)
        mean = mean_normal(forces, region)
        delta = 0.0 if self.contact_closure is None else max(0.0, self.state.closure - self.contact_closure)
        sample = TraceSample(
            t=len(self.samples) / self.sim_config.frame_rate,
            delta=delta,
            mean_normal=mean.value,
            max_normal=max_normal(forces, region).value,
            mean_shear=mean_shear(forces, region).magnitude,
            contact_area=region.area,
        )
        self.samples.append(sample)
        return sample

    @property
    def at_max(self) -> bool:
        return self.state.closure >= self.cfg.max_closure - _EPS

    def mark(self) -> Mark:
        return Mark(self.samples[-1].t, self.state.closure)

    def approach(self) -> Optional[Mark]:
        step = self.sim_config.step_closure
        while True:
            s = self.frame(step)
            if s.mean_normal >= self.cfg.contact_threshold:
                self.contact_closure = self.state.closure
                self.enter(Phase.CONTACTED)
                return self.mark()
            if self.at_max:
                return None

    def move(self, distance: float):
        """Close by ``distance`` at closing speed, one frame at a time."""
        step = self.sim_config.step_closure
        goal = min(self.state.closure + distance, self.cfg.max_closure)
        while self.state.closure < goal - _EPS:
            self.frame(min(step, goal - self.state.closure))

    def hold(self):
        n = int(round(self.cfg.hold_time * self.sim_config.frame_rate))
        slip = self.cfg.slip
        monitor_from = len(self.samples)
        for _ in range(n):
            self.frame(0.0)
            window = self.samples[max(monitor_from, len(self.samples) - slip.consecutive_frames - 1):]
            if len(window) > slip.consecutive_frames and detect_slip(window, slip) == [len(window) - 1]:
                self.enter(Phase.SLIP_RECOVERY)
                self.state, response = respond_to_slip(self.state, slip, self.cfg.max_closure)
                self.slip_events.append(replace(response, t=self.samples[-1].t))
                self.frame(0.0)
                self.enter(Phase.HOLDING)
                monitor_from = len(self.samples)

    def trace(self) -> GraspTrace:
        return GraspTrace(tuple(self.samples), self.sim_config.frame_rate)


def run_fixed_distance(model: FruitModel, sim_config: SimConfig, controller: ControllerConfig, *,
                       calib: Optional[DecompositionCalib] = None,
                       segmentation: Optional[SegmentationConfig] = None,
                       slope: Optional[SlopeConfig] = None,
                       slip_injection: Optional[tuple[float, float]] = None) -> GraspOutcome:
    mode = controller.mode
    if not isinstance(mode, FixedDistance):
        raise ControlError("run_fixed_distance needs a FixedDistance mode")
    run = _Run(model, sim_config, controller, calib, segmentation, slip_injection)
    contact = run.approach()
    if contact is None:
        run.enter(Phase.DONE)
        return _outcome(run, None, None, None, 0, Termination.MAX_CLOSURE)

    run.enter(Phase.CLOSING)
    run.move(mode.target - (run.state.closure - run.contact_closure))
    if run.state.closure - run.contact_closure < mode.target - _EPS:
        run.enter(Phase.DONE)
        return _outcome(run, None, contact, None, 0, Termination.MAX_CLOSURE)

    run.enter(Phase.HOLDING)
    run.hold()
    run.enter(Phase.DONE)
    report = analyze(run.trace(), sim_config.closing_speed, slope or SlopeConfig())
    return _outcome(run, report, contact, None, 0, Termination.TARGET_REACHED)


def run_force_threshold(model: FruitModel, sim_config: SimConfig, controller: ControllerConfig, *,
                        calib: Optional[DecompositionCalib] = None,
                        segmentation: Optional[SegmentationConfig] = None,
                        slope: Optional[SlopeConfig] = None,
                        slip_injection: Optional[tuple[float, float]] = None) -> GraspOutcome:
    mode = controller.mode
    if not isinstance(mode, ForceThreshold):
        raise ControlError("run_force_threshold needs a ForceThreshold mode")
    run = _Run(model, sim_config, controller, calib, segmentation, slip_injection)
    contact = run.approach()
    if contact is None:
        run.enter(Phase.DONE)
        return _outcome(run, None, None, None, 0, Termination.MAX_CLOSURE)
    f_contact = run.samples[-1].mean_normal

    run.enter(Phase.CLOSING)
    steps = 0
    while True:
        if run.at_max:
            run.enter(Phase.DONE)
            return _outcome(run, None, contact, None, steps, Termination.MAX_CLOSURE)
        run.move(mode.step)
        steps += 1
        for _ in range(mode.settle_frames):
            s = run.frame(0.0)
        if s.mean_normal >= mode.threshold:
            break
    threshold_at = run.mark()
    f_thresh = run.samples[-1].mean_normal

    run.enter(Phase.HOLDING)
    run.hold()
    run.enter(Phase.DONE)
    h = hardness_from_distance(f_thresh, f_contact, threshold_at.closure, contact.closure)
    report = analyze(run.trace(), sim_config.closing_speed, slope or SlopeConfig(), h_override=h)
    return _outcome(run, report, contact, threshold_at, steps, Termination.THRESHOLD_REACHED)


def run_grasp(model: FruitModel, sim_config: SimConfig, controller: ControllerConfig, **kwargs) -> GraspOutcome:
    if isinstance(controller.mode, ForceThreshold):
        return run_force_threshold(model, sim_config, controller, **kwargs)
    return run_fixed_distance(model, sim_config, controller, **kwargs)


def _outcome(run: _Run, report, contact, threshold_at, steps, terminated_by) -> GraspOutcome:
    return GraspOutcome(
        trace=run.trace(),
        report=report,
        contact_at=contact,
        threshold_at=threshold_at,
        steps_taken=steps,
        slip_events=tuple(run.slip_events),
        terminated_by=terminated_by,
        phases=tuple(run.phases),
    )
