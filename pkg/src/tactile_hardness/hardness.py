"""Normal-force dynamics: slopes, rate condition, curvature and hardness mappings.

Hardness is reported as force per mm of indentation. With closure proportional to time,
dividing the temporal slope dF/dt by the closing speed gives dF/dδ directly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .core import GraspTrace

READOUTS = ("initial", "final", "full")
_EPS_T = 1e-9


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class SlopeConfig:
    window: float = 0.25  # s
    subwindows: int = 4
    rate_tolerance: float = 0.2
    readout: str = "initial"  # which part of the loading span feeds the slope C

    def __post_init__(self):
        if not self.window > 0:
            raise EstimationError(f"window must be positive, got {self.window}")
        if int(self.subwindows) != self.subwindows or self.subwindows < 2:
            raise EstimationError(f"subwindows must be an integer >= 2, got {self.subwindows}")
        if not self.rate_tolerance > 0:
            raise EstimationError(f"rate_tolerance must be positive, got {self.rate_tolerance}")
        if self.readout not in READOUTS:
            raise EstimationError(f"readout must be one of {READOUTS}, got {self.readout!r}")


@dataclass(frozen=True)
class Constant:
    c: float
    max_rel_dev: float


@dataclass(frozen=True)
class Variable:
    slopes: tuple[float, ...]
    max_rel_dev: float


RateCondition = Union[Constant, Variable]


@dataclass(frozen=True)
class HardnessReport:
    c: float  # ru/s
    h: float  # ru/mm
    rate: Optional[RateCondition]
    d2: float  # ru/s^2
    delta_max: float
    peak_force: float


def _window(trace: GraspTrace, t_start: float, t_end: float):
    t = trace.column("t")
    sel = (t >= t_start - _EPS_T) & (t <= t_end + _EPS_T)
    return t[sel], trace.column("mean_normal")[sel]


def _line_slope(t: np.ndarray, y: np.ndarray) -> float:
    tc = t - t.mean()
    return float(np.dot(tc, y - y.mean()) / np.dot(tc, tc))


def estimate_slope(trace: GraspTrace, t_start: float, t_end: float) -> float:
    """Least-squares slope of mean normal force against time inside [t_start, t_end]."""
    t, y = _window(trace, t_start, t_end)
    if len(t) < 2:
        raise EstimationError(f"slope window [{t_start}, {t_end}] holds {len(t)} samples, need 2")
    return _line_slope(t, y)


def second_derivative(trace: GraspTrace, t_start: float, t_end: float) -> float:
    t, y = _window(trace, t_start, t_end)
    if len(t) < 3:
        raise EstimationError(f"curvature window [{t_start}, {t_end}] holds {len(t)} samples, need 3")
    a = np.polynomial.polynomial.polyfit(t - t.mean(), y, 2)[2]
    return float(2.0 * a)


def loading_span(trace: GraspTrace) -> tuple[int, int]:
    """Index range [first, last] from first contact to the first frame at maximum indentation."""
    area = trace.column("contact_area")
    touched = np.nonzero(area > 0)[0]
    if len(touched) == 0:
        raise EstimationError("trace never makes contact")
    first = int(touched[0])
    delta = trace.column("delta")
    last = first + int(np.argmax(delta[first:]))
    if delta[last] <= delta[first]:
        last = len(trace) - 1
    return first, last


def slope_profile(trace: GraspTrace, config: SlopeConfig) -> list[float]:
    """Per-subwindow slopes over the loading part of the trace."""
    first, last = loading_span(trace)
    n = last - first + 1
    if n < 2 * config.subwindows:
        raise EstimationError(
            f"{n} post-contact samples cannot fill {config.subwindows} subwindows of 2 samples")
    t = trace.column("t")[first:last + 1]
    y = trace.column("mean_normal")[first:last + 1]
    return [_line_slope(ts, ys) for ts, ys in
            zip(np.array_split(t, config.subwindows), np.array_split(y, config.subwindows))]


def classify_rate(slopes: Sequence[float], config: SlopeConfig) -> RateCondition:
    slopes = [float(s) for s in slopes]
    if not slopes:
        raise EstimationError("no slopes to classify")
    mean = float(np.mean(slopes))
    if mean == 0:
        raise EstimationError("mean slope is zero; relative deviation undefined")
    dev = max(abs(s - mean) for s in slopes) / abs(mean)
    if dev <= config.rate_tolerance:
        return Constant(mean, dev)
    return Variable(tuple(slopes), dev)


def hardness_from_slope(c: float, closing_speed: float) -> float:
    if not closing_speed > 0:
        raise EstimationError(f"closing speed must be positive, got {closing_speed}")
    return c / closing_speed


def hardness_from_distance(f_thresh: float, f_contact: float, d_thresh: float, d_contact: float) -> float:
    """Force gained per mm of extra closure between contact and the force threshold."""
    if not d_thresh > d_contact:
        raise EstimationError(f"threshold distance {d_thresh} must exceed contact distance {d_contact}")
    if not f_thresh > f_contact:
        raise EstimationError(f"threshold force {f_thresh} must exceed contact force {f_contact}")
    return (f_thresh - f_contact) / (d_thresh - d_contact)


def readout_window(trace: GraspTrace, config: SlopeConfig) -> tuple[float, float]:
    """Time window the slope C is read from, clipped to the loading span."""
    first, last = loading_span(trace)
    t0, t1 = trace[first].t, trace[last].t
    if config.readout == "initial":
        return t0, min(t1, t0 + config.window)
    if config.readout == "final":
        return max(t0, t1 - config.window), t1
    return t0, t1


def analyze(trace: GraspTrace, closing_speed: float, config: SlopeConfig,
            h_override: Optional[float] = None) -> HardnessReport:
    """Full hardness report for one grasp trace.

    With ``h_override`` (distance-differential hardness) the slope C is set to ``h * v`` so
    that ``h == c / v`` holds for every report.
    """
    first, last = loading_span(trace)
    t0, t1 = trace[first].t, trace[last].t
    if h_override is None:
        c = estimate_slope(trace, *readout_window(trace, config))
        h = hardness_from_slope(c, closing_speed)
    else:
        h = h_override
        c = h * closing_speed
    try:
        rate = classify_rate(slope_profile(trace, config), config)
    except EstimationError:
        rate = None
    d2 = second_derivative(trace, t0, t1) if last - first >= 2 else 0.0
    return HardnessReport(
        c=c, h=h, rate=rate, d2=d2,
        delta_max=float(trace.column("delta").max()),
        peak_force=float(trace.column("mean_normal").max()),
    )
