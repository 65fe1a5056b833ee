"""Hardness bands, ripeness trends and shell/core escalation detection."""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import GraspTrace
from .hardness import HardnessReport, SlopeConfig, loading_span, slope_profile

ESCALATION_RATIO = 2.0


class ClassifyError(ValueError):
    pass


@dataclass(frozen=True)
class ClassifierConfig:
    boundaries: tuple[float, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "boundaries", tuple(float(b) for b in self.boundaries))
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) != len(self.boundaries) + 1:
            raise ClassifyError("need exactly one more label than boundaries")
        if any(b <= a for a, b in zip(self.boundaries, self.boundaries[1:])):
            raise ClassifyError("boundaries must be strictly ascending")
        if len(set(self.labels)) != len(self.labels):
            raise ClassifyError("labels must be distinct")

    @classmethod
    def from_references(cls, references: Sequence[tuple[str, float]]) -> "ClassifierConfig":
        """Bands centred on reference (label, H) pairs, split at midpoints between neighbours."""
        refs = sorted(references, key=lambda r: r[1])
        hs = [h for _, h in refs]
        return cls(tuple((a + b) / 2 for a, b in zip(hs, hs[1:])), tuple(label for label, _ in refs))


def classify_hardness(h: float, config: ClassifierConfig) -> str:
    if h < 0:
        raise ClassifyError(f"hardness must be non-negative, got {h}")
    return config.labels[bisect.bisect_right(config.boundaries, h)]


@dataclass(frozen=True)
class RipenessPoint:
    day: float
    h: float
    peak_force: float


@dataclass(frozen=True)
class RipenessTrajectory:
    points: tuple[RipenessPoint, ...]
    slope_trend: float  # change in h per day
    peak_trend: float  # change in peak force per day


def _trend(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


def track_ripeness(reports: Sequence[tuple[float, HardnessReport]]) -> RipenessTrajectory:
    points = tuple(RipenessPoint(float(day), r.h, r.peak_force) for day, r in reports)
    days = np.array([p.day for p in points])
    if len(set(days.tolist())) < 2:
        raise ClassifyError("ripeness tracking needs at least two distinct days")
    if np.any(np.diff(days) <= 0):
        raise ClassifyError("days must be strictly increasing")
    return RipenessTrajectory(
        points,
        _trend(days, np.array([p.h for p in points])),
        _trend(days, np.array([p.peak_force for p in points])),
    )


@dataclass(frozen=True)
class Escalation:
    t_onset: float  # start of the first escalated subwindow
    slope_ratio: float
    subwindow: int


def detect_escalation(trace: GraspTrace, config: SlopeConfig,
                      ratio: float = ESCALATION_RATIO) -> Optional[Escalation]:
    """First loading subwindow whose force slope is at least ``ratio`` times the first one."""
    slopes = slope_profile(trace, config)
    first, last = loading_span(trace)
    starts = [chunk[0] for chunk in np.array_split(np.arange(first, last + 1), config.subwindows)]
    base = slopes[0]
    if base <= 0:
        return None
    for i, s in enumerate(slopes[1:], start=1):
        # relative slack so an exact doubling built from floats still counts
        if s / base >= ratio * (1 - 1e-9):
            return Escalation(trace[int(starts[i])].t, s / base, i)
    return None


def default_classifier(sim_config=None, controller=None) -> ClassifierConfig:
    """soft/medium/hard bands split at the midpoints of the grape, strawberry and cucumber H."""
    from .control import ControllerConfig, run_grasp
    from .presets import CUCUMBER, GRAPE, STRAWBERRY
    from .sim import SimConfig

    sim_config = sim_config or SimConfig()
    controller = controller or ControllerConfig()
    hs = sorted(run_grasp(m, sim_config, controller).report.h for m in (GRAPE, STRAWBERRY, CUCUMBER))
    return ClassifierConfig.from_references(list(zip(("soft", "medium", "hard"), hs)))
