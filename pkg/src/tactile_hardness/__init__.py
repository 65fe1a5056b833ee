"""Fruit hardness from simulated vision-based tactile sensing.

A Winkler-foundation gel sensor is squeezed against parameterized fruit; the normal-force
field is segmented into a contact region, its mean drives hardness estimation, and a
frame-by-frame controller runs fixed-distance and force-threshold grasps with slip response.
"""
from .classify import (ClassifierConfig, Escalation, RipenessTrajectory, classify_hardness,
                       default_classifier, detect_escalation, track_ripeness)
from .control import (ControllerConfig, FixedDistance, ForceThreshold, GraspOutcome, Phase, SlipConfig,
                      Termination, detect_contact, detect_slip, respond_to_slip, run_fixed_distance,
                      run_force_threshold, run_grasp)
from .core import (DisplacementField, ForceField, GraspTrace, GridDims, TraceSample, frame_times,
                   new_zero_displacement)
from .forces import (ContactRegion, DecompositionCalib, SegmentationConfig, decompose, filter_field,
                     max_normal, mean_normal, mean_shear, segment_contact)
from .hardness import (Constant, HardnessReport, SlopeConfig, Variable, classify_rate, estimate_slope,
                       hardness_from_distance, hardness_from_slope, second_derivative, slope_profile)
from .sim import (Cylinder, FruitModel, SimConfig, SimState, Sphere, effective_stiffness, geometric_overlap,
                  inject_slip, ripen, sim_step)

__version__ = "0.1.0"
