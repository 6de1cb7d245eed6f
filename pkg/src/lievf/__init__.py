"""Guiding vector fields for path following on matrix Lie groups."""

from .curve import DiscretizedCurve, build_curve, ec_distance, load_curve, save_curve
from .distance import ee_distance, ee_distance_generic, ee_distance_se3, path_generate
from .field import FieldConfig, GainSchedule, evaluate_field, escape_policy
from .groups import group_from_name, s_inv, s_map, se3, so3, translation_group
from .simulator import SimulationConfig, SimulationTrace, pose_errors, run

__version__ = "0.1.0"
