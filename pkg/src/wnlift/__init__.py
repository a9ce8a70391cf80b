"""Desk-scale numerics for the Witt Nystrom lift of quasi-psh potentials."""

from wnlift.simplex_core import (
    NEG_INF,
    FacePattern,
    L_value,
    active_face,
    brute_force_f,
    f_value,
    g_value,
    project_simplex,
)
from wnlift.wn_lift import BoundedPair, FsPoint, LiftConfig, a_field, lift_value
from wnlift.kahler_grid import ProductGeometry, TorusGeometry, ma_lift, mixed_ma, theta_form
from wnlift.experiments import REGISTRY, ExperimentReport

__all__ = [
    "NEG_INF",
    "FacePattern",
    "L_value",
    "active_face",
    "brute_force_f",
    "f_value",
    "g_value",
    "project_simplex",
    "BoundedPair",
    "FsPoint",
    "LiftConfig",
    "a_field",
    "lift_value",
    "ProductGeometry",
    "TorusGeometry",
    "ma_lift",
    "mixed_ma",
    "theta_form",
    "REGISTRY",
    "ExperimentReport",
]
__version__ = "0.1.0"
