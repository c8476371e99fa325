"""
Optics package: pinhole models, the grating law and the rig.
"""

from optics.grating import GratingModel, diffract
from optics.grating_solver import (
    GratingSolution,
    grating_residual,
    solve_grating_point,
    solve_grating_points,
)
from optics.pinhole import PinholeModel, project, unproject
from optics.rig import (
    BUILTIN_RIGS,
    Rig,
    desk_rig,
    load_rig,
    propagation_distance,
    prototype_rig,
    resolve_rig,
    save_rig,
)

__all__ = [
    "PinholeModel",
    "project",
    "unproject",
    "GratingModel",
    "diffract",
    "Rig",
    "propagation_distance",
    "load_rig",
    "save_rig",
    "resolve_rig",
    "desk_rig",
    "prototype_rig",
    "BUILTIN_RIGS",
    "solve_grating_point",
    "solve_grating_points",
    "grating_residual",
    "GratingSolution",
]
