"""Numerical isotopies of the Riemann sphere that extend the Mobius group."""
from .geom_core import INF, ONE, ZERO, ExtPoint, chordal_dist, ext, stereo, stereo_inv
from .mobius import MobiusMap, map_triple, pole_fixing_map, swap_map, three_point_map
from .saddle_normal import (ConformalInputError, conformal_defect, conformality_at_origin_test,
                            saddle_normalize)
from .isotopy import (Isotopy, SphereMap, chain, conjugate, extension_isotopy, make_model_diffeo,
                      model_for_mu, reverse)
from .cone_calculus import ConeConstants, audit_cone_constants, find_cone_constants
from .trajectory import (SaddleContext, Trajectory, default_context, fundamental_isotopy,
                         two_ended_isotopy)
from .crossing import (PlanarCurve, crossing_isotopy, curve_intersections, eject_from_gamma,
                       four_point_isotopy)
from .homotopy8 import (LoopWord, accessible_path, build_chi, build_figure_eight,
                        figure8_prototype, four_transitivity, loop_word)

__all__ = [
    "INF",
    "ONE",
    "ZERO",
    "ExtPoint",
    "chordal_dist",
    "ext",
    "stereo",
    "stereo_inv",
    "MobiusMap",
    "map_triple",
    "pole_fixing_map",
    "swap_map",
    "three_point_map",
    "ConformalInputError",
    "conformal_defect",
    "conformality_at_origin_test",
    "saddle_normalize",
    "Isotopy",
    "SphereMap",
    "chain",
    "conjugate",
    "extension_isotopy",
    "make_model_diffeo",
    "model_for_mu",
    "reverse",
    "ConeConstants",
    "audit_cone_constants",
    "find_cone_constants",
    "SaddleContext",
    "Trajectory",
    "default_context",
    "fundamental_isotopy",
    "two_ended_isotopy",
    "PlanarCurve",
    "crossing_isotopy",
    "curve_intersections",
    "eject_from_gamma",
    "four_point_isotopy",
    "LoopWord",
    "accessible_path",
    "build_chi",
    "build_figure_eight",
    "figure8_prototype",
    "four_transitivity",
    "loop_word",
]

__version__ = "0.1.0"
