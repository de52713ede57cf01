"""Inverse mean curvature flow in Reissner-Nordstrom-AdS manifolds.

The package evolves star-shaped hypersurfaces of warped products
``ds^2 / f(s)^2 + s^2 g_eps`` by inverse mean curvature, evaluates the
related Minkowski-type functionals and computes the mass of rotationally
symmetric graphs over such backgrounds.
"""

from .background import (
    BackgroundParams,
    DegenerateHorizonWarning,
    curvature_sample,
    existence_check,
    horizon_radius,
    lambda_of_r,
    metric_potential,
    r_of_lambda,
    substatic_residual,
    warp_speed,
)
from .flow import FlowOptions, run, slice_ode_run
from .functionals import evaluate, monotonicity_report
from .hypersurface import PhiMap, RadialProfile, geometry_from_profile, perturbed_profile
from .mass import alh_mass_limit, embed_rnads_as_graph, mass_report, mass_via_bulk_formula
from .spaceform import build_mesh, integrate

__all__ = [
    "BackgroundParams",
    "DegenerateHorizonWarning",
    "FlowOptions",
    "PhiMap",
    "RadialProfile",
    "alh_mass_limit",
    "build_mesh",
    "curvature_sample",
    "embed_rnads_as_graph",
    "evaluate",
    "existence_check",
    "geometry_from_profile",
    "horizon_radius",
    "integrate",
    "lambda_of_r",
    "mass_report",
    "mass_via_bulk_formula",
    "metric_potential",
    "monotonicity_report",
    "perturbed_profile",
    "r_of_lambda",
    "run",
    "slice_ode_run",
    "substatic_residual",
    "warp_speed",
]

__version__ = "0.1.0"
