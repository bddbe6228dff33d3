"""Shear- and torsion-free flexible rod simulation on smooth spline spaces.

Static and transient analysis of thin rods whose centerline carries all the
kinematics: bending and axial stretch, no shear, no torsion.  Time stepping
uses an implicit scheme that conserves energy and momentum in the force-free
case; spurious high-frequency boundary modes of the spline discretization can
be removed strongly through an extraction operator.
"""

__version__ = "0.1.0"

from .splines import (
    SplineSpace,
    BasisEval,
    BoundaryConstraint,
    ExtractionMatrix,
    make_spline_space,
    eval_basis,
    greville_points,
    straight_configuration,
    essential_orders,
    outlier_orders,
    boundary_constraints,
    build_extraction,
)

__all__ = [
    "__version__",
    "SplineSpace",
    "BasisEval",
    "BoundaryConstraint",
    "ExtractionMatrix",
    "make_spline_space",
    "eval_basis",
    "greville_points",
    "straight_configuration",
    "essential_orders",
    "outlier_orders",
    "boundary_constraints",
    "build_extraction",
]
