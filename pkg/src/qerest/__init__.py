"""Billiard spectra, broken geodesic flow, and restriction equidistribution."""

from .billiard_flow import (
    DEFAULT_TOL,
    CurveCrossing,
    PhasePoint,
    ToleranceSet,
    advance,
    birkhoff_average,
    crossings_with_curve,
)
from .geometry import (
    BilliardDomain,
    CurveSegment,
    curve_frame,
    domain_metrics,
    signed_normal_coordinate,
)
from .microlocal import (
    CotangentOnN,
    ExceptionalEstimate,
    NuMeasureQuadrature,
    TransversalPoint,
    exceptional_fraction,
    involution_gammaE,
    nu_limit,
    project_piE,
)

__version__ = "0.1.0"

__all__ = [
    "BilliardDomain",
    "CurveSegment",
    "curve_frame",
    "domain_metrics",
    "signed_normal_coordinate",
    "PhasePoint",
    "ToleranceSet",
    "DEFAULT_TOL",
    "CurveCrossing",
    "advance",
    "crossings_with_curve",
    "birkhoff_average",
    "TransversalPoint",
    "CotangentOnN",
    "NuMeasureQuadrature",
    "ExceptionalEstimate",
    "project_piE",
    "involution_gammaE",
    "nu_limit",
    "exceptional_fraction",
    "__version__",
]
