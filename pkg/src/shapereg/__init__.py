"""Least-squares projections onto monotone, unimodal and convex sequences.

The package also estimates statistical dimensions, evaluates oracle
inequality bounds and runs Monte-Carlo risk experiments.
"""

__version__ = "0.1.0"

from .cones import (
    Antitonic,
    BlockProduct,
    ConvexOnDesign,
    DesignPoints,
    FullSpace,
    Isotonic,
    KktReport,
    ProjectionResult,
    Unimodal,
    UnimodalSplit,
)
from .convex import project_convex, project_convex_dykstra
from .errors import ConvergenceFailure, InvalidArgument, UnsupportedOperation
from .isotonic import (
    pava,
    project_antitonic,
    project_isotonic,
    project_unimodal,
    project_unimodal_split,
)
from .kkt import kkt_report
from .projections import project, project_block_product
from .sequence_stats import (
    PieceDecomposition,
    RegretReport,
    count_affine_pieces,
    count_constant_pieces,
    distance_to_affine,
    is_member,
    r_constant,
    regrets,
    total_variation,
)
from .statdim import (
    StatDimEstimate,
    bound_convex_pieces,
    bound_isotonic_pieces,
    bound_unimodal_pieces,
    statdim_isotonic_exact,
    statdim_mc,
    statdim_tangent_isotonic_exact,
)

__all__ = [
    "Antitonic",
    "BlockProduct",
    "ConvexOnDesign",
    "DesignPoints",
    "FullSpace",
    "Isotonic",
    "KktReport",
    "ProjectionResult",
    "Unimodal",
    "UnimodalSplit",
    "ConvergenceFailure",
    "InvalidArgument",
    "UnsupportedOperation",
    "pava",
    "project",
    "project_antitonic",
    "project_block_product",
    "project_convex",
    "project_convex_dykstra",
    "project_isotonic",
    "project_unimodal",
    "project_unimodal_split",
    "kkt_report",
    "PieceDecomposition",
    "RegretReport",
    "count_affine_pieces",
    "count_constant_pieces",
    "distance_to_affine",
    "is_member",
    "r_constant",
    "regrets",
    "total_variation",
    "StatDimEstimate",
    "bound_convex_pieces",
    "bound_isotonic_pieces",
    "bound_unimodal_pieces",
    "statdim_isotonic_exact",
    "statdim_mc",
    "statdim_tangent_isotonic_exact",
]
