"""Exact curved P1 finite elements on the unit disk."""

from .analysis import convergence_study, geometric_errors, fem_errors, interpolation_bound_check, rate
from .errors import (
    CurvedFemError,
    DegenerateRHS,
    DegenerateTriangle,
    DimensionMismatch,
    EmptyMesh,
    InvalidRateInput,
    NewtonDivergence,
    NonpositiveJacobian,
    NotConverged,
    PointOutsideElement,
    UnsupportedDegree,
)
from .fem import FeSpace, apply_dirichlet, assemble, interpolate_p1, lagrange_nodes, solve_poisson
from .geometry import (
    AffineCore,
    ArcBlend,
    ElementMap,
    IDENTITY,
    PolyEdgeBlend,
    build_affine_factorization,
    eval_F,
    eval_G,
    hessian_F,
    jacobian_F,
)
from .linalg import SparseSym, cg_solve, matvec
from .mesh import Triangulation, disk_mesh, mesh_size, validate
from .quadrature import rule

__version__ = "0.1.0"
