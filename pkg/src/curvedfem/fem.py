"""Linear Lagrange spaces on exact-curved triangulations and their assembly."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import NonpositiveJacobian, UnsupportedDegree
from .linalg import SparseSym, cg_solve
from .quadrature import rule

__all__ = [
    "P1_GRADIENTS",
    "p1_basis",
    "LagrangeNodes",
    "lagrange_nodes",
    "ElementGeometry",
    "element_geometry",
    "FeSpace",
    "FeSystem",
    "interpolate_p1",
    "assemble",
    "apply_dirichlet",
    "solve_poisson",
    "evaluate",
]

# reference gradients of 1 - x - y, x, y (rows)
P1_GRADIENTS = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


def p1_basis(xhat):
    xhat = np.asarray(xhat, dtype=float)
    return np.stack([1.0 - xhat[..., 0] - xhat[..., 1], xhat[..., 0], xhat[..., 1]], axis=-1)


@dataclass(frozen=True, eq=False)
class LagrangeNodes:
    degree: int
    alphas: np.ndarray  # (N, 3) multi-indices summing to degree
    points: np.ndarray  # (N, 2) reference coordinates

    def __len__(self):
        return len(self.points)


def lagrange_nodes(k):
    """Nodes ``(a2/k, a3/k)`` for all multi-indices with ``a1 + a2 + a3 = k``."""
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= 10:
        raise UnsupportedDegree(f"Lagrange degree must be in 1..10, got {k!r}")
    alphas = [(k - a2 - a3, a2, a3) for a3 in range(k + 1) for a2 in range(k + 1 - a3)]
    alphas = np.array(alphas, dtype=np.int64)
    return LagrangeNodes(int(k), alphas, alphas[:, 1:] / k)


def _threads():
    try:
        return max(1, int(os.environ.get("CURVEDFEM_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True, eq=False)
class ElementGeometry:
    """Element maps evaluated at the quadrature points of every element.

    ``weights`` already contain ``|det DF|``.
    """

    quad: object
    points: np.ndarray  # (n_el, n_q, 2) physical points
    jac: np.ndarray  # (n_el, n_q, 2, 2)
    det: np.ndarray  # (n_el, n_q), |det DF|
    jac_inv_t: np.ndarray  # (n_el, n_q, 2, 2)
    weights: np.ndarray  # (n_el, n_q)

    @cached_property
    def basis_gradients(self):
        """Physical gradients of the three local basis functions, ``(n_el, n_q, 3, 2)``."""
        return np.einsum("eqab,ib->eqia", self.jac_inv_t, P1_GRADIENTS)


def _curved_block(elements, xhat):
    out = []
    for K in elements:
        out.append((K.emap(xhat), K.emap.jacobian(xhat)))
    return out


def element_geometry(tri, quad):
    """Evaluate ``F_K`` and ``DF_K`` at ``quad`` points; cached on ``tri``."""
    key = ("geometry", quad.degree)
    cache = tri._meta
    if key in cache:
        return cache[key]
    ne, nq = len(tri.elements), len(quad)
    A = np.array([K.core.affine.A for K in tri.elements]).reshape(ne, 2, 2)
    b = np.array([K.core.affine.b for K in tri.elements]).reshape(ne, 2)
    pts = np.einsum("eab,qb->eqa", A, quad.points) + b[:, None, :]
    jac = np.broadcast_to(A[:, None], (ne, nq, 2, 2)).copy()

    curved = [e for e, K in enumerate(tri.elements) if K.is_curved]
    if curved:
        els = [tri.elements[e] for e in curved]
        n = _threads()
        if n > 1 and len(els) > 64:
            chunks = np.array_split(np.arange(len(els)), n)
            with ThreadPoolExecutor(n) as pool:
                parts = pool.map(lambda c: _curved_block([els[i] for i in c], quad.points), chunks)
                results = [r for part in parts for r in part]
        else:
            results = _curved_block(els, quad.points)
        for e, (x, J) in zip(curved, results):
            pts[e], jac[e] = x, J

    det = np.linalg.det(jac)
    signs = np.sign(det[:, :1])
    if np.any(det * signs <= 0.0):
        bad = int(np.flatnonzero(np.any(det * signs <= 0.0, axis=1))[0])
        raise NonpositiveJacobian(f"element {bad}: Jacobian changes sign or vanishes", element=bad)
    geom = ElementGeometry(
        quad=quad,
        points=pts,
        jac=jac,
        det=np.abs(det),
        jac_inv_t=np.swapaxes(np.linalg.inv(jac), -1, -2),
        weights=np.abs(det) * quad.weights,
    )
    cache[key] = geom
    return geom


@dataclass(frozen=True, eq=False)
class FeSpace:
    """Continuous P1 space; one degree of freedom per mesh vertex."""

    tri: object
    degree: int = 1

    def __post_init__(self):
        if self.degree != 1:
            raise UnsupportedDegree("only linear (k = 1) spaces can be assembled and solved")

    @property
    def nodes(self):
        return self.tri.vertices

    @property
    def cells(self):
        return self.tri.cells

    @property
    def ndof(self):
        return len(self.tri.vertices)

    @cached_property
    def boundary_mask(self):
        mask = np.zeros(self.ndof, dtype=bool)
        mask[self.tri.boundary_vertex_ids()] = True
        return mask

    def geometry(self, quad):
        return element_geometry(self.tri, quad)


@dataclass(frozen=True, eq=False)
class FeSystem:
    stiffness: SparseSym
    load: np.ndarray
    dirichlet_mask: np.ndarray
    constrained: bool = False


def interpolate_p1(space, v):
    """Nodal interpolant: coefficient ``i`` is ``v(node_i)``."""
    return np.asarray(v(space.nodes), dtype=float) * np.ones(space.ndof)


def element_matrices(space, quad):
    geom = space.geometry(quad)
    G = geom.basis_gradients
    return np.einsum("eqia,eqja,eq->eij", G, G, geom.weights)


def assemble(space, f, quad=None):
    """Stiffness matrix and load vector by quadrature on the reference triangle.

    ``f`` is called once with all physical quadrature points, shape
    ``(n_el, n_q, 2)``, and returns values of shape ``(n_el, n_q)``.
    """
    quad = rule(8) if quad is None else quad
    geom = space.geometry(quad)
    Ke = element_matrices(space, quad)
    phi = p1_basis(quad.points)  # (n_q, 3)
    fq = np.broadcast_to(np.asarray(f(geom.points), dtype=float), geom.weights.shape)
    be = np.einsum("eq,qi,eq->ei", fq, phi, geom.weights)
    cells = space.cells
    rows = np.repeat(cells, 3, axis=1)
    cols = np.tile(cells, (1, 3))
    K = SparseSym.from_triplets(rows, cols, Ke.reshape(len(cells), 9), space.ndof)
    load = np.bincount(cells.ravel(), weights=be.ravel(), minlength=space.ndof)
    return FeSystem(K, load, space.boundary_mask.copy())


def apply_dirichlet(system, space=None):
    """Impose homogeneous Dirichlet data by symmetric elimination."""
    mask = system.dirichlet_mask if space is None else space.boundary_mask
    load = system.load.copy()
    load[mask] = 0.0
    return FeSystem(system.stiffness.constrain(mask), load, mask.copy(), constrained=True)


def solve_poisson(space, f, quad=None, tol=1e-12):
    """Assemble, constrain and solve ``-Laplace u = f`` with ``u = 0`` on the boundary."""
    system = apply_dirichlet(assemble(space, f, quad), space)
    return cg_solve(system.stiffness, system.load, tol=tol)


def evaluate(space, coeffs, quad):
    """Values ``(n_el, n_q)`` and gradients ``(n_el, n_q, 2)`` of a P1 function."""
    geom = space.geometry(quad)
    local = np.asarray(coeffs)[space.cells]  # (n_el, 3)
    vals = local @ p1_basis(quad.points).T
    grads = np.einsum("ei,eqia->eqa", local, geom.basis_gradients)
    return vals, grads
