"""Exact-curved triangulations of the unit disk."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import EmptyMesh, NonpositiveJacobian
from .geometry import IDENTITY, AffineCore, _cross, ArcBlend, CurvedCorrection, ElementMap, PolyEdgeBlend
from .quadrature import rule

__all__ = [
    "AffineCore",
    "CurvedTriangle",
    "Triangulation",
    "RegularityReport",
    "GEOMETRIES",
    "normalize_geo",
    "disk_mesh",
    "validate",
    "check_conformity",
    "mesh_size",
    "mesh_to_dict",
    "write_mesh_json",
]

GEOMETRIES = ("order1", "order2", "order3", "exact_arc")
MESH_FORMAT = "curvedfem-mesh-v1"

_GEO_ALIASES = {
    1: "order1", 2: "order2", 3: "order3",
    "1": "order1", "2": "order2", "3": "order3",
    "exact": "exact_arc", "arc": "exact_arc",
}


def normalize_geo(geo):
    """Map ``1``/``"2"``/``"exact"``-style names to one of :data:`GEOMETRIES`."""
    name = _GEO_ALIASES.get(geo, geo)
    if name not in GEOMETRIES:
        raise ValueError(f"unknown geometry {geo!r}; expected one of {GEOMETRIES} or 1, 2, 3, 'exact'")
    return name


@dataclass(frozen=True, eq=False)
class CurvedTriangle:
    """One element ``K = Psi(T)``.

    ``curved_edge`` holds the global vertex ids ``(a, b)`` of the edge moved
    by the correction and ``arc`` its angles on the unit circle; both are
    ``None`` for straight elements.
    """

    core: AffineCore
    correction: CurvedCorrection = IDENTITY
    curved_edge: tuple | None = None
    arc: tuple | None = None

    @cached_property
    def emap(self):
        return ElementMap(self.core.affine, self.correction)

    @property
    def is_curved(self):
        return not self.correction.is_identity


@dataclass(frozen=True, eq=False)
class Triangulation:
    vertices: np.ndarray
    elements: list
    # (element index, vertex a, vertex b, theta_a, theta_b); angles are nan off the circle
    boundary_edges: list
    geo: str = "order1"
    level: int | None = None
    _meta: dict = field(default_factory=dict, repr=False)

    def __len__(self):
        return len(self.elements)

    @cached_property
    def cells(self):
        """``(n_elements, 3)`` vertex ids in canonical (reference-vertex) order."""
        return np.array([K.core.ids for K in self.elements], dtype=np.int64).reshape(-1, 3)

    @cached_property
    def edges(self):
        """Map ``(min id, max id) -> [(element, (from, to)), ...]``."""
        table = {}
        for e, K in enumerate(self.elements):
            ids = _ccw_ids(K.core, self.vertices)
            for k in range(3):
                u, v = ids[k], ids[(k + 1) % 3]
                table.setdefault((min(u, v), max(u, v)), []).append((e, (u, v)))
        return table

    @property
    def h(self):
        return mesh_size(self)

    @property
    def n_curved(self):
        return sum(K.is_curved for K in self.elements)

    def boundary_vertex_ids(self):
        ids = set()
        for _, a, b, *_ in self.boundary_edges:
            ids.update((a, b))
        return np.array(sorted(ids), dtype=np.int64)

    @classmethod
    def from_arrays(cls, vertices, triangles, corrections=None, geo="order1"):
        """Build a triangulation of straight (or given-correction) elements.

        Boundary edges are detected topologically; no arc data is attached.
        """
        vertices = np.asarray(vertices, dtype=float)
        elements = []
        for e, tri in enumerate(triangles):
            core = AffineCore.from_points(vertices[list(tri)], ids=tuple(int(t) for t in tri))
            corr = IDENTITY if corrections is None else corrections[e]
            elements.append(CurvedTriangle(core, corr))
        count = {}
        for e, tri in enumerate(triangles):
            for k in range(3):
                u, v = int(tri[k]), int(tri[(k + 1) % 3])
                count.setdefault((min(u, v), max(u, v)), []).append(e)
        bnd = [(es[0], u, v, np.nan, np.nan) for (u, v), es in count.items() if len(es) == 1]
        return cls(vertices, elements, bnd, geo=geo)


def _ccw_ids(core, vertices):
    ids = list(core.ids)
    p = vertices[ids]
    if _cross(p[1] - p[0], p[2] - p[0]) < 0:
        ids[1], ids[2] = ids[2], ids[1]
    return ids


@dataclass(frozen=True)
class RegularityReport:
    """Sampled geometric constants of a triangulation.

    ``gamma`` is the largest ``H_T / h_T`` over the cores; ``cpsi1`` and
    ``cpsi2`` bound ``|DPsi| + |DPsi^-1|`` and ``|D^2 Psi| + |D^2 Psi^-1|``
    at the quadrature points of the curved elements.
    """

    gamma: float
    cpsi1: float
    cpsi2: float
    min_det: float
    n_curved: int


def mesh_size(tri):
    """Longest edge over all affine cores."""
    if len(tri.elements) == 0:
        raise EmptyMesh("triangulation has no elements")
    return max(K.core.hT for K in tri.elements)


def _ring_offset(j):
    return 1 + 2 * j * (j - 1) if j > 0 else 0


def disk_mesh(level, geo="order1"):
    """Concentric-ring triangulation of the unit disk.

    Ring ``j = 1..R`` with ``R = 4 * 2**level`` carries ``4 j`` vertices at
    radius ``j / R``; each quadrant between rings ``j-1`` and ``j`` is split
    into ``2 j - 1`` triangles.  The boundary is the ``16 * 2**level``-gon
    inscribed in the unit circle, and every element owning a boundary edge
    is curved according to ``geo``.
    """
    if level < 0 or level > 8:
        raise ValueError("level must be in 0..8")
    geo = normalize_geo(geo)
    R = 4 * 2**level
    nv = 1 + 2 * R * (R + 1)
    vertices = np.zeros((nv, 2))
    for j in range(1, R + 1):
        k = np.arange(4 * j)
        phi = 2.0 * np.pi * k / (4 * j)
        rad = j / R
        vertices[_ring_offset(j) + k] = rad * np.column_stack([np.cos(phi), np.sin(phi)])

    def vid(j, k):
        return 0 if j == 0 else _ring_offset(j) + k % (4 * j)

    elements, bnd = [], []
    dtheta = 2.0 * np.pi / (4 * R)
    for j in range(1, R + 1):
        for q in range(4):
            for i in range(j):
                tri = (vid(j - 1, q * (j - 1) + i), vid(j, q * j + i), vid(j, q * j + i + 1))
                curved = j == R
                if curved:
                    ta = (q * j + i) * dtheta
                    a, b, c = vertices[tri[1]], vertices[tri[2]], vertices[tri[0]]
                    corr = _correction(geo, a, b, c, ta, ta + dtheta)
                    bnd.append((len(elements), tri[1], tri[2], ta, ta + dtheta))
                    arc = (ta, ta + dtheta)
                else:
                    corr, arc = IDENTITY, None
                core = AffineCore.from_points(vertices[list(tri)], ids=tri)
                elements.append(CurvedTriangle(core, corr, (tri[1], tri[2]) if not corr.is_identity else None,
                                               arc if not corr.is_identity else None))
            for i in range(j - 1):
                tri = (vid(j - 1, q * (j - 1) + i), vid(j, q * j + i + 1), vid(j - 1, q * (j - 1) + i + 1))
                elements.append(CurvedTriangle(AffineCore.from_points(vertices[list(tri)], ids=tri)))
    return Triangulation(vertices, elements, bnd, geo=geo, level=level)


def _correction(geo, a, b, c, ta, tb):
    if geo == "order1":
        return IDENTITY
    if geo == "exact_arc":
        return ArcBlend(a, b, c, ta, tb)
    return PolyEdgeBlend(a, b, c, ta, tb, int(geo[-1]))


def _spectral(M):
    return np.linalg.norm(M, ord=2, axis=(-2, -1))


def _tensor_norm(H):
    # Frobenius norm over (j, k) per component, then Euclidean over m: an upper
    # bound for the bilinear operator norm
    return np.sqrt(np.sum(H**2, axis=(-3, -2, -1)))


def validate(tri, quad_degree=8):
    """Check orientation of every curved correction and sample its bounds."""
    gamma = max(K.core.HT / K.core.hT for K in tri.elements)
    q = rule(quad_degree)
    cpsi1_fwd = cpsi1_inv = 1.0
    cpsi2_fwd = cpsi2_inv = 0.0
    min_det = np.inf
    for e, K in enumerate(tri.elements):
        if not K.is_curved:
            continue
        y = K.core.affine(q.points)
        D = K.correction.jacobian(y)
        det = np.linalg.det(D)
        if np.any(det <= 0.0):
            raise NonpositiveJacobian(f"element {e}: det DPsi = {det.min():.3e} <= 0", element=e)
        min_det = min(min_det, float(det.min()))
        Dinv = np.linalg.inv(D)
        H = K.correction.hessian(y)
        Hinv = -np.einsum("...rm,...mab,...aj,...bk->...rjk", Dinv, H, Dinv, Dinv)
        cpsi1_fwd = max(cpsi1_fwd, float(_spectral(D).max()))
        cpsi1_inv = max(cpsi1_inv, float(_spectral(Dinv).max()))
        cpsi2_fwd = max(cpsi2_fwd, float(_tensor_norm(H).max()))
        cpsi2_inv = max(cpsi2_inv, float(_tensor_norm(Hinv).max()))
    return RegularityReport(
        gamma=float(gamma),
        cpsi1=cpsi1_fwd + cpsi1_inv,
        cpsi2=cpsi2_fwd + cpsi2_inv,
        min_det=min_det if np.isfinite(min_det) else 1.0,
        n_curved=tri.n_curved,
    )


def check_conformity(tri):
    """Return the list of edges violating conformity (empty when conforming).

    Interior edges must be shared by exactly two elements traversing them in
    opposite directions; boundary edges by exactly one.
    """
    bad = []
    bnd = {(min(a, b), max(a, b)) for _, a, b, *_ in tri.boundary_edges}
    for key, uses in tri.edges.items():
        if key in bnd:
            if len(uses) != 1:
                bad.append(key)
        elif len(uses) != 2 or uses[0][1] != uses[1][1][::-1]:
            bad.append(key)
    return bad


def mesh_to_dict(tri):
    elements = []
    for K in tri.elements:
        entry = {"vertices": [int(i) for i in K.core.ids], "geo": K.correction.name}
        if K.arc is not None:
            entry["curved_edge"] = [int(i) for i in K.curved_edge]
            entry["arc"] = [float(t) for t in K.arc]
        elements.append(entry)
    return {
        "version": MESH_FORMAT,
        "geo": tri.geo,
        "level": tri.level,
        "vertices": tri.vertices.tolist(),
        "elements": elements,
        "boundary_edges": [[int(e), int(a), int(b)] for e, a, b, *_ in tri.boundary_edges],
    }


def write_mesh_json(tri, path):
    with open(path, "w") as fh:
        json.dump(mesh_to_dict(tri), fh)
