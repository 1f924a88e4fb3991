"""Error quantities, observed rates and interpolation-estimate diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRHS, InvalidRateInput
from .fem import P1_GRADIENTS, FeSpace, element_geometry, evaluate, interpolate_p1, solve_poisson
from .geometry import REFERENCE_VERTICES, transported_direction
from .mesh import disk_mesh, normalize_geo
from .quadrature import rule

__all__ = [
    "U_H1_SEMINORM",
    "U_L2_NORM",
    "u_exact",
    "grad_u_exact",
    "rhs_f",
    "sincos",
    "grad_sincos",
    "hess_sincos",
    "GeometricErrors",
    "FemErrors",
    "BoundCheckReport",
    "ConvergenceRow",
    "geometric_errors",
    "fem_errors",
    "rate",
    "interpolation_bound_check",
    "directional_gradient",
    "directional_gradient_fd",
    "affine_core_l2_rhs",
    "affine_core_h1_check",
    "convergence_study",
]

# Manufactured solution u = 1 - |x|^2 on the unit disk, -Laplace u = 4.
# |u|_H1^2 = int_0^2pi int_0^1 4 r^2 r dr dtheta = 2 pi
# ||u||_L2^2 = 2 pi int_0^1 (1 - r^2)^2 r dr = pi / 3
U_H1_SEMINORM = math.sqrt(2.0 * math.pi)
U_L2_NORM = math.sqrt(math.pi / 3.0)

BOUNDARY_SAMPLES = 64


def u_exact(x):
    return 1.0 - np.sum(np.asarray(x) ** 2, axis=-1)


def grad_u_exact(x):
    return -2.0 * np.asarray(x, dtype=float)


def rhs_f(x):
    return np.full(np.shape(x)[:-1], 4.0)


# smooth, non-polynomial test function v = sin(x1) cos(x2) for the estimate checks
def sincos(x):
    x = np.asarray(x, dtype=float)
    return np.sin(x[..., 0]) * np.cos(x[..., 1])


def grad_sincos(x):
    x = np.asarray(x, dtype=float)
    s1, c1, s2, c2 = np.sin(x[..., 0]), np.cos(x[..., 0]), np.sin(x[..., 1]), np.cos(x[..., 1])
    return np.stack([c1 * c2, -s1 * s2], axis=-1)


def hess_sincos(x):
    x = np.asarray(x, dtype=float)
    s1, c1, s2, c2 = np.sin(x[..., 0]), np.cos(x[..., 0]), np.sin(x[..., 1]), np.cos(x[..., 1])
    row1 = np.stack([-s1 * c2, -c1 * s2], axis=-1)
    row2 = np.stack([-c1 * s2, -s1 * c2], axis=-1)
    return np.stack([row1, row2], axis=-2)


@dataclass(frozen=True)
class GeometricErrors:
    area_error: float
    bdry_error: float
    area: float


@dataclass(frozen=True)
class FemErrors:
    e_h1_rel: float
    e_l2_rel: float
    h: float


@dataclass(frozen=True, eq=False)
class BoundCheckReport:
    """Per-element sides of the curved-element L2 and H1 interpolation estimates."""

    lhs_l2: np.ndarray
    rhs_l2: np.ndarray
    lhs_h1: np.ndarray
    rhs_h1: np.ndarray

    @staticmethod
    def _ratio(lhs, rhs):
        bad = (rhs == 0.0) & (lhs > 1e-12)
        if np.any(bad):
            raise DegenerateRHS(f"estimate right-hand side vanishes on {int(bad.sum())} element(s) "
                                "with nonzero interpolation error")
        out = np.zeros_like(lhs)
        nz = rhs > 0.0
        out[nz] = lhs[nz] / rhs[nz]
        return out

    @property
    def ratios_l2(self):
        return self._ratio(self.lhs_l2, self.rhs_l2)

    @property
    def ratios_h1(self):
        return self._ratio(self.lhs_h1, self.rhs_h1)

    @property
    def max_ratio_l2(self):
        return float(self.ratios_l2.max(initial=0.0))

    @property
    def max_ratio_h1(self):
        return float(self.ratios_h1.max(initial=0.0))


def geometric_errors(tri, quad=None, bdry_samples=BOUNDARY_SAMPLES):
    """Area error of the represented domain and maximal radial boundary error.

    The boundary is sampled at ``bdry_samples`` equally spaced parameters per
    boundary edge (endpoints included), mapped through the element map.
    """
    if bdry_samples < 10:
        raise ValueError("need at least 10 samples per boundary edge")
    quad = rule(8) if quad is None else quad
    area = float(element_geometry(tri, quad).weights.sum())
    s = np.linspace(0.0, 1.0, bdry_samples)
    worst = 0.0
    for e, a, b, *_ in tri.boundary_edges:
        K = tri.elements[e]
        ids = list(K.core.ids)
        ha, hb = REFERENCE_VERTICES[ids.index(a)], REFERENCE_VERTICES[ids.index(b)]
        x = K.emap((1.0 - s)[:, None] * ha + s[:, None] * hb)
        worst = max(worst, float(np.abs(np.linalg.norm(x, axis=1) - 1.0).max()))
    return GeometricErrors(abs(area - math.pi), worst, area)


def fem_errors(space, uh, u=u_exact, grad_u=grad_u_exact, quad=None,
               h1_norm=U_H1_SEMINORM, l2_norm=U_L2_NORM):
    """Relative H1-seminorm and L2 errors of ``uh`` by quadrature on every element."""
    quad = rule(8) if quad is None else quad
    geom = space.geometry(quad)
    vals, grads = evaluate(space, uh, quad)
    eu = u(geom.points) - vals
    eg = grad_u(geom.points) - grads
    h1 = math.sqrt(float(np.sum(geom.weights * np.sum(eg**2, axis=-1))))
    l2 = math.sqrt(float(np.sum(geom.weights * eu**2)))
    return FemErrors(h1 / h1_norm, l2 / l2_norm, space.tri.h)


def rate(e_old, e_new, h_old, h_new):
    """Observed order ``log(e_old / e_new) / log(h_old / h_new)``."""
    if min(e_old, e_new, h_old, h_new) <= 0.0 or h_old <= h_new:
        raise InvalidRateInput(f"need positive errors and h_old > h_new > 0, got "
                               f"e=({e_old}, {e_new}), h=({h_old}, {h_new})")
    return math.log(e_old / e_new) / math.log(h_old / h_new)


def _correction_derivatives(tri, quad):
    """``DPsi`` and ``D^2 Psi`` at the core images of the quadrature points."""
    ne, nq = len(tri.elements), len(quad)
    D = np.broadcast_to(np.eye(2), (ne, nq, 2, 2)).copy()
    D2 = np.zeros((ne, nq, 2, 2, 2))
    for e, K in enumerate(tri.elements):
        if K.is_curved:
            y = K.core.affine(quad.points)
            D[e] = K.correction.jacobian(y)
            D2[e] = K.correction.hessian(y)
    return D, D2


def interpolation_bound_check(tri, v, grad_v, hess_v, quad=None):
    """Evaluate both sides of the P1 interpolation estimates on every element.

    L2:  ||v - Iv||_K   vs  sum_ij h_i h_j (||D^2v[tau_i, tau_j]||_K + ||grad v . b_ij||_K)
    H1:  |v - Iv|_1,K   vs  sum_i  h_i |tau_i . grad v|_1,K

    ``tau_i = DPsi r_i`` and ``b_ij = D^2Psi[r_i, r_j]`` are evaluated at the
    core images of the quadrature points, where ``Psi^-1`` is known exactly.
    The gradient of ``tau_i . grad v`` is
    ``D^2v tau_i + DPsi^-T (sum_m d_m v D^2Psi_m[r_i, .])``.
    """
    quad = rule(8) if quad is None else quad
    space = FeSpace(tri)
    geom = space.geometry(quad)
    x = geom.points
    w = geom.weights

    vals, grads = evaluate(space, interpolate_p1(space, v), quad)
    lhs_l2 = np.sqrt(np.sum(w * (v(x) - vals) ** 2, axis=1))
    lhs_h1 = np.sqrt(np.sum(w * np.sum((grad_v(x) - grads) ** 2, axis=-1), axis=1))

    D, D2 = _correction_derivatives(tri, quad)
    r = np.array([[K.core.r1, K.core.r2] for K in tri.elements])  # (ne, i, 2)
    hv = np.array([[K.core.h1, K.core.h2] for K in tri.elements])
    g = grad_v(x)
    H = hess_v(x)
    tau = np.einsum("eqmr,eir->eqim", D, r)
    b = np.einsum("eqmrs,eir,ejs->eqijm", D2, r, r)
    second = np.einsum("eqim,eqmn,eqjn->eqij", tau, H, tau)
    curv = np.einsum("eqm,eqijm->eqij", g, b)
    n_second = np.sqrt(np.einsum("eq,eqij->eij", w, second**2))
    n_curv = np.sqrt(np.einsum("eq,eqij->eij", w, curv**2))
    hh = hv[:, :, None] * hv[:, None, :]
    rhs_l2 = np.sum(hh * (n_second + n_curv), axis=(1, 2))

    c = np.einsum("eqm,eqmrs,eir->eqis", g, D2, r)
    DinvT = np.swapaxes(np.linalg.inv(D), -1, -2)
    dg = np.einsum("eqmn,eqin->eqim", H, tau) + np.einsum("eqks,eqis->eqik", DinvT, c)
    semi = np.sqrt(np.einsum("eq,eqim->ei", w, dg**2))
    rhs_h1 = np.sum(hv * semi, axis=1)
    return BoundCheckReport(lhs_l2, rhs_l2, lhs_h1, rhs_h1)


def directional_gradient(K, i, x, grad_v, hess_v):
    """Analytic gradient of ``tau_i . grad v`` at physical points ``x`` of element ``K``."""
    x = np.asarray(x, dtype=float)
    corr, r = K.correction, K.core.direction(i)
    y = corr.inverse(x)
    D = corr.jacobian(y)
    c = np.einsum("...m,...mrs,r->...s", grad_v(x), corr.hessian(y), r)
    tau = D @ r
    return np.einsum("...mn,...n->...m", hess_v(x), tau) + np.linalg.solve(np.swapaxes(D, -1, -2), c[..., None])[..., 0]


def directional_gradient_fd(K, i, x, grad_v, step=1e-5):
    """Central-difference gradient of ``tau_i . grad v`` at physical points ``x``.

    Each evaluation of ``tau_i`` inverts the curved correction by Newton.
    """
    x = np.asarray(x, dtype=float)
    hstep = step * K.core.hT

    def g(p):
        return np.sum(transported_direction(K.core, K.correction, i, p) * grad_v(p), axis=-1)

    cols = []
    for k in range(2):
        e = np.zeros(2)
        e[k] = hstep
        cols.append((g(x + e) - g(x - e)) / (2.0 * hstep))
    return np.stack(cols, axis=-1)


def affine_core_l2_rhs(core, hess_w, quad=None):
    """``sum_ij h_i h_j ||d^2 w / dr_i dr_j||_L2(T)`` on a straight triangle."""
    quad = rule(8) if quad is None else quad
    y = core.affine(quad.points)
    wq = abs(core.affine.det) * quad.weights
    H = hess_w(y)
    total = 0.0
    for i in (1, 2):
        for j in (1, 2):
            d = np.einsum("...mn,m,n->...", H, core.direction(i), core.direction(j))
            total += core.edge_length(i) * core.edge_length(j) * math.sqrt(float(wq @ d**2))
    return total


def affine_core_h1_check(core, w, grad_w, hess_w, quad=None):
    """``(|w - I w|_1,T,  (H_T / h_T) sum_i h_i |dw/dr_i|_1,T)`` on a straight triangle."""
    quad = rule(8) if quad is None else quad
    amap = core.affine
    y = amap(quad.points)
    wq = abs(amap.det) * quad.weights
    nodal = w(core.vertices)
    grad_iw = amap.A_inv.T @ (nodal @ P1_GRADIENTS)
    lhs = math.sqrt(float(wq @ np.sum((grad_w(y) - grad_iw) ** 2, axis=-1)))
    H = hess_w(y)
    rhs = 0.0
    for i in (1, 2):
        d = H @ core.direction(i)
        rhs += core.edge_length(i) * math.sqrt(float(wq @ np.sum(d**2, axis=-1)))
    return lhs, core.HT / core.hT * rhs


@dataclass(frozen=True)
class ConvergenceRow:
    geo: str
    level: int
    h: float
    area_error: float
    bdry_error: float
    e_h1: float
    rate_h1: float | None
    e_l2: float
    rate_l2: float | None
    cg_iterations: int


def convergence_study(geo, max_level, quad_degree=8, min_level=0):
    """Solve the unit-disk problem on levels ``min_level..max_level``."""
    if max_level > 6:
        raise ValueError("max_level must be at most 6")
    geo = normalize_geo(geo)
    quad = rule(quad_degree)
    rows = []
    for level in range(min_level, max_level + 1):
        tri = disk_mesh(level, geo)
        space = FeSpace(tri)
        uh, stats = solve_poisson(space, rhs_f, quad)
        ge = geometric_errors(tri, quad)
        fe = fem_errors(space, uh, quad=quad)
        r1 = r2 = None
        if rows:
            prev = rows[-1]
            r1 = rate(prev.e_h1, fe.e_h1_rel, prev.h, fe.h)
            r2 = rate(prev.e_l2, fe.e_l2_rel, prev.h, fe.h)
        rows.append(ConvergenceRow(geo, level, fe.h, ge.area_error, ge.bdry_error,
                                   fe.e_h1_rel, r1, fe.e_l2_rel, r2, stats.iterations))
    return rows
