"""Factorized element maps ``F = Psi o Phi`` for exact curved triangles.

Points are plain ``numpy`` arrays whose last axis has length 2; every map
below is vectorized over any number of leading axes.  Tensor conventions:

* Jacobians have shape ``(..., 2, 2)`` with ``J[..., m, k] = dF_m / dx_k``.
* Second derivatives have shape ``(..., 2, 2, 2)`` with
  ``H[..., m, j, k] = d^2 F_m / dx_j dx_k``.

Three coordinates are kept apart throughout: the reference coordinate
``xhat`` on the unit triangle, the core coordinate ``y`` on the straight
triangle ``T`` and the physical coordinate ``x`` on the curved element ``K``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DegenerateTriangle, NewtonDivergence, NonpositiveJacobian, PointOutsideElement

__all__ = [
    "AffineFactorization",
    "AffineMap",
    "AffineCore",
    "CurvedCorrection",
    "Identity",
    "EdgeBlend",
    "ArcBlend",
    "PolyEdgeBlend",
    "ElementMap",
    "longest_edge_order",
    "build_affine_factorization",
    "eval_F",
    "jacobian_F",
    "hessian_F",
    "eval_G",
    "transported_direction",
    "curvature_field",
    "pullback_gradient",
    "pullback_hessian",
    "pushforward_gradient",
    "pushforward_hessian",
    "barycentric",
]

REFERENCE_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

NEWTON_TOL = 1e-12
NEWTON_MAXIT = 50


def _rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def _cross(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def barycentric(y, a, b, c):
    """Barycentric coordinates ``(la, lb, lc)`` of ``y`` in triangle ``(a, b, c)``."""
    a, b, c = (np.asarray(p, dtype=float) for p in (a, b, c))
    Tinv = np.linalg.inv(np.column_stack([b - a, c - a]))
    lam = (np.asarray(y, dtype=float) - a) @ Tinv.T
    return np.concatenate([1.0 - lam.sum(axis=-1, keepdims=True), lam], axis=-1)


# ---------------------------------------------------------------------------
# Affine part
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AffineFactorization:
    """Parameters of ``A = A_T @ A_tilde @ A_hat``.

    ``A_hat = diag(h1, h2)`` carries the two edge lengths at the apex,
    ``A_tilde = [[1, s], [0, t]]`` the apex angle (``s = cos``, ``t = sin``)
    and ``A_T`` is a rotation by ``theta``, composed with the reflection
    ``diag(1, -1)`` when ``mirror`` is set.
    """

    h1: float
    h2: float
    s: float
    t: float
    theta: float
    mirror: bool
    bT: np.ndarray

    @property
    def A_hat(self):
        return np.diag([self.h1, self.h2])

    @property
    def A_tilde(self):
        return np.array([[1.0, self.s], [0.0, self.t]])

    @property
    def A_T(self):
        R = _rotation(self.theta)
        if self.mirror:
            R = R @ np.diag([1.0, -1.0])
        return R

    @property
    def A(self):
        return self.A_T @ self.A_tilde @ self.A_hat


@dataclass(frozen=True, eq=False)
class AffineMap:
    """``xhat -> A @ xhat + b``."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if abs(np.linalg.det(self.A)) == 0.0:
            raise DegenerateTriangle("affine map is singular")

    @cached_property
    def A_inv(self):
        return np.linalg.inv(self.A)

    @property
    def det(self):
        return float(np.linalg.det(self.A))

    def __call__(self, xhat):
        return np.asarray(xhat, dtype=float) @ self.A.T + self.b

    def inverse(self, y):
        return (np.asarray(y, dtype=float) - self.b) @ self.A_inv.T


def longest_edge_order(p1, p2, p3):
    """Permutation ``(i, j, k)`` putting three vertices in the canonical order.

    The returned first vertex is opposite the longest edge; of the remaining
    two, the one farther from the apex comes second.  Ties keep input order.
    """
    pts = [np.asarray(p, dtype=float) for p in (p1, p2, p3)]
    opposite = [np.linalg.norm(pts[(i + 1) % 3] - pts[(i + 2) % 3]) for i in range(3)]
    # first index attaining the strict maximum (ties resolved by input order)
    apex = int(np.argmax(opposite))
    others = [i for i in range(3) if i != apex]
    d = [np.linalg.norm(pts[i] - pts[apex]) for i in others]
    if d[1] > d[0]:
        others.reverse()
    return (apex, others[0], others[1])


def build_affine_factorization(p1, p2, p3):
    """Relabel a triangle and factor its affine map.

    Returns ``(factorization, affine_map)``; the map sends the reference
    vertices ``(0,0), (1,0), (0,1)`` to the relabelled vertices, where the
    edge between the second and third vertex is the longest and the first
    edge at the apex is the longer of the two remaining ones.
    Use :func:`longest_edge_order` to recover the permutation.
    """
    pts = [np.asarray(p, dtype=float) for p in (p1, p2, p3)]
    edges = [np.linalg.norm(pts[(i + 1) % 3] - pts[(i + 2) % 3]) for i in range(3)]
    area2 = abs(_cross(pts[1] - pts[0], pts[2] - pts[0]))
    if not np.all(np.isfinite(area2)) or 0.5 * area2 <= 1e-14 * max(edges) ** 2:
        raise DegenerateTriangle(f"triangle {[p.tolist() for p in pts]} has (near) zero area")
    i, j, k = longest_edge_order(*pts)
    a, b, c = pts[i], pts[j], pts[k]
    e1, e2 = b - a, c - a
    h1, h2 = float(np.linalg.norm(e1)), float(np.linalg.norm(e2))
    r1, r2 = e1 / h1, e2 / h2
    s = float(r1 @ r2)
    cr = float(_cross(r1, r2))
    fact = AffineFactorization(
        h1=h1,
        h2=h2,
        s=s,
        t=abs(cr),
        theta=float(np.arctan2(r1[1], r1[0])),
        mirror=cr < 0,
        bT=a.copy(),
    )
    return fact, AffineMap(np.column_stack([e1, e2]), a.copy())


@dataclass(frozen=True, eq=False)
class AffineCore:
    """The straight triangle underlying a (possibly curved) element.

    Vertices are stored in the canonical order of :func:`longest_edge_order`;
    ``ids`` are the matching global vertex ids.
    """

    ids: tuple
    p1: np.ndarray
    p2: np.ndarray
    p3: np.ndarray
    factorization: AffineFactorization
    affine: AffineMap

    @classmethod
    def from_points(cls, points, ids=(0, 1, 2)):
        points = [np.asarray(p, dtype=float) for p in points]
        fact, amap = build_affine_factorization(*points)
        order = longest_edge_order(*points)
        return cls(
            ids=tuple(ids[o] for o in order),
            p1=points[order[0]],
            p2=points[order[1]],
            p3=points[order[2]],
            factorization=fact,
            affine=amap,
        )

    @property
    def h1(self):
        return self.factorization.h1

    @property
    def h2(self):
        return self.factorization.h2

    @property
    def hT(self):
        return float(np.linalg.norm(self.p2 - self.p3))

    @property
    def area(self):
        return 0.5 * abs(float(_cross(self.p2 - self.p1, self.p3 - self.p1)))

    @property
    def HT(self):
        return self.h1 * self.h2 * self.hT / self.area

    @property
    def r1(self):
        return (self.p2 - self.p1) / self.h1

    @property
    def r2(self):
        return (self.p3 - self.p1) / self.h2

    def direction(self, i):
        if i not in (1, 2):
            raise ValueError("direction index must be 1 or 2")
        return self.r1 if i == 1 else self.r2

    def edge_length(self, i):
        return self.h1 if i == 1 else self.h2

    @property
    def vertices(self):
        return np.array([self.p1, self.p2, self.p3])


# ---------------------------------------------------------------------------
# Curved corrections
# ---------------------------------------------------------------------------


class CurvedCorrection:
    """A smooth deformation ``Psi`` of an affine core.

    Subclasses implement ``__call__``, ``jacobian`` and ``hessian``; the
    inverse is computed by damped Newton iteration seeded at ``y = x``.
    """

    name = "abstract"
    #: length scale used for the Newton tolerance
    scale = 1.0

    def __call__(self, y):
        raise NotImplementedError

    def jacobian(self, y):
        raise NotImplementedError

    def hessian(self, y):
        raise NotImplementedError

    @property
    def is_identity(self):
        return False

    def inverse(self, x, tol=None, maxit=NEWTON_MAXIT):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, 2)
        tol = NEWTON_TOL * self.scale if tol is None else tol
        y = flat.copy()
        res = np.linalg.norm(self(y) - flat, axis=-1)
        for _ in range(maxit):
            active = res > tol
            if not active.any():
                return y.reshape(x.shape)
            ya, xa, ra = y[active], flat[active], res[active]
            step = np.linalg.solve(self.jacobian(ya), (self(ya) - xa)[..., None])[..., 0]
            lam = np.ones(len(ya))
            for _ in range(40):
                trial = ya - lam[:, None] * step
                rt = np.linalg.norm(self(trial) - xa, axis=-1)
                worse = ~(rt < ra) & (rt > tol)
                if not worse.any():
                    break
                lam[worse] *= 0.5
            y[active] = trial
            res[active] = rt
        if np.all(res <= tol):
            return y.reshape(x.shape)
        raise NewtonDivergence(
            f"{self.name} inverse did not converge in {maxit} iterations "
            f"(max residual {res.max():.3e}, tol {tol:.1e})"
        )

    def inverse_jacobian(self, x):
        """``D(Psi^-1)(x) = DPsi(y)^-1``."""
        return np.linalg.inv(self.jacobian(self.inverse(x)))

    def inverse_hessian(self, x):
        """Second derivatives of ``Psi^-1`` at physical points ``x``."""
        y = self.inverse(x)
        P = np.linalg.inv(self.jacobian(y))
        return -np.einsum("...rm,...mab,...aj,...bk->...rjk", P, self.hessian(y), P, P)


class Identity(CurvedCorrection):
    name = "identity"

    def __call__(self, y):
        return np.array(y, dtype=float)

    def jacobian(self, y):
        y = np.asarray(y, dtype=float)
        return np.broadcast_to(np.eye(2), y.shape[:-1] + (2, 2)).copy()

    def hessian(self, y):
        y = np.asarray(y, dtype=float)
        return np.zeros(y.shape[:-1] + (2, 2, 2))

    def inverse(self, x, tol=None, maxit=NEWTON_MAXIT):
        return np.array(x, dtype=float)

    @property
    def is_identity(self):
        return True

    def __repr__(self):
        return "Identity()"


IDENTITY = Identity()


class EdgeBlend(CurvedCorrection):
    """Move the edge ``a-b`` of triangle ``(a, b, c)`` onto a curve ``gamma``.

    With barycentric coordinates ``(la, lb, lc)`` of ``y``::

        Psi(y) = y + la * lb * e((1 + lb - la) / 2)

    where ``e(s) = (gamma(s) - ((1 - s) a + s b)) / (s (1 - s))`` is the
    chord-to-curve gap divided by its edge bubble.  On the edge ``lc = 0``
    this gives ``Psi = gamma``; on the edges through ``c`` the product
    ``la * lb`` vanishes, so ``Psi`` is the identity there and neighbouring
    straight elements stay conforming.  ``e`` is stored as monomial
    coefficients ``coef[k]`` (shape ``(p + 1, 2)``), which keeps ``Psi``
    analytic on the whole triangle.
    """

    def __init__(self, a, b, c, coef):
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.c = np.asarray(c, dtype=float)
        T = np.column_stack([self.b - self.a, self.c - self.a])
        if abs(np.linalg.det(T)) <= 1e-14 * np.max(np.abs(T)) ** 2:
            raise DegenerateTriangle("blend triangle is degenerate")
        self._Tinv = np.linalg.inv(T)
        self._grad_lb = self._Tinv[0]
        self._grad_la = -self._Tinv[0] - self._Tinv[1]
        self._grad_sigma = 0.5 * (self._grad_lb - self._grad_la)
        self.coef = np.atleast_2d(np.asarray(coef, dtype=float)).reshape(-1, 2)
        k = np.arange(len(self.coef))
        self._dcoef = (k[1:, None] * self.coef[1:]) if len(k) > 1 else np.zeros((1, 2))
        self._ddcoef = (k[2:, None] * (k[2:, None] - 1) * self.coef[2:]) if len(k) > 2 else np.zeros((1, 2))
        self.scale = float(max(np.linalg.norm(self.a - self.b), np.linalg.norm(self.b - self.c),
                               np.linalg.norm(self.c - self.a)))

    @staticmethod
    def _poly(coef, s):
        out = np.zeros(s.shape + (2,))
        for ck in coef[::-1]:
            out = out * s[..., None] + ck
        return out

    def gap(self, s):
        """Chord-to-curve offset ``gamma(s) - ((1 - s) a + s b)``."""
        s = np.asarray(s, dtype=float)
        return (s * (1.0 - s))[..., None] * self._poly(self.coef, s)

    def curve(self, s):
        s = np.asarray(s, dtype=float)
        return (1.0 - s)[..., None] * self.a + s[..., None] * self.b + self.gap(s)

    def _parts(self, y):
        y = np.asarray(y, dtype=float)
        lam = (y - self.a) @ self._Tinv.T
        lb = lam[..., 0]
        la = 1.0 - lam[..., 0] - lam[..., 1]
        sigma = 0.5 * (1.0 + lb - la)
        return y, la, lb, sigma

    def __call__(self, y):
        y, la, lb, sigma = self._parts(y)
        return y + (la * lb)[..., None] * self._poly(self.coef, sigma)

    def jacobian(self, y):
        y, la, lb, sigma = self._parts(y)
        e = self._poly(self.coef, sigma)
        de = self._poly(self._dcoef, sigma)
        grad_p = lb[..., None] * self._grad_la + la[..., None] * self._grad_lb
        J = np.broadcast_to(np.eye(2), y.shape[:-1] + (2, 2)).copy()
        J += e[..., :, None] * grad_p[..., None, :]
        J += (la * lb)[..., None, None] * de[..., :, None] * self._grad_sigma
        return J

    def hessian(self, y):
        y, la, lb, sigma = self._parts(y)
        e = self._poly(self.coef, sigma)
        de = self._poly(self._dcoef, sigma)
        dde = self._poly(self._ddcoef, sigma)
        ga, gb, gs = self._grad_la, self._grad_lb, self._grad_sigma
        grad_p = lb[..., None] * ga + la[..., None] * gb
        hess_p = np.outer(ga, gb) + np.outer(gb, ga)
        sym = grad_p[..., :, None] * gs + gs[:, None] * grad_p[..., None, :]
        return (
            e[..., :, None, None] * hess_p
            + de[..., :, None, None] * sym[..., None, :, :]
            + ((la * lb)[..., None] * dde)[..., :, None, None] * np.outer(gs, gs)
        )

    def edge_point(self, s):
        """Image of the chord point ``(1 - s) a + s b``."""
        s = np.asarray(s, dtype=float)
        return self(((1.0 - s)[..., None] * self.a + s[..., None] * self.b))


def _arc_bubble_coefficients(theta_a, theta_b, tol=1e-20):
    """Monomial coefficients of the arc gap divided by ``s (1 - s)``.

    With ``z = i (theta_b - theta_a)``, the gap is
    ``exp(i theta_a) (exp(z s) - 1 - s (exp(z) - 1)) = -exp(i theta_a) s (1 - s) sum_k c_k s^k``
    with ``c_k = sum_{n >= k + 2} z^n / n!``; the tail sums have no cancellation.
    """
    z = 1j * (theta_b - theta_a)
    terms = [1.0 + 0j]
    n = 0
    while True:
        n += 1
        terms.append(terms[-1] * z / n)
        if n >= 2 and abs(terms[-1]) * (n + 1) < tol:
            break
    terms = np.array(terms)  # z^n / n!, n = 0..N
    tails = np.cumsum(terms[::-1])[::-1]  # sum_{m >= n}
    c = -tails[2:] * np.exp(1j * theta_a)
    return np.column_stack([c.real, c.imag])


class ArcBlend(EdgeBlend):
    """Edge blend onto the exact unit-circle arc between angles ``theta_a`` and ``theta_b``."""

    name = "exact_arc"

    def __init__(self, a, b, c, theta_a, theta_b):
        self.theta_a = float(theta_a)
        self.theta_b = float(theta_b)
        super().__init__(a, b, c, _arc_bubble_coefficients(self.theta_a, self.theta_b))

    def __repr__(self):
        return f"ArcBlend(theta=({self.theta_a:.6g}, {self.theta_b:.6g}))"


class PolyEdgeBlend(EdgeBlend):
    """Edge blend onto the degree-``order`` interpolant of the unit-circle arc.

    The interpolant passes through ``order + 1`` arc points equally spaced
    in angle; ``order = 1`` reproduces the straight chord.
    """

    def __init__(self, a, b, c, theta_a, theta_b, order):
        if order not in (1, 2, 3):
            raise ValueError("geometry order must be 1, 2 or 3")
        self.order = int(order)
        self.theta_a = float(theta_a)
        self.theta_b = float(theta_b)
        self.name = f"order{order}"
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        nodes = np.linspace(0.0, 1.0, order + 1)
        phi = (1.0 - nodes) * self.theta_a + nodes * self.theta_b
        pts = np.column_stack([np.cos(phi), np.sin(phi)])
        # gap values at the interior nodes, divided by the bubble
        inner = nodes[1:-1]
        if len(inner) == 0:
            coef = np.zeros((1, 2))
        else:
            chord = (1.0 - inner)[:, None] * a + inner[:, None] * b
            vals = (pts[1:-1] - chord) / (inner * (1.0 - inner))[:, None]
            coef = np.linalg.solve(np.vander(inner, len(inner), increasing=True), vals)
        super().__init__(a, b, c, coef)

    def __repr__(self):
        return f"PolyEdgeBlend(order={self.order}, theta=({self.theta_a:.6g}, {self.theta_b:.6g}))"


# ---------------------------------------------------------------------------
# Composite map
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ElementMap:
    """``F = Psi o Phi`` from the reference triangle onto a curved element."""

    affine: AffineMap
    correction: CurvedCorrection = field(default=IDENTITY)

    @cached_property
    def size(self):
        """Longest edge of the affine core."""
        v = self.affine(REFERENCE_VERTICES)
        return float(max(np.linalg.norm(v[i] - v[j]) for i, j in ((0, 1), (1, 2), (2, 0))))

    def __call__(self, xhat):
        return self.correction(self.affine(xhat))

    def jacobian(self, xhat, check=True):
        y = self.affine(xhat)
        DPsi = self.correction.jacobian(y)
        if check and not self.correction.is_identity:
            det = np.linalg.det(DPsi)
            if np.any(det <= 0.0):
                raise NonpositiveJacobian(f"det DPsi = {det.min():.3e} <= 0 for {self.correction!r}")
        return DPsi @ self.affine.A

    def hessian(self, xhat):
        y = self.affine(xhat)
        A = self.affine.A
        return np.einsum("...mrs,rj,sk->...mjk", self.correction.hessian(y), A, A)

    def inverse(self, x, check=True):
        """``G(x) = Phi^-1(Psi^-1(x))``; flags points that land outside the reference triangle."""
        y = self.correction.inverse(x, tol=NEWTON_TOL * self.size)
        xhat = self.affine.inverse(y)
        if check:
            lam = np.stack([1.0 - xhat[..., 0] - xhat[..., 1], xhat[..., 0], xhat[..., 1]], axis=-1)
            if np.any(lam < -1e-9):
                raise PointOutsideElement(f"point maps outside the reference triangle (min barycentric {lam.min():.3e})")
        return xhat

    def inverse_jacobian(self, x):
        """``DG(x) = A^-1 DPsi^-1(x)``."""
        return self.affine.A_inv @ self.correction.inverse_jacobian(x)

    def inverse_hessian(self, x):
        return np.einsum("mr,...rjk->...mjk", self.affine.A_inv, self.correction.inverse_hessian(x))


def eval_F(emap, xhat):
    return emap(xhat)


def jacobian_F(emap, xhat):
    return emap.jacobian(xhat)


def hessian_F(emap, xhat):
    return emap.hessian(xhat)


def eval_G(emap, x):
    return emap.inverse(x)


def transported_direction(core, corr, i, x):
    """``tau_i(x) = DPsi(Psi^-1(x)) r_i``; not normalized."""
    y = corr.inverse(x)
    return corr.jacobian(y) @ core.direction(i)


def curvature_field(core, corr, i, j, x):
    """``b_ij(x) = D^2 Psi(Psi^-1(x))[r_i, r_j]``."""
    y = corr.inverse(x)
    return np.einsum("...mrs,r,s->...m", corr.hessian(y), core.direction(i), core.direction(j))


# ---------------------------------------------------------------------------
# Pull-back / push-forward derivatives
# ---------------------------------------------------------------------------


def pullback_gradient(emap, grad_v, xhat):
    """Gradient of ``v o F`` in reference coordinates."""
    x = emap(xhat)
    return np.einsum("...m,...mk->...k", grad_v(x), emap.jacobian(xhat, check=False))


def pullback_hessian(emap, grad_v, hess_v, xhat):
    """Hessian of ``v o F``: ``DF^T D^2v DF + sum_m dv/dx_m D^2F_m``."""
    x = emap(xhat)
    DF = emap.jacobian(xhat, check=False)
    first = np.einsum("...lj,...lm,...mk->...jk", DF, hess_v(x), DF)
    return first + np.einsum("...m,...mjk->...jk", grad_v(x), emap.hessian(xhat))


def pushforward_gradient(emap, grad_vhat, x):
    """Gradient of ``vhat o G`` in physical coordinates."""
    xhat = emap.inverse(x, check=False)
    return np.einsum("...m,...mk->...k", grad_vhat(xhat), emap.inverse_jacobian(x))


def pushforward_hessian(emap, grad_vhat, hess_vhat, x):
    xhat = emap.inverse(x, check=False)
    DG = emap.inverse_jacobian(x)
    first = np.einsum("...lj,...lm,...mk->...jk", DG, hess_vhat(xhat), DG)
    return first + np.einsum("...m,...mjk->...jk", grad_vhat(xhat), emap.inverse_hessian(x))
