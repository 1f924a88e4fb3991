"""Sparse symmetric matrices in CSR form and a Jacobi-preconditioned CG."""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotConverged

__all__ = ["SparseSym", "SolveStats", "matvec", "cg_solve"]


@dataclass(frozen=True, eq=False)
class SparseSym:
    """CSR storage; column indices are sorted and unique within each row."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    @classmethod
    def from_triplets(cls, rows, cols, vals, n):
        """Build from COO triplets, summing duplicates in a fixed order."""
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        vals = np.asarray(vals, dtype=float).ravel()
        keys = rows * n + cols
        uniq, inverse = np.unique(keys, return_inverse=True)
        data = np.bincount(inverse, weights=vals, minlength=len(uniq))
        r = uniq // n
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, r + 1, 1)
        return cls(n, np.cumsum(indptr), uniq % n, data)

    @classmethod
    def from_dense(cls, M):
        M = np.asarray(M, dtype=float)
        r, c = np.nonzero(M)
        return cls.from_triplets(r, c, M[r, c], M.shape[0])

    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def nnz(self):
        return len(self.data)

    @property
    def row_ids(self):
        return np.repeat(np.arange(self.n), np.diff(self.indptr))

    def diagonal(self):
        d = np.zeros(self.n)
        on = self.row_ids == self.indices
        d[self.indices[on]] = self.data[on]
        return d

    def toarray(self):
        M = np.zeros((self.n, self.n))
        np.add.at(M, (self.row_ids, self.indices), self.data)
        return M

    def asymmetry(self):
        """Largest ``|A_ij - A_ji|`` relative to the largest entry."""
        M = self._as_dict()
        scale = max(np.abs(self.data).max(initial=0.0), 1e-300)
        return max((abs(v - M.get((j, i), 0.0)) for (i, j), v in M.items()), default=0.0) / scale

    def _as_dict(self):
        return {(int(i), int(j)): float(v) for i, j, v in zip(self.row_ids, self.indices, self.data)}

    def constrain(self, mask):
        """Zero the rows and columns flagged in ``mask`` and put 1 on their diagonal."""
        mask = np.asarray(mask, dtype=bool)
        r, c = self.row_ids, self.indices
        keep = ~(mask[r] | mask[c])
        fixed = np.flatnonzero(mask)
        return SparseSym.from_triplets(
            np.concatenate([r[keep], fixed]),
            np.concatenate([c[keep], fixed]),
            np.concatenate([self.data[keep], np.ones(len(fixed))]),
            self.n,
        )


def matvec(A, x):
    """``y = A @ x`` with a fixed summation order per row."""
    x = np.asarray(x, dtype=float)
    if x.shape != (A.n,):
        raise DimensionMismatch(f"matrix is {A.n}x{A.n}, vector has shape {x.shape}")
    return np.bincount(A.row_ids, weights=A.data * x[A.indices], minlength=A.n)


@dataclass(frozen=True)
class SolveStats:
    iterations: int
    final_residual: float  # relative, ||r|| / ||b||
    converged: bool


def cg_solve(A, b, tol=1e-12, maxit=None, x0=None, callback=None):
    """Solve ``A x = b`` for symmetric positive definite ``A``.

    Stops once the recursively updated residual satisfies
    ``||r|| <= tol * ||b||``.  Raises :class:`NotConverged` (carrying the
    stats) when ``maxit`` is exhausted or a non-positive curvature
    ``p^T A p <= 0`` signals that ``A`` is not SPD.  ``callback(x)`` is
    called with a copy of each iterate.
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (A.n,):
        raise DimensionMismatch(f"matrix is {A.n}x{A.n}, right-hand side has shape {b.shape}")
    if maxit is None:
        maxit = 10 * A.n
    diag = A.diagonal()
    if np.any(diag <= 0.0):
        raise NotConverged("non-positive diagonal entry; matrix is not SPD",
                           SolveStats(0, np.inf, False))
    minv = 1.0 / diag
    bnorm = np.linalg.norm(b)
    x = np.zeros(A.n) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0:
        return np.zeros(A.n), SolveStats(0, 0.0, True)
    r = b - matvec(A, x)
    z = minv * r
    p = z.copy()
    rz = r @ z
    res = np.linalg.norm(r) / bnorm
    it = 0
    while res > tol:
        if it >= maxit:
            raise NotConverged(f"CG did not converge in {maxit} iterations (residual {res:.3e})",
                               SolveStats(it, res, False))
        q = matvec(A, p)
        pq = p @ q
        if pq <= 0.0:
            raise NotConverged(f"CG breakdown at iteration {it}: p^T A p = {pq:.3e}",
                               SolveStats(it, res, False))
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        z = minv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
        res = np.linalg.norm(r) / bnorm
        it += 1
        if callback is not None:
            callback(x.copy())
    return x, SolveStats(it, float(res), True)
