"""Structured linear solvers: dual Vandermonde systems and Hankel rows.

The dual Vandermonde system ``sum_j a_j x_j**k = mu_k`` recovers amplitudes
from nodes and moments. The Hankel rows ``sum_{i=0}^d mu_{l-i} sigma_i = 0``
(``sigma_0 = 1``, ``l = d..q``) cut out an affine set of monic polynomial
coefficients whose hyperbolic part parametrizes the node projection of a leaf.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .core import MomentVector, PronyError, as_moment_vector

RANK_RTOL = 1e-10
GAP_TOL = 1e-12


class NearSingularError(PronyError):
    """Nodes are too close for the Vandermonde system to be solved reliably."""


def _sign_fix(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


@dataclass(frozen=True, eq=False)
class AffineSolutionSet:
    """``{particular + basis.T @ t}`` inside coefficient space ``R^d``.

    ``particular is None`` marks the EMPTY set (inconsistent system); the
    basis is then empty as well. Basis rows are orthonormal.
    """

    dimension_ambient: int
    particular: np.ndarray | None
    basis: np.ndarray
    rank: int
    matrix: np.ndarray = field(repr=False, default=None)
    rhs: np.ndarray = field(repr=False, default=None)

    @property
    def is_empty(self) -> bool:
        return self.particular is None

    @property
    def dim(self) -> int:
        return -1 if self.is_empty else self.basis.shape[0]

    def point(self, t) -> np.ndarray:
        if self.is_empty:
            raise PronyError("the solution set is empty")
        t = np.asarray(t, dtype=float).reshape(-1)
        if t.size != self.dim:
            raise PronyError(f"expected {self.dim} parameters, got {t.size}")
        return self.particular + t @ self.basis

    def points(self, T) -> np.ndarray:
        """Vectorized ``point`` over the rows of ``T`` (shape ``(n, dim)``)."""
        T = np.asarray(T, dtype=float)
        T = T.reshape(len(T), self.dim) if T.ndim == 2 else T.reshape(-1, self.dim)
        return self.particular[None, :] + T @ self.basis

    def coordinates(self, sigma) -> np.ndarray:
        """Parameters of the orthogonal projection of ``sigma`` onto the set."""
        return (np.asarray(sigma, dtype=float) - self.particular) @ self.basis.T

    def project(self, sigma) -> np.ndarray:
        return self.point(self.coordinates(sigma))

    def distance(self, sigma) -> float:
        sigma = np.asarray(sigma, dtype=float)
        return float(np.linalg.norm(sigma - self.project(sigma)))

    def residual(self, sigma) -> float:
        """Max absolute row residual of the source system at ``sigma``."""
        if self.matrix is None or self.matrix.size == 0:
            return 0.0
        return float(np.max(np.abs(self.matrix @ np.asarray(sigma, dtype=float) - self.rhs)))

    def to_json(self) -> dict:
        return {
            "dim": self.dim if not self.is_empty else None,
            "particular": None if self.is_empty else self.particular.tolist(),
            "basis": self.basis.tolist(),
        }


def vandermonde_amplitudes(X, mu, gap_tol: float = GAP_TOL) -> np.ndarray:
    """Solve ``sum_j a_j x_j**k = mu_k`` (``k < d``) for the amplitudes.

    Uses the Bjorck-Pereyra progressive elimination for the dual Vandermonde
    system, which costs O(d^2) and is accurate for ordered nodes.

    Raises:
        NearSingularError: if two nodes are closer than ``gap_tol``.
    """
    x = [float(v) for v in np.asarray(X, dtype=float).reshape(-1)]
    b = [float(v) for v in np.asarray(getattr(mu, "values", mu), dtype=float).reshape(-1)]
    n = len(x)
    if len(b) != n:
        raise PronyError(f"need exactly {n} moments for {n} nodes, got {len(b)}")
    if n > 1 and min(x[i + 1] - x[i] for i in range(n - 1)) < gap_tol:
        raise NearSingularError("nodes nearly coincide; Vandermonde system is singular")
    for k in range(n - 1):
        for i in range(n - 1, k, -1):
            b[i] -= x[k] * b[i - 1]
    for k in range(n - 2, -1, -1):
        for i in range(k + 1, n):
            b[i] /= x[i] - x[i - k - 1]
        for i in range(k, n - 1):
            b[i] -= b[i + 1]
    return np.array(b)


def leaf_amplitudes_low_q(mu, X, free_amplitudes=(), gap_tol: float = GAP_TOL) -> np.ndarray:
    """Complete a leaf point for ``q <= d - 1`` from nodes and free amplitudes.

    ``free_amplitudes`` are ``a_{q+2}..a_d``; the leading ``q + 1`` amplitudes
    are solved from the first ``q + 1`` moment equations on ``x_1..x_{q+1}``.
    """
    mu = as_moment_vector(mu)
    x = np.asarray(X, dtype=float).reshape(-1)
    d, q = x.size, mu.q
    free = np.asarray(free_amplitudes, dtype=float).reshape(-1)
    if q > d - 1:
        raise PronyError(f"low-q completion needs q <= d-1, got q={q}, d={d}")
    if free.size != d - q - 1:
        raise PronyError(f"expected {d - q - 1} free amplitudes, got {free.size}")
    if np.any(np.diff(x) <= 0):
        raise PronyError("nodes must be strictly increasing")
    tail = x[q + 1:]
    rhs = np.array([mu.values[k] - np.dot(free, tail ** k) for k in range(q + 1)])
    head = vandermonde_amplitudes(x[:q + 1], rhs, gap_tol=gap_tol)
    return np.concatenate([head, free])


def hankel_system(mu, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows ``l = d..q`` as ``H @ sigma = rhs`` with ``sigma = (sigma_1..sigma_d)``."""
    v = as_moment_vector(mu).values
    q = v.size - 1
    rows = [[v[l - i] for i in range(1, d + 1)] for l in range(d, q + 1)]
    H = np.array(rows, dtype=float).reshape(-1, d)
    rhs = -v[d:q + 1].astype(float)
    return H, rhs


def numerical_rank(H: np.ndarray, rtol: float = RANK_RTOL) -> int:
    """Rank from a column-pivoted QR, thresholded relative to the top singular value."""
    if H.size == 0:
        return 0
    smax = np.linalg.norm(H, 2)
    if smax == 0:
        return 0
    R = scipy.linalg.qr(H, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(R))
    return int(np.sum(diag > rtol * smax))


def hankel_solution_set(mu, d: int, rtol: float = RANK_RTOL,
                        consistency_tol: float = 1e-8) -> AffineSolutionSet:
    """Affine set of ``(sigma_1..sigma_d)`` solving the Hankel rows ``l = d..q``.

    Returns an EMPTY set (``particular is None``) when the rows are inconsistent.
    """
    mu = as_moment_vector(mu)
    if mu.q < d:
        raise PronyError(f"Hankel rows need q >= d, got q={mu.q}, d={d}")
    H, rhs = hankel_system(mu, d)
    rank = numerical_rank(H, rtol)
    U, s, Vt = np.linalg.svd(H, full_matrices=True)
    coef = (U[:, :rank].T @ rhs) / s[:rank]
    particular = coef @ Vt[:rank]
    resid = np.linalg.norm(H @ particular - rhs)
    if resid > consistency_tol * (1.0 + np.linalg.norm(rhs)):
        return AffineSolutionSet(d, None, np.zeros((0, d)), rank, H, rhs)
    basis = np.array([_sign_fix(v) for v in Vt[rank:]]).reshape(-1, d)
    return AffineSolutionSet(d, particular, basis, rank, H, rhs)


def vandermonde_amplitudes_batch(X, B) -> np.ndarray:
    """Row-wise ``vandermonde_amplitudes`` for ``(n, d)`` arrays; no gap check."""
    x = np.atleast_2d(np.asarray(X, dtype=float))
    b = np.array(np.atleast_2d(B), dtype=float)
    n = x.shape[1]
    for k in range(n - 1):
        for i in range(n - 1, k, -1):
            b[:, i] -= x[:, k] * b[:, i - 1]
    for k in range(n - 2, -1, -1):
        for i in range(k + 1, n):
            b[:, i] /= x[:, i] - x[:, i - k - 1]
        for i in range(k, n - 1):
            b[:, i] -= b[:, i + 1]
    return b
