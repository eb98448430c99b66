"""Monic real polynomials ``Q(z) = z^d + sigma_1 z^{d-1} + ... + sigma_d``.

Hyperbolicity (all roots real and pairwise distinct) is decided with a Sturm
sequence; the ordered real roots are isolated by Sturm counts, bisected to a
fixed width and polished with a single Newton step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _sturm
from .core import PronyError, as_moment_vector

GAP_TOL = 1e-10
ROOT_WIDTH = 1e-12


class NotHyperbolicError(PronyError):
    pass


@dataclass(frozen=True, eq=False)
class MonicRealPolynomial:
    sigma: np.ndarray

    def __post_init__(self):
        s = np.array(self.sigma, dtype=float).reshape(-1)
        if s.size < 1 or not np.all(np.isfinite(s)):
            raise PronyError("sigma must hold d >= 1 finite coefficients")
        s.setflags(write=False)
        object.__setattr__(self, "sigma", s)

    @property
    def d(self) -> int:
        return self.sigma.size

    @property
    def coefficients(self) -> np.ndarray:
        """Descending coefficients including the leading 1."""
        return np.concatenate([[1.0], self.sigma])

    def __call__(self, z):
        return np.polyval(self.coefficients, z)

    def shifted(self, c: float) -> "MonicRealPolynomial":
        """``Q(z - c)``, whose roots are those of ``Q`` moved by ``+c``."""
        shifted = np.polynomial.polynomial.Polynomial(self.coefficients[::-1])
        coeffs = shifted(np.polynomial.polynomial.Polynomial([-c, 1.0])).coef[::-1]
        return MonicRealPolynomial(coeffs[1:] / coeffs[0])

    def __eq__(self, other):
        if not isinstance(other, MonicRealPolynomial):
            return NotImplemented
        return np.array_equal(self.sigma, other.sigma)

    def __repr__(self):
        return f"MonicRealPolynomial(sigma={self.sigma.tolist()})"


def _as_poly(Q) -> MonicRealPolynomial:
    return Q if isinstance(Q, MonicRealPolynomial) else MonicRealPolynomial(Q)


def vieta_map(X) -> MonicRealPolynomial:
    """Coefficients of ``prod_j (z - x_j)`` by sequential multiplication."""
    x = np.asarray(X, dtype=float).reshape(-1)
    if x.size < 1:
        raise PronyError("need at least one node")
    if np.any(np.diff(x) <= 0):
        raise PronyError("nodes must be strictly increasing")
    c = np.array([1.0])
    for xj in x:
        c = np.append(c, 0.0) - xj * np.concatenate([[0.0], c])
    return MonicRealPolynomial(c[1:])


def vieta_map_batch(X: np.ndarray) -> np.ndarray:
    """Row-wise ``vieta_map`` for an ``(n, d)`` array; no ordering check."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, d = X.shape
    C = np.zeros((n, d + 1))
    C[:, 0] = 1.0
    for j in range(d):
        C[:, 1:j + 2] = C[:, 1:j + 2] - X[:, j:j + 1] * C[:, 0:j + 1]
    return C[:, 1:]


def sturm_count(Q) -> int:
    """Number of distinct real roots of ``Q`` via Sturm's theorem."""
    return int(_sturm.count_real_roots(_as_poly(Q).coefficients))


def sturm_sequence(Q) -> list[np.ndarray]:
    """The normalized Sturm chain of ``Q`` in the rescaled variable ``z / B``."""
    c = _as_poly(Q).coefficients
    B = _sturm.scale_bound(c)
    s = c / B ** np.arange(c.size)
    chain, degs, count = _sturm.sturm_chain(s)
    return [chain[k, :degs[k] + 1].copy() for k in range(count)]


def _roots(Q: MonicRealPolynomial, width: float):
    roots, found, ok = _sturm.real_roots(np.ascontiguousarray(Q.coefficients), width)
    return roots, int(found), bool(ok)


def _hyperbolic_verdict(roots, found, ok, d, gap_tol) -> bool:
    if not ok or found != d:
        return False
    if d == 1:
        return True
    return bool(np.min(np.diff(roots)) > gap_tol)


def is_hyperbolic(Q, gap_tol: float = GAP_TOL) -> bool:
    """All ``d`` roots real with pairwise gaps above ``gap_tol``."""
    Q = _as_poly(Q)
    roots, found, ok = _roots(Q, ROOT_WIDTH)
    return _hyperbolic_verdict(roots, found, ok, Q.d, gap_tol)


def root_mapping(Q, gap_tol: float = GAP_TOL) -> np.ndarray:
    """Ordered real roots ``x_1 < ... < x_d`` of a hyperbolic ``Q``.

    Raises:
        NotHyperbolicError: if ``Q`` has complex or (numerically) repeated roots.
    """
    Q = _as_poly(Q)
    roots, found, ok = _roots(Q, ROOT_WIDTH)
    if not _hyperbolic_verdict(roots, found, ok, Q.d, gap_tol):
        raise NotHyperbolicError(
            f"polynomial with sigma={Q.sigma.tolist()} has {found} distinct real roots, needs {Q.d}")
    return roots


def root_mapping_batch(sigmas, gap_tol: float = GAP_TOL):
    """Vectorized root mapping over rows of ``sigmas``.

    Returns ``(roots, hyperbolic)``; rows that are not hyperbolic hold NaN.
    """
    S = np.atleast_2d(np.asarray(sigmas, dtype=float))
    C = np.ascontiguousarray(np.hstack([np.ones((S.shape[0], 1)), S]))
    roots, found, oks = _sturm.real_roots_batch(C, ROOT_WIDTH)
    d = S.shape[1]
    hyper = oks & (found == d)
    if d > 1:
        with np.errstate(invalid="ignore"):
            hyper &= np.min(np.diff(roots, axis=1), axis=1) > gap_tol
    roots[~hyper] = np.nan
    return roots, hyper


def moment_recurrence_check(mu, Q) -> float:
    """Max over ``k = d..q`` of ``|mu_k + sum_s sigma_s mu_{k-s}|``."""
    v = as_moment_vector(mu).values
    Q = _as_poly(Q)
    d = Q.d
    if v.size < d + 1:
        raise PronyError(f"need at least d+1={d + 1} moments, got {v.size}")
    worst = 0.0
    for k in range(d, v.size):
        r = math.fsum([v[k]] + [Q.sigma[s - 1] * v[k - s] for s in range(1, d + 1)])
        worst = max(worst, abs(r))
    return worst
