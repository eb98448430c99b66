"""Sampling the Prony leaves ``S_q(mu)`` and their node-space projections.

For ``q <= d - 1`` a leaf is parametrized by all nodes plus the amplitudes
``a_{q+2}..a_d``; the leading amplitudes follow from a Vandermonde solve.
For ``q >= d`` the node projection is the image under the root mapping of the
hyperbolic part of the Hankel solution set ``L_q(mu)``, and amplitudes are
recovered from the first ``d`` moments.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
import scipy.optimize
from scipy.stats import qmc

from .core import (PronyError, Signal, MomentVector, as_moment_vector, moment_array,
                   moment_table)
from .linalg import (AffineSolutionSet, GAP_TOL as VANDERMONDE_GAP_TOL, hankel_solution_set,
                     leaf_amplitudes_low_q, vandermonde_amplitudes, vandermonde_amplitudes_batch)
from .polynomial import GAP_TOL, root_mapping_batch, vieta_map

RESIDUAL_RTOL = 1e-8
NEAR_BOUNDARY_FACTOR = 100.0
AUDIT_RATE = 0.01


class OffLeafError(PronyError):
    """Nodes do not lie on the node projection of the requested leaf."""


@dataclass(frozen=True)
class LeafSpec:
    mu: MomentVector
    d: int

    def __post_init__(self):
        mu = as_moment_vector(self.mu)
        object.__setattr__(self, "mu", mu)
        if self.d < 1:
            raise PronyError("d must be >= 1")
        if not 0 <= mu.q <= 2 * self.d - 1:
            raise PronyError(f"q={mu.q} outside 0..{2 * self.d - 1} for d={self.d}")

    @property
    def q(self) -> int:
        return self.mu.q

    @property
    def residual_tol(self) -> float:
        return RESIDUAL_RTOL * (1.0 + float(np.linalg.norm(self.mu.values)))


@dataclass(frozen=True)
class SamplingConfig:
    """Box ``[lo, hi]`` per parameter axis, filled by a grid or a Halton sequence.

    ``num`` is the number of points per axis for ``kind="grid"`` and the total
    number of points for ``kind="halton"``.
    """

    lo: float = -1.0
    hi: float = 1.0
    num: int = 21
    kind: str = "grid"
    seed: int = 0

    def points(self, dim: int, center=None) -> np.ndarray:
        if dim == 0:
            return np.zeros((1, 0))
        if self.kind == "grid":
            axis = np.linspace(self.lo, self.hi, self.num)
            P = np.array(list(itertools.product(axis, repeat=dim)), dtype=float).reshape(-1, dim)
        elif self.kind == "halton":
            unit = qmc.Halton(d=dim, scramble=True, seed=self.seed).random(self.num)
            P = self.lo + (self.hi - self.lo) * unit
        else:
            raise PronyError(f"unknown sampling kind {self.kind!r}")
        if center is not None:
            P = P + np.asarray(center, dtype=float)[None, :]
        return P


@dataclass(eq=False)
class LeafPointCloud:
    """Sampled leaf points with per-point diagnostics.

    ``params`` are the sampler coordinates (Hankel-set coordinates for
    ``q >= d``, free amplitudes for ``q < d``). Rows are sorted by
    ``(params, nodes)``.
    """

    q: int
    d: int
    mu: MomentVector
    params: np.ndarray
    nodes: np.ndarray
    amplitudes: np.ndarray
    residuals: np.ndarray
    near_boundary: np.ndarray
    section_bound: float | None = None
    status: str = "OK"
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return self.nodes.shape[0]

    @property
    def points(self) -> list[Signal]:
        return [Signal(a, x) for a, x in zip(self.amplitudes, self.nodes)]

    def vectors(self) -> np.ndarray:
        """Rows ``(A, X)`` as points of the parameter space."""
        return np.hstack([self.amplitudes, self.nodes])

    def subset(self, mask) -> "LeafPointCloud":
        mask = np.asarray(mask, dtype=bool)
        return replace(self, params=self.params[mask], nodes=self.nodes[mask],
                       amplitudes=self.amplitudes[mask], residuals=self.residuals[mask],
                       near_boundary=self.near_boundary[mask], stats=dict(self.stats))


def _sorted_cloud(spec: LeafSpec, params, nodes, amps, gap_tol, stats, status="OK"):
    d = spec.d
    params = np.asarray(params, dtype=float)
    if params.ndim != 2:
        params = params.reshape(len(nodes), -1)
    nodes = np.asarray(nodes, dtype=float).reshape(-1, d)
    amps = np.asarray(amps, dtype=float).reshape(-1, d)
    if len(nodes):
        m = moment_table(amps, nodes, spec.q + 1)
        residuals = np.max(np.abs(m - spec.mu.values[None, :]), axis=1)
    else:
        residuals = np.zeros(0)
    keep = residuals <= spec.residual_tol
    stats["dropped_residual"] = stats.get("dropped_residual", 0) + int(np.sum(~keep))
    params, nodes, amps, residuals = params[keep], nodes[keep], amps[keep], residuals[keep]
    if d > 1 and len(nodes):
        near = np.min(np.diff(nodes, axis=1), axis=1) < NEAR_BOUNDARY_FACTOR * gap_tol
    else:
        near = np.zeros(len(nodes), dtype=bool)
    order = np.lexsort(np.hstack([params, nodes]).T[::-1]) if len(nodes) else np.zeros(0, int)
    return LeafPointCloud(spec.q, d, spec.mu, params[order], nodes[order], amps[order],
                          residuals[order], near[order], None, status, stats)


def sample_leaf_low_q(spec: LeafSpec, node_grid: SamplingConfig,
                      free_amp_grid: SamplingConfig | None = None,
                      gap_tol: float = GAP_TOL) -> LeafPointCloud:
    """Sample ``S_q(mu)`` for ``q <= d - 1`` over a node grid and free-amplitude grid.

    Every admissible node tuple (strictly increasing, gaps >= ``gap_tol``)
    yields one leaf point per free-amplitude tuple; other grid tuples are
    skipped and counted in ``stats["skipped_nodes"]``.
    """
    d, q = spec.d, spec.q
    if q > d - 1:
        raise PronyError("sample_leaf_low_q needs q <= d - 1")
    k = d - q - 1
    X = node_grid.points(d)
    if d > 1:
        ok = np.all(np.diff(X, axis=1) >= max(gap_tol, VANDERMONDE_GAP_TOL), axis=1)
    else:
        ok = np.ones(len(X), dtype=bool)
    stats = {"skipped_nodes": int(np.sum(~ok))}
    X = X[ok]
    free = (free_amp_grid or SamplingConfig()).points(k)
    nx, nf = len(X), len(free)
    Xr = np.repeat(X, nf, axis=0)
    Fr = np.tile(free, (nx, 1))
    # right-hand side mu_k - sum_{s > q+1} a_s x_s^k for the leading Vandermonde block
    tail = Xr[:, q + 1:]
    rhs = np.empty((len(Xr), q + 1))
    for kk in range(q + 1):
        rhs[:, kk] = spec.mu.values[kk] - np.sum(Fr * tail ** kk, axis=1)
    head = vandermonde_amplitudes_batch(Xr[:, :q + 1], rhs) if len(Xr) else np.zeros((0, q + 1))
    amps = np.hstack([head, Fr])
    return _sorted_cloud(spec, Fr, Xr, amps, gap_tol, stats)


def complete_leaf_point(X, spec: LeafSpec, tol: float | None = None) -> Signal:
    """Attach amplitudes to nodes ``X`` on ``S^X_q(mu)`` (``q >= d``).

    The amplitudes solve the first ``d`` moment equations; the remaining ones
    hold automatically when ``X`` is on the leaf projection.

    Raises:
        OffLeafError: if the completed signal misses any of the ``q + 1``
            equations by more than ``tol`` (default ``1e-8 * (1 + |mu|)``).
    """
    x = np.asarray(X, dtype=float).reshape(-1)
    if spec.q < spec.d:
        raise PronyError("complete_leaf_point needs q >= d")
    if x.size != spec.d:
        raise PronyError(f"expected {spec.d} nodes, got {x.size}")
    a = vandermonde_amplitudes(x, spec.mu.values[:spec.d])
    F = Signal(a, x)
    resid = leaf_residual(F, spec.mu)
    if resid > (spec.residual_tol if tol is None else tol):
        raise OffLeafError(f"nodes {x.tolist()} are off the leaf (residual {resid:.3g})")
    return F


def leaf_residual(F: Signal, mu) -> float:
    """``max_k |m_k(F) - mu_k|`` over the moments present in ``mu``."""
    v = as_moment_vector(mu).values
    return float(np.max(np.abs(moment_array(F, v.size) - v)))


@dataclass
class LeafProjection:
    """Node projection of a leaf with ``q >= d`` and its sampler."""

    spec: LeafSpec
    solution_set: AffineSolutionSet
    gap_tol: float = GAP_TOL

    @property
    def is_empty(self) -> bool:
        return self.solution_set.is_empty

    @property
    def dim(self) -> int:
        return self.solution_set.dim

    def nodes_at(self, T):
        """Root-map the Hankel-set points with coordinates ``T``.

        Returns ``(sigmas, nodes, hyperbolic)``; non-hyperbolic rows are NaN.
        """
        sig = self.solution_set.points(np.asarray(T, dtype=float).reshape(-1, self.dim))
        nodes, hyp = root_mapping_batch(sig, self.gap_tol)
        return sig, nodes, hyp

    def complete(self, params, sigmas, stats=None) -> LeafPointCloud:
        """Root-map ``sigmas`` and attach amplitudes; ``params`` label the rows."""
        stats = {} if stats is None else stats
        sigmas = np.atleast_2d(np.asarray(sigmas, dtype=float))
        params = np.asarray(params, dtype=float).reshape(len(sigmas), -1)
        nodes, hyp = root_mapping_batch(sigmas, self.gap_tol)
        stats["rejected_nonhyperbolic"] = stats.get("rejected_nonhyperbolic", 0) + int(np.sum(~hyp))
        X = nodes[hyp]
        rhs = np.tile(self.spec.mu.values[:self.spec.d], (len(X), 1))
        amps = vandermonde_amplitudes_batch(X, rhs) if len(X) else np.zeros((0, self.spec.d))
        return _sorted_cloud(self.spec, params[hyp], X, amps, self.gap_tol, stats)

    def sample(self, config: SamplingConfig | None = None, center=None,
               audit_seed: int = 0) -> LeafPointCloud:
        """Sample coordinates ``t`` in the box, keep hyperbolic ``sigma(t)``.

        A random 1% of rejected ``sigma`` values are re-checked with
        ``numpy.roots`` (``stats["audit_checked"]``/``["audit_mismatch"]``).
        """
        stats: dict = {}
        if self.is_empty:
            d = self.spec.d
            return LeafPointCloud(self.spec.q, d, self.spec.mu, np.zeros((0, 0)), np.zeros((0, d)),
                                  np.zeros((0, d)), np.zeros(0), np.zeros(0, bool), None,
                                  "EMPTY", stats)
        config = config or SamplingConfig()
        T = config.points(self.dim, center)
        sig = self.solution_set.points(T)
        cloud = self.complete(T, sig, stats)
        _, hyp = root_mapping_batch(sig, self.gap_tol)
        rejected = sig[~hyp]
        rng = np.random.default_rng(audit_seed)
        picked = rejected[rng.random(len(rejected)) < AUDIT_RATE]
        mismatch = sum(_numpy_says_hyperbolic(s, self.gap_tol) for s in picked)
        stats["audit_checked"] = len(picked)
        stats["audit_mismatch"] = int(mismatch)
        cloud.stats = stats
        return cloud


def _numpy_says_hyperbolic(sigma, gap_tol) -> bool:
    r = np.roots(np.concatenate([[1.0], sigma]))
    if np.max(np.abs(r.imag)) > 1e-7 * (1 + np.max(np.abs(r))):
        return False
    r = np.sort(r.real)
    return bool(r.size < 2 or np.min(np.diff(r)) > max(gap_tol, 1e-7))


def leaf_projection_high_q(spec: LeafSpec, gap_tol: float = GAP_TOL) -> LeafProjection:
    """``L_q(mu)`` together with a sampler of ``S^X_q(mu)`` (requires ``q >= d``)."""
    if spec.q < spec.d:
        raise PronyError("leaf_projection_high_q needs q >= d")
    return LeafProjection(spec, hankel_solution_set(spec.mu, spec.d), gap_tol)


def sample_leaf(spec: LeafSpec, config: SamplingConfig | None = None,
                free_amp_grid: SamplingConfig | None = None,
                gap_tol: float = GAP_TOL) -> LeafPointCloud:
    """Dispatch to the sampler for the regime of ``spec.q``."""
    if spec.q <= spec.d - 1:
        return sample_leaf_low_q(spec, config or SamplingConfig(), free_amp_grid, gap_tol)
    return leaf_projection_high_q(spec, gap_tol).sample(config)


class CurveKind(str, Enum):
    NONSINGULAR_HYPERBOLA = "NONSINGULAR_HYPERBOLA"
    DEGENERATE_LINES = "DEGENERATE_LINES"
    STRAIGHT_LINE = "STRAIGHT_LINE"
    EMPTY = "EMPTY"
    WHOLE_PLANE = "WHOLE_PLANE"


@dataclass(frozen=True)
class TwoNodeCurveClass:
    """Shape of ``S^X_2(mu)`` for two nodes.

    ``params`` holds the hyperbola center or the crossing point ``(c, c)``,
    the line's node sum ``(s,)``, or nothing. ``crosses_diagonal`` is set for
    hyperbolas: True when the curve meets ``x_1 = x_2``.
    """

    kind: CurveKind
    params: tuple = ()
    discriminant: float = float("nan")
    crosses_diagonal: bool | None = None

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "params": list(self.params),
                "discriminant": self.discriminant, "crosses_diagonal": self.crosses_diagonal}


def classify_two_node_curve(mu, zero_tol: float = 1e-12) -> TwoNodeCurveClass:
    """Classify the curve ``mu_0 x_1 x_2 - mu_1 (x_1 + x_2) + mu_2 = 0``."""
    v = as_moment_vector(mu).values
    if v.size != 3:
        raise PronyError(f"two-node classification needs (mu_0, mu_1, mu_2), got {v.size} values")
    m0, m1, m2 = (float(t) for t in v)
    disc = m0 * m2 - m1 * m1
    if abs(m0) > zero_tol:
        c = m1 / m0
        if abs(disc) > zero_tol:
            return TwoNodeCurveClass(CurveKind.NONSINGULAR_HYPERBOLA, (c, c), disc, disc < 0)
        return TwoNodeCurveClass(CurveKind.DEGENERATE_LINES, (c, c), disc, True)
    if abs(m1) > zero_tol:
        return TwoNodeCurveClass(CurveKind.STRAIGHT_LINE, (m2 / m1,), disc)
    if abs(m2) > zero_tol:
        return TwoNodeCurveClass(CurveKind.EMPTY, (), disc)
    return TwoNodeCurveClass(CurveKind.WHOLE_PLANE, (), disc)


def leaf_section_filter(cloud: LeafPointCloud, reference: Signal, c: float) -> LeafPointCloud:
    """Keep points whose next moment ``m_{q+1}`` is within ``c`` of the reference's."""
    if not c > 0:
        raise PronyError("section bound must be positive")
    k = cloud.q + 1
    ref = moment_array(reference, k + 1)[k]
    if len(cloud):
        nxt = moment_table(cloud.amplitudes, cloud.nodes, k + 1)[:, k]
        mask = np.abs(nxt - ref) <= c
    else:
        mask = np.zeros(0, dtype=bool)
    out = cloud.subset(mask)
    out.section_bound = float(c)
    return out


def distance_to_leaf(point: Signal, spec: LeafSpec, cloud: LeafPointCloud | None = None,
                     config: SamplingConfig | None = None) -> float:
    """Euclidean distance in ``(A, X)`` from ``point`` to the leaf ``S_q(mu)``.

    Starts from the nearest cloud point and refines by local least squares
    over the leaf coordinates, so the result is not limited by cloud spacing.
    """
    if cloud is None:
        cloud = sample_leaf(spec, config)
    p = point.as_vector()
    if len(cloud) == 0:
        return math.inf
    V = cloud.vectors()
    i0 = int(np.argmin(np.linalg.norm(V - p[None, :], axis=1)))
    best = float(np.linalg.norm(V[i0] - p))
    d, q = spec.d, spec.q
    if q >= d:
        proj = leaf_projection_high_q(spec)
        if proj.dim == 0:
            return best
        big = 10.0 * (1.0 + best)

        def resid(t):
            sig = proj.solution_set.point(t)
            nodes, hyp = root_mapping_batch(sig[None, :], proj.gap_tol)
            if not hyp[0]:
                return np.full(2 * d, big)
            a = vandermonde_amplitudes(nodes[0], spec.mu.values[:d])
            return np.concatenate([a, nodes[0]]) - p

        t0 = cloud.params[i0]
    else:
        def resid(z):
            x = z[:d]
            if d > 1 and np.any(np.diff(x) <= 0):
                return np.full(2 * d, 10.0 * (1.0 + best))
            a = leaf_amplitudes_low_q(spec.mu, x, z[d:])
            return np.concatenate([a, x]) - p

        t0 = np.concatenate([cloud.nodes[i0], cloud.params[i0]])
    sol = scipy.optimize.least_squares(resid, t0, xtol=1e-15, ftol=1e-15, gtol=1e-15, method="lm")
    return min(best, float(np.linalg.norm(resid(sol.x))))
