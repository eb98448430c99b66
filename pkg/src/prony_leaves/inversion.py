"""Full Prony inversion and empirical error-amplification estimators.

Error sets are sampled in moment coordinates, where the set of signals whose
first ``2d`` moments are within ``eps`` of a reference is exactly a cube:
draw moments from the cube, invert, keep verified solutions. Worst-case
errors are therefore sampling lower bounds; cube corners are always included.
"""

from __future__ import annotations

import itertools
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np
from scipy.spatial.distance import directed_hausdorff
from scipy.stats import linregress

from .core import (ModelTransform, PronyError, RegularityParams, Signal, apply_transform,
                   as_moment_vector, in_error_set, is_regular, moment_array, normalize)
from .leaves import (LeafSpec, SamplingConfig, distance_to_leaf, leaf_projection_high_q,
                     sample_leaf)
from .linalg import hankel_solution_set, vandermonde_amplitudes, vandermonde_amplitudes_batch
from .polynomial import GAP_TOL, root_mapping_batch

log = logging.getLogger(__name__)

RESIDUAL_RTOL = 1e-8
# corners are pulled inside the closed cube by this relative amount, and by at
# least CORNER_ABS_MARGIN * (1 + max|m_k|) in absolute terms, so that rounding in
# the recomputed moments cannot push a solution outside it
CORNER_SHRINK = 1e-6
CORNER_ABS_MARGIN = 1e-13
FULL = "FULL"


class Status(str, Enum):
    UNIQUE = "UNIQUE"
    EMPTY = "EMPTY"
    NON_HYPERBOLIC = "NON_HYPERBOLIC"
    DEGENERATE = "DEGENERATE"


class CenterUnsolvableError(PronyError):
    pass


@dataclass(frozen=True)
class InversionResult:
    status: Status
    signal: Signal | None = None
    residual: float = math.nan
    min_gap: float = math.nan
    sigma: np.ndarray | None = None

    @property
    def ok(self) -> bool:
        return self.status is Status.UNIQUE

    def to_json(self) -> dict:
        out = {"status": self.status.value,
               "residual": None if math.isnan(self.residual) else self.residual,
               "min_gap": None if math.isnan(self.min_gap) else self.min_gap,
               "sigma": None if self.sigma is None else self.sigma.tolist()}
        if self.signal is not None:
            out["signal"] = {"amplitudes": self.signal.amplitudes.tolist(),
                             "nodes": self.signal.nodes.tolist()}
        else:
            out["signal"] = None
        return out


def prony_solve(mu, d: int, gap_tol: float = GAP_TOL) -> InversionResult:
    """Solve the full system ``sum_j a_j x_j^k = mu_k``, ``k < 2d``.

    Hankel solve for the monic polynomial with the nodes as roots, root
    mapping, then a Vandermonde solve for the amplitudes. A solution whose
    moments miss ``mu`` by more than ``1e-8 * (1 + |mu|)`` is reported as
    DEGENERATE.
    """
    mu = as_moment_vector(mu)
    if len(mu) != 2 * d:
        raise PronyError(f"need 2d={2 * d} moments, got {len(mu)}")
    L = hankel_solution_set(mu, d)
    if L.is_empty:
        return InversionResult(Status.EMPTY)
    sigma = L.particular
    if L.dim > 0:
        return InversionResult(Status.DEGENERATE, sigma=sigma)
    roots, hyp = root_mapping_batch(sigma[None, :], gap_tol)
    if not hyp[0]:
        return InversionResult(Status.NON_HYPERBOLIC, sigma=sigma)
    x = roots[0]
    a = vandermonde_amplitudes(x, mu.values[:d])
    F = Signal(a, x)
    resid = float(np.max(np.abs(moment_array(F, 2 * d) - mu.values)))
    gap = float(np.min(np.diff(x))) if d > 1 else math.inf
    if not resid <= RESIDUAL_RTOL * (1.0 + np.linalg.norm(mu.values)):
        return InversionResult(Status.DEGENERATE, None, resid, gap, sigma)
    return InversionResult(Status.UNIQUE, F, resid, gap, sigma)


def cube_corners(n: int) -> np.ndarray:
    """All ``2**n`` sign vectors in ``{-1, +1}^n``, in lexicographic order."""
    return np.array(list(itertools.product((-1.0, 1.0), repeat=n))).reshape(-1, n)


def cube_draws(n: int, budget: int, seed: int) -> np.ndarray:
    """``budget`` uniform points of ``[-1, 1]^n``; a larger budget extends the prefix."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-1.0, 1.0, size=(budget, n))


@dataclass
class ErrorSetSample:
    """Verified members of an error set and bookkeeping about the draws."""

    signals: list[Signal]
    draws: int
    failures: dict

    @property
    def acceptance(self) -> float:
        return len(self.signals) / self.draws if self.draws else math.nan


def _solve_offsets(F: Signal, eps: float, offsets: np.ndarray) -> ErrorSetSample:
    d = F.d
    m = moment_array(F, 2 * d)
    out: list[Signal] = []
    failures = {s.value: 0 for s in Status if s is not Status.UNIQUE}
    failures["OUTSIDE"] = 0
    for u in offsets:
        res = prony_solve(m + eps * u, d)
        if not res.ok:
            failures[res.status.value] += 1
            continue
        if not in_error_set(res.signal, F, eps):
            failures["OUTSIDE"] += 1
            continue
        out.append(res.signal)
    return ErrorSetSample(out, len(offsets), failures)


def _check_center(F: Signal) -> None:
    res = prony_solve(moment_array(F, 2 * F.d), F.d)
    if not res.ok:
        raise CenterUnsolvableError(f"cannot invert the exact moments of {F} ({res.status.value})")


def sample_error_set(F: Signal, eps: float, budget: int, seed: int,
                     corners: bool = False) -> ErrorSetSample:
    """Draw moments uniformly from the ``eps``-cube around ``m(F)`` and invert.

    Only UNIQUE solutions that re-verify ``in_error_set(F', F, eps)`` are
    kept. With ``corners=True`` the (slightly shrunk) cube corners are added
    before the random draws.

    Raises:
        CenterUnsolvableError: if the exact moments of ``F`` cannot be inverted.
    """
    if eps < 0:
        raise PronyError("eps must be non-negative")
    _check_center(F)
    n = 2 * F.d
    offs = [cube_draws(n, budget, seed)]
    if corners:
        scale = 1.0 + float(np.max(np.abs(moment_array(F, n))))
        shrink = min(0.5, max(CORNER_SHRINK, CORNER_ABS_MARGIN * scale / eps)) if eps > 0 else 0.0
        offs.insert(0, (1.0 - shrink) * cube_corners(n))
    return _solve_offsets(F, eps, np.vstack(offs))


class WorstCaseErrors(NamedTuple):
    rho: float
    rho_A: float
    rho_X: float


@dataclass
class WorstCaseReport:
    errors: WorstCaseErrors
    accepted: int
    draws: int
    failures: dict

    @property
    def failure_count(self) -> int:
        return self.draws - self.accepted

    @property
    def solver_failures(self) -> int:
        """Draws the solver could not invert (verification rejects excluded)."""
        return sum(v for k, v in self.failures.items() if k != "OUTSIDE")


def worst_case_report(F: Signal, eps: float, budget: int, seed: int) -> WorstCaseReport:
    """Empirical worst-case errors over cube corners plus ``budget`` random draws."""
    if eps == 0:
        _check_center(F)
        return WorstCaseReport(WorstCaseErrors(0.0, 0.0, 0.0), 1, 1, {})
    sample = sample_error_set(F, eps, budget, seed, corners=True)
    rho = rho_A = rho_X = 0.0
    for Fp in sample.signals:
        dA = np.linalg.norm(Fp.amplitudes - F.amplitudes)
        dX = np.linalg.norm(Fp.nodes - F.nodes)
        rho = max(rho, math.hypot(dA, dX))
        rho_A = max(rho_A, dA)
        rho_X = max(rho_X, dX)
    return WorstCaseReport(WorstCaseErrors(rho, rho_A, rho_X), len(sample.signals),
                           sample.draws, sample.failures)


def worst_case_errors(F: Signal, eps: float, budget: int, seed: int) -> WorstCaseErrors:
    """``(rho, rho_A, rho_X)``: lower bounds on the worst-case reconstruction errors."""
    return worst_case_report(F, eps, budget, seed).errors


def hausdorff_distance(A: np.ndarray, B: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two finite point clouds."""
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    if len(A) == 0 and len(B) == 0:
        return 0.0
    if len(A) == 0 or len(B) == 0:
        return math.inf
    return max(directed_hausdorff(A, B)[0], directed_hausdorff(B, A)[0])


@dataclass
class LeafAtlas:
    """Paired parametrization of a reference leaf and its perturbations.

    The reference leaf ``S_q(G)`` is sampled on a fixed coordinate grid. A
    perturbed leaf is sampled at the same coordinates (for ``q >= d``, by
    projecting the reference Hankel-set points onto the perturbed set), so
    corresponding points differ only by the perturbation of the leaf.
    """

    G: Signal
    q: int
    radius: float
    cloud_size: int = 512
    box: float | None = None

    def __post_init__(self):
        d, q = self.G.d, self.q
        self.spec = LeafSpec(moment_array(self.G, q + 1), d)
        box = self.box if self.box is not None else 4.0 * self.radius
        if q >= d:
            proj = leaf_projection_high_q(self.spec)
            if proj.is_empty:
                raise PronyError("reference leaf is empty")
            dim = proj.dim
            center = proj.solution_set.coordinates(np.asarray(_vieta(self.G.nodes)))
            per_axis = max(2, int(round(self.cloud_size ** (1.0 / dim)))) if dim else 1
            T = SamplingConfig(-box, box, per_axis).points(dim, center)
            self._sigmas = proj.solution_set.points(T)
        else:
            dim = 2 * d - q - 1
            per_axis = max(2, int(round(self.cloud_size ** (1.0 / dim))))
            center = np.concatenate([self.G.nodes, self.G.amplitudes[q + 1:]])
            self._coords = SamplingConfig(-box, box, per_axis).points(dim, center)
        self.reference = self.points(self.spec.mu.values)

    def points(self, mu) -> np.ndarray:
        """Leaf points ``(A, X)`` for moments ``mu`` at the atlas coordinates (NaN where undefined)."""
        d, q = self.G.d, self.q
        mu = np.asarray(mu, dtype=float)
        if q >= d:
            L = hankel_solution_set(mu, d)
            if L.is_empty:
                return np.full((len(self._sigmas), 2 * d), np.nan)
            sig = np.array([L.project(s) for s in self._sigmas]) if L.dim else \
                np.tile(L.particular, (len(self._sigmas), 1))
            X, hyp = root_mapping_batch(sig)
            A = np.full_like(X, np.nan)
            if hyp.any():
                A[hyp] = vandermonde_amplitudes_batch(X[hyp], np.tile(mu[:d], (int(hyp.sum()), 1)))
            return np.hstack([A, X])
        C = self._coords
        X = C[:, :d]
        free = C[:, d:]
        ok = np.all(np.diff(X, axis=1) > 0, axis=1) if d > 1 else np.ones(len(X), bool)
        rhs = np.empty((len(C), q + 1))
        for k in range(q + 1):
            rhs[:, k] = mu[k] - np.sum(free * X[:, q + 1:] ** k, axis=1)
        head = np.full((len(C), q + 1), np.nan)
        if ok.any():
            head[ok] = vandermonde_amplitudes_batch(X[ok, :q + 1], rhs[ok])
        A = np.hstack([head, free])
        A[~ok] = np.nan
        return np.hstack([A, X])

    def in_ball(self, P: np.ndarray) -> np.ndarray:
        g = self.G.as_vector()
        with np.errstate(invalid="ignore"):
            return np.linalg.norm(P - g[None, :], axis=1) <= self.radius

    def distance(self, mu) -> float:
        """Hausdorff distance between the ball-restricted reference and perturbed leaves.

        Each ball-restricted cloud is compared against the full other cloud,
        so points near the ball boundary do not lose their partners.
        """
        P = self.points(mu)
        R = self.reference
        okR = np.all(np.isfinite(R), axis=1)
        okP = np.all(np.isfinite(P), axis=1)
        inR = okR & self.in_ball(R)
        inP = okP & self.in_ball(P)
        if not inR.any() and not inP.any():
            return 0.0
        if not okP.any() or not okR.any():
            return math.inf
        d1 = directed_hausdorff(R[inR], P[okP])[0] if inR.any() else 0.0
        d2 = directed_hausdorff(P[inP], R[okR])[0] if inP.any() else 0.0
        return max(d1, d2)


def _vieta(x):
    from .polynomial import vieta_map
    return vieta_map(x).sigma


def leaf_reconstruction_error(F: Signal, q: int, eps: float, radius: float = 0.5,
                              budget: int = 64, seed: int = 0, cloud_size: int = 512,
                              box: float | None = None) -> float:
    """Empirical ``max_{G'} d_H(S_q(G) & B_R(G), S_q(G') & B_R(G))`` in model space.

    ``G'`` ranges over model images of verified error-set samples (cube
    corners plus ``budget`` random draws). Leaves are compared on a shared
    coordinate grid of about ``cloud_size`` points.
    """
    if eps == 0:
        return 0.0
    G, T = normalize(F)
    atlas = LeafAtlas(G, q, radius, cloud_size, box)
    sample = sample_error_set(F, eps, budget, seed, corners=True)
    seen = {}
    worst = 0.0
    for Fp in sample.signals:
        Gp = apply_transform(T, Fp)
        mu = moment_array(Gp, q + 1)
        key = mu.tobytes()
        if key in seen:
            continue
        dist = atlas.distance(mu)
        seen[key] = dist
        if math.isinf(dist):
            log.warning("degenerate perturbed leaf for q=%d", q)
            continue
        worst = max(worst, dist)
    return worst


@dataclass
class ErrorSweepRecord:
    h: float
    eps: float
    rho: float
    rho_A: float
    rho_X: float
    rho_Sq: dict[int, float]
    sample_count: int
    failures: int
    eps_outer: float
    eps_inner: float
    leaf_distance: float = math.nan
    section_deviation: float = math.nan
    solver_failures: int = 0


@dataclass
class Slope:
    slope: float
    stderr: float
    intercept: float


@dataclass
class SweepResult:
    d: int
    records: list[ErrorSweepRecord]
    slopes: dict[str, Slope] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def fit_loglog(h: Sequence[float], values: Sequence[float]) -> Slope:
    """Least-squares slope of ``log(values)`` against ``log(h)``."""
    h = np.asarray(h, dtype=float)
    v = np.asarray(values, dtype=float)
    ok = np.isfinite(v) & (v > 0)
    if ok.sum() < 2:
        return Slope(math.nan, math.nan, math.nan)
    if ok.sum() == 2:
        x, y = np.log(h[ok]), np.log(v[ok])
        s = (y[1] - y[0]) / (x[1] - x[0])
        return Slope(float(s), 0.0, float(y[0] - s * x[0]))
    fit = linregress(np.log(h[ok]), np.log(v[ok]))
    return Slope(float(fit.slope), float(fit.stderr), float(fit.intercept))


def task_seed(seed: int, index: int) -> int:
    """Independent per-task seed derived from the run seed and a task index."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("PRONY_THREADS", "1")))
    except ValueError:
        return 1


def leaf_convergence(G: Signal, q: int, h: float, eps: float, kappa: float = 0.0,
                     budget: int = 256, seed: int = 0, radius: float = 0.5,
                     cloud_size: int = 512):
    """Distances from transported error-set samples to the leaf ``S_q(G)``.

    Returns ``(max_distance, max_section_deviation, samples)`` where the
    distance maximum runs over samples inside the ball ``B_R(G)`` and the
    deviation is ``max |m_{q+1}(G') - m_{q+1}(G)|`` over all samples.
    """
    T = ModelTransform(kappa, h)
    F = apply_transform(T, G, "inverse")
    sample = sample_error_set(F, eps, budget, seed, corners=True)
    spec = LeafSpec(moment_array(G, q + 1), G.d)
    box = 4.0 * radius
    if q >= G.d:
        proj = leaf_projection_high_q(spec)
        center = proj.solution_set.coordinates(_vieta(G.nodes))
        per_axis = max(2, int(round(cloud_size ** (1.0 / max(proj.dim, 1)))))
        cloud = proj.sample(SamplingConfig(-box, box, per_axis), center=center)
    else:
        per_axis = max(2, int(round(cloud_size ** (1.0 / (2 * G.d - q - 1)))))
        cloud = sample_leaf(spec, SamplingConfig(-1 - box, 1 + box, per_axis),
                            SamplingConfig(-box, box, per_axis))
    ref_next = moment_array(G, q + 2)[q + 1]
    g = G.as_vector()
    transported = [apply_transform(T, Fp) for Fp in sample.signals]
    dev = 0.0
    worst = 0.0
    for Gp in transported:
        dev = max(dev, abs(moment_array(Gp, q + 2)[q + 1] - ref_next))
        if np.linalg.norm(Gp.as_vector() - g) <= radius:
            worst = max(worst, distance_to_leaf(Gp, spec, cloud))
    return worst, dev, transported


def scaling_sweep(G_model: Signal, q_or_full, h_values: Sequence[float],
                  eps_rule: tuple[float, float], budget: int, seed: int,
                  kappa: float = 0.0, regularity: RegularityParams | None = None,
                  radius: float = 0.5, leaf_budget: int = 64, cloud_size: int = 512,
                  threads: int | None = None) -> SweepResult:
    """Error amplification against the cluster size ``h`` at a fixed model signal.

    For each ``h`` the signal ``F`` with model ``G_model``, spread ``h`` and
    center ``kappa`` is probed with ``eps = C * h**exponent``. ``q_or_full``
    is ``FULL`` for the parameter-space errors only, an integer ``q`` to add
    the leaf reconstruction error and the distance of transported samples to
    ``S_q(G)``, or a list of such integers.
    """
    d = G_model.d
    if regularity is not None and not is_regular(G_model, regularity):
        raise PronyError("model signal is not regular for the given parameters")
    if q_or_full == FULL or q_or_full is None:
        qs: list[int] = []
    elif isinstance(q_or_full, (list, tuple)):
        qs = [int(q) for q in q_or_full]
    else:
        qs = [int(q_or_full)]
    C, expo = eps_rule
    distortion = (1.0 + abs(kappa)) ** (2 * d - 1)

    def run(index: int, h: float) -> ErrorSweepRecord:
        s = task_seed(seed, index)
        eps = C * h ** expo
        F = apply_transform(ModelTransform(kappa, h), G_model, "inverse")
        rep = worst_case_report(F, eps, budget, s)
        rho_S = {q: leaf_reconstruction_error(F, q, eps, radius, leaf_budget, s, cloud_size)
                 for q in qs}
        rec = ErrorSweepRecord(h, eps, *rep.errors, rho_S, rep.draws, rep.failure_count,
                               distortion * eps, eps / distortion,
                               solver_failures=rep.solver_failures)
        if len(qs) == 1:
            rec.leaf_distance, rec.section_deviation, _ = leaf_convergence(
                G_model, qs[0], h, eps, kappa, leaf_budget, s, radius, cloud_size)
        return rec

    n_threads = threads if threads is not None else thread_count()
    jobs = list(enumerate(h_values))
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            records = list(pool.map(lambda job: run(*job), jobs))
    else:
        records = [run(i, h) for i, h in jobs]

    result = SweepResult(d, records)
    for r in records:
        if r.solver_failures > 0.5 * r.sample_count:
            result.warnings.append(
                f"h={r.h:g}: eps={r.eps:.3g} above the solvability threshold "
                f"({r.solver_failures}/{r.sample_count} draws not invertible)")
    hs = [r.h for r in records]
    for name in ("rho", "rho_A", "rho_X"):
        result.slopes[name] = fit_loglog(hs, [getattr(r, name) for r in records])
    for q in qs:
        result.slopes[f"rho_S{q}"] = fit_loglog(hs, [r.rho_Sq[q] for r in records])
    if len(qs) == 1:
        result.slopes["leaf_distance"] = fit_loglog(hs, [r.leaf_distance for r in records])
    return result
