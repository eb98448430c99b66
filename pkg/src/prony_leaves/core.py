"""Signals, moment vectors and the model-space normalization.

A signal is a finite spike train ``F = sum_j a_j delta(x - x_j)`` with strictly
increasing real nodes. Its power moments ``m_k(F) = sum_j a_j x_j**k`` are the
right-hand side of the Prony system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class PronyError(ValueError):
    """Base class for domain errors raised by this package."""


class DimensionMismatchError(PronyError):
    pass


class DegenerateSpreadError(PronyError):
    pass


def _frozen(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise PronyError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Signal:
    """A spike train given by amplitudes and strictly increasing nodes."""

    amplitudes: np.ndarray
    nodes: np.ndarray

    def __post_init__(self):
        a = _frozen(self.amplitudes, "amplitudes")
        x = _frozen(self.nodes, "nodes")
        if a.size != x.size or a.size < 1:
            raise DimensionMismatchError(
                f"need d >= 1 amplitudes and nodes of equal length, got {a.size} and {x.size}")
        if np.any(np.diff(x) <= 0):
            raise PronyError("nodes must be strictly increasing")
        object.__setattr__(self, "amplitudes", a)
        object.__setattr__(self, "nodes", x)

    @property
    def d(self) -> int:
        return self.nodes.size

    def as_vector(self) -> np.ndarray:
        """Point of the parameter space as the concatenation ``(A, X)``."""
        return np.concatenate([self.amplitudes, self.nodes])

    def __eq__(self, other):
        if not isinstance(other, Signal):
            return NotImplemented
        return (np.array_equal(self.amplitudes, other.amplitudes)
                and np.array_equal(self.nodes, other.nodes))

    def __repr__(self):
        return f"Signal(amplitudes={self.amplitudes.tolist()}, nodes={self.nodes.tolist()})"


@dataclass(frozen=True, eq=False)
class MomentVector:
    """Moments ``mu_0 .. mu_q``; the order ``q`` is ``len(values) - 1``."""

    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values, "moment values")
        if v.size < 1:
            raise PronyError("a moment vector needs at least mu_0")
        object.__setattr__(self, "values", v)

    @property
    def q(self) -> int:
        return self.values.size - 1

    def __len__(self):
        return self.values.size

    def __getitem__(self, k):
        return self.values[k]

    def __eq__(self, other):
        if not isinstance(other, MomentVector):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"MomentVector({self.values.tolist()})"


@dataclass(frozen=True)
class ModelTransform:
    """Shift-and-scale map ``x -> (x - kappa) / h`` acting on nodes."""

    kappa: float
    h: float

    def __post_init__(self):
        if not (math.isfinite(self.kappa) and math.isfinite(self.h)):
            raise PronyError("kappa and h must be finite")
        if self.h <= 0:
            raise PronyError(f"h must be positive, got {self.h}")


@dataclass(frozen=True)
class RegularityParams:
    """Minimal node separation ``eta`` and amplitude bounds ``m <= |a_j| <= M``."""

    eta: float
    m: float
    M: float

    def __post_init__(self):
        if not self.eta > 0:
            raise PronyError("eta must be positive")
        if not 0 < self.m < self.M:
            raise PronyError("need 0 < m < M")

    def check_dimension(self, d: int) -> None:
        if d > 1 and self.eta > 2.0 / (d - 1):
            raise PronyError(f"eta={self.eta} exceeds 2/(d-1) for d={d}; no signal can be regular")


def as_moment_vector(mu) -> MomentVector:
    return mu if isinstance(mu, MomentVector) else MomentVector(mu)


def moments(F: Signal, count: int) -> MomentVector:
    """Return ``(m_0(F), ..., m_{count-1}(F))``.

    Powers are accumulated per node and each moment is summed with
    ``math.fsum`` so that cancellation between amplitudes of opposite sign
    stays accurate.
    """
    if count < 1:
        raise PronyError("count must be >= 1")
    a = F.amplitudes.tolist()
    x = F.nodes.tolist()
    terms = list(a)
    out = []
    for _ in range(count):
        out.append(math.fsum(terms))
        terms = [t * xj for t, xj in zip(terms, x)]
    return MomentVector(out)


def moment_array(F: Signal, count: int) -> np.ndarray:
    return moments(F, count).values


def apply_transform(T: ModelTransform, F: Signal, direction: str = "forward") -> Signal:
    """Apply ``T`` (``direction="forward"``) or its inverse to the nodes of ``F``."""
    if direction == "forward":
        nodes = (F.nodes - T.kappa) / T.h
    elif direction == "inverse":
        nodes = T.h * F.nodes + T.kappa
    else:
        raise PronyError(f"direction must be 'forward' or 'inverse', got {direction!r}")
    return Signal(F.amplitudes, nodes)


def normalize(F: Signal) -> tuple[Signal, ModelTransform]:
    """Map ``F`` to its model signal, whose nodes span exactly ``[-1, 1]``."""
    x = F.nodes
    if F.d < 2 or x[-1] == x[0]:
        raise DegenerateSpreadError("normalization needs at least two distinct nodes")
    T = ModelTransform(kappa=0.5 * (x[0] + x[-1]), h=0.5 * (x[-1] - x[0]))
    G = apply_transform(T, F)
    nodes = G.nodes.copy()
    # pin the endpoints; rounding in (x - kappa)/h can miss +-1 by an ulp
    nodes[0], nodes[-1] = -1.0, 1.0
    return Signal(F.amplitudes, nodes), T


def is_regular(G: Signal, P: RegularityParams) -> bool:
    P.check_dimension(G.d)
    if G.d > 1 and np.min(np.diff(G.nodes)) < P.eta:
        return False
    amps = np.abs(G.amplitudes)
    return bool(np.all((amps >= P.m) & (amps <= P.M)))


def _check_same_d(F1: Signal, F2: Signal) -> None:
    if F1.d != F2.d:
        raise DimensionMismatchError(f"signals have different sizes {F1.d} and {F2.d}")


def moment_metric(G1: Signal, G2: Signal, order: int | None = None) -> float:
    """Max-norm distance between the moment vectors ``m_0..m_order``.

    ``order`` defaults to ``2d - 1``.
    """
    _check_same_d(G1, G2)
    if order is None:
        order = 2 * G1.d - 1
    m1 = moment_array(G1, order + 1)
    m2 = moment_array(G2, order + 1)
    return float(np.max(np.abs(m2 - m1)))


def in_error_set(Fprime: Signal, F: Signal, eps: float, slack: float = 0.0) -> bool:
    """True iff every moment ``k < 2d`` of ``Fprime`` is within ``eps`` of ``F``'s.

    Bounds are inclusive; ``slack`` widens them for robust comparisons.
    """
    _check_same_d(Fprime, F)
    n = 2 * F.d
    gaps = np.abs(moment_array(Fprime, n) - moment_array(F, n))
    return bool(np.all(gaps <= eps + slack))


def parallelepiped_bounds(eps: float, h: float, count: int) -> np.ndarray:
    """Per-moment half-widths ``eps * h**-k`` for ``k < count``."""
    if h <= 0:
        raise PronyError(f"h must be positive, got {h}")
    return eps * h ** -np.arange(count, dtype=float)


def in_moment_parallelepiped(Gprime: Signal, G: Signal, eps: float, h: float,
                             slack: float = 0.0) -> bool:
    """True iff ``|m_k(Gprime) - m_k(G)| <= eps * h**-k`` for ``k < 2d`` (inclusive)."""
    _check_same_d(Gprime, G)
    n = 2 * G.d
    bounds = parallelepiped_bounds(eps, h, n)
    gaps = np.abs(moment_array(Gprime, n) - moment_array(G, n))
    return bool(np.all(gaps <= bounds + slack))


def moment_table(A: np.ndarray, X: np.ndarray, count: int) -> np.ndarray:
    """Moments ``m_0..m_{count-1}`` for each row of ``(n, d)`` arrays ``A``, ``X``.

    Plain (uncompensated) summation; used for residual diagnostics on clouds.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.empty((A.shape[0], count))
    terms = A.copy()
    for k in range(count):
        out[:, k] = terms.sum(axis=1)
        terms = terms * X
    return out
