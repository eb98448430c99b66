from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from prony_leaves.core import (DegenerateSpreadError, DimensionMismatchError, ModelTransform,
                               MomentVector, PronyError, RegularityParams, Signal, apply_transform,
                               in_error_set, in_moment_parallelepiped, is_regular, moment_array,
                               moment_metric, moments, normalize)


def exact_moments(a, x, count):
    """Rational direct-summation oracle."""
    a = [Fraction(v) for v in a]
    x = [Fraction(v) for v in x]
    return [float(sum(aj * xj ** k for aj, xj in zip(a, x))) for k in range(count)]


@st.composite
def signals(draw, min_d=1, max_d=5, span=3.0, min_gap=0.05):
    d = draw(st.integers(min_d, max_d))
    gaps = draw(st.lists(st.floats(min_gap, 1.0), min_size=d, max_size=d))
    x = np.cumsum(gaps) - draw(st.floats(-span, span)) - sum(gaps) / 2
    a = draw(st.lists(st.floats(-5, 5).filter(lambda v: abs(v) > 0.05), min_size=d, max_size=d))
    return Signal(a, x)


class TestSignal:
    def test_rejects_unsorted_nodes(self):
        with pytest.raises(PronyError):
            Signal([1, 1], [1, 0])

    def test_rejects_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            Signal([1, 1], [0])

    def test_immutable(self):
        F = Signal([1.0], [0.0])
        with pytest.raises(ValueError):
            F.nodes[0] = 3.0

    def test_moment_vector_requires_finite(self):
        with pytest.raises(PronyError):
            MomentVector([1.0, np.nan])


@pytest.mark.parametrize("a, x, count, expected", [
    ((0.5, 0.5), (-1, 1), 4, (1, 0, 1, 0)),
    ((2,), (3,), 2, (2, 6)),
    ((1, -1), (0, 2), 3, (0, -2, -4)),
])
def test_moments_examples(a, x, count, expected):
    assert moments(Signal(a, x), count).values.tolist() == list(expected)
    assert exact_moments(a, x, count) == list(expected)


@settings(max_examples=60, deadline=None)
@given(signals(), st.integers(1, 12))
def test_moments_prefix_property(F, n):
    assert np.array_equal(moment_array(F, n), moment_array(F, n + 1)[:n])


@settings(max_examples=40, deadline=None)
@given(signals(max_d=6))
def test_moments_match_rational_oracle(F):
    n = 2 * F.d
    got = moment_array(F, n)
    want = exact_moments(F.amplitudes, F.nodes, n)
    assert np.allclose(got, want, rtol=1e-14, atol=1e-14)


def test_moments_compensated_under_cancellation():
    # huge equal-and-opposite terms cancel exactly; naive summation loses the small part
    F = Signal([1e16, 1.0, -1e16], [1.0, 2.0, 3.0])
    assert moment_array(F, 1)[0] == 1.0
    assert moment_array(F, 2)[1] == exact_moments(F.amplitudes, F.nodes, 2)[1]


@pytest.mark.parametrize("a, x, G_nodes, kappa, h", [
    ((0.5, 0.5), (0.9, 1.1), (-1, 1), 1.0, 0.1),
    ((1, 2, 3), (-1, 0, 1), (-1, 0, 1), 0.0, 1.0),
    ((1, 1), (2, 6), (-1, 1), 4.0, 2.0),
])
def test_normalize_examples(a, x, G_nodes, kappa, h):
    G, T = normalize(Signal(a, x))
    assert T.kappa == pytest.approx(kappa, abs=1e-15)
    assert T.h == pytest.approx(h, abs=1e-15)
    assert np.allclose(G.nodes, G_nodes, atol=1e-14)
    assert np.array_equal(G.amplitudes, np.asarray(a, float))


def test_normalize_rejects_single_node():
    with pytest.raises(DegenerateSpreadError):
        normalize(Signal([1.0], [2.0]))


@settings(max_examples=60, deadline=None)
@given(signals(min_d=2))
def test_normalize_endpoints(F):
    G, _ = normalize(F)
    assert abs(G.nodes[0] + 1) <= 1e-14 and abs(G.nodes[-1] - 1) <= 1e-14


def test_apply_transform_examples():
    F = Signal([1, 2], [0.3, 0.7])
    assert apply_transform(ModelTransform(0, 1), F) == F
    out = apply_transform(ModelTransform(1, 0.1), Signal([1, 1], [-1, 1]), "inverse")
    assert np.allclose(out.nodes, [0.9, 1.1], atol=1e-15)
    T = ModelTransform(2, 0.5)
    single = Signal([3.0], [7.0])
    assert apply_transform(T, apply_transform(T, single), "inverse") == single


def test_model_transform_requires_positive_h():
    with pytest.raises(PronyError):
        ModelTransform(0.0, 0.0)


@settings(max_examples=60, deadline=None)
@given(signals(), st.floats(-5, 5), st.floats(1e-3, 10))
def test_transform_round_trip(F, kappa, h):
    T = ModelTransform(kappa, h)
    back = apply_transform(T, apply_transform(T, F), "inverse")
    assert np.allclose(back.nodes, F.nodes, rtol=1e-12, atol=1e-12 * (1 + abs(kappa)))


@settings(max_examples=60, deadline=None)
@given(signals(max_d=5), st.floats(0.01, 1.0))
def test_model_moment_scaling(F, h):
    G = apply_transform(ModelTransform(0.0, h), F)
    n = 2 * F.d
    scaled = moment_array(F, n) * h ** -np.arange(n)
    mG = moment_array(G, n)
    scale = np.abs(F.amplitudes) @ (np.abs(G.nodes)[:, None] ** np.arange(n))
    assert np.all(np.abs(mG - scaled) <= 1e-10 * scale + 1e-300)


@pytest.mark.parametrize("G, P, expected", [
    (Signal([0.5, 0.5], [-1, 1]), RegularityParams(2, 0.4, 0.6), True),
    (Signal([0.5, 0.5], [-1, 1]), RegularityParams(2, 0.6, 0.9), False),
    (Signal([1, 1, 1], [-1, -0.9, 1]), RegularityParams(0.5, 0.5, 2), False),
])
def test_is_regular_examples(G, P, expected):
    assert is_regular(G, P) is expected


def test_regularity_params_validation():
    with pytest.raises(PronyError):
        RegularityParams(0.1, 1.0, 0.5)
    with pytest.raises(PronyError):
        is_regular(Signal([1, 1, 1], [-1, 0, 1]), RegularityParams(1.5, 0.5, 2))


def test_moment_metric_examples():
    G = Signal([0.5, 0.5], [-1, 1])
    assert moment_metric(G, G) == 0
    assert moment_metric(Signal([1], [0]), Signal([1], [1]), order=1) == 1
    assert moment_metric(G, Signal([0.6, 0.5], [-1, 1]), order=3) == pytest.approx(0.1, abs=1e-15)
    with pytest.raises(DimensionMismatchError):
        moment_metric(G, Signal([1], [0]))


@settings(max_examples=30, deadline=None)
@given(st.lists(signals(min_d=2, max_d=2), min_size=3, max_size=3))
def test_moment_metric_is_metric(trio):
    A, B, C = trio
    assert moment_metric(A, B) == moment_metric(B, A)
    assert moment_metric(A, C) <= moment_metric(A, B) + moment_metric(B, C) + 1e-12


def test_in_error_set_examples():
    F = Signal([0.5, 0.5], [-1, 1])
    assert in_error_set(F, F, 0.0)
    assert not in_error_set(Signal([1], [0.5]), Signal([1], [0]), 0.4)
    assert in_error_set(Signal([0.505, 0.5], [-1, 1]), F, 0.01)


@settings(max_examples=40, deadline=None)
@given(signals(min_d=2, max_d=2), st.floats(0, 0.5), st.floats(0, 1))
def test_in_error_set_monotone(F, eps, extra):
    Fp = Signal(F.amplitudes + 0.01, F.nodes)
    if in_error_set(Fp, F, eps):
        assert in_error_set(Fp, F, eps + extra)


def test_parallelepiped_examples():
    G = Signal([0.5, 0.5], [-1, 1])
    assert in_moment_parallelepiped(G, G, 0.0, 0.3)
    Gp = Signal([0.5, 0.5], [-1, 1.02])
    # m_1 gap equals its bound 0.01 in decimal; the float 1.02 overshoots by an ulp
    gaps = moment_array(Gp, 4) - moment_array(G, 4)
    assert np.allclose(gaps, [0, 0.01, 0.0202, 0.030604], atol=1e-15)
    assert in_moment_parallelepiped(Gp, G, 0.001, 0.1, slack=1e-12)
    assert not in_moment_parallelepiped(Gp, G, 0.0009, 0.1, slack=1e-12)
    with pytest.raises(PronyError):
        in_moment_parallelepiped(G, G, 0.1, 0.0)


@settings(max_examples=40, deadline=None)
@given(signals(min_d=1, max_d=3), signals(min_d=1, max_d=3), st.floats(0, 2))
def test_parallelepiped_h1_is_error_set(F, Fp, eps):
    if F.d != Fp.d:
        return
    assert in_moment_parallelepiped(Fp, F, eps, 1.0) == in_error_set(Fp, F, eps)
