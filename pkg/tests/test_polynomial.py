import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from prony_leaves.core import PronyError
from prony_leaves.polynomial import (MonicRealPolynomial, NotHyperbolicError, is_hyperbolic,
                                     moment_recurrence_check, root_mapping, root_mapping_batch,
                                     sturm_count, sturm_sequence, vieta_map, vieta_map_batch)


def gap_nodes(rng, d, lo=1e-3, hi=1.0):
    x = np.cumsum(rng.uniform(lo, hi, d))
    return x - x.mean()


@pytest.mark.parametrize("X, sigma", [
    ((-1, 1), (0, -1)),
    ((0,), (0,)),
    ((1, 2, 3), (-6, 11, -6)),
])
def test_vieta_examples(X, sigma):
    assert vieta_map(X).sigma.tolist() == list(sigma)


def test_vieta_requires_sorted():
    with pytest.raises(PronyError):
        vieta_map([1, 0])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_vieta_matches_np_poly(d, seed):
    x = gap_nodes(np.random.default_rng(seed), d)
    assert np.allclose(vieta_map(x).coefficients, np.poly(x), rtol=1e-12, atol=1e-12)


def test_vieta_batch_agrees():
    rng = np.random.default_rng(1)
    X = np.array([gap_nodes(rng, 5) for _ in range(10)])
    assert np.allclose(vieta_map_batch(X), [vieta_map(x).sigma for x in X], rtol=0, atol=1e-15)


@pytest.mark.parametrize("sigma, gap_tol, expected", [
    ((0, -1), 1e-10, True),
    ((0, 1), 1e-10, False),
    ((0, 0), 0.0, False),
    ((-6, 11, -6), 1e-10, True),
    ((0, 0, 1), 1e-10, False),
])
def test_is_hyperbolic_examples(sigma, gap_tol, expected):
    assert is_hyperbolic(MonicRealPolynomial(sigma), gap_tol) is expected


@pytest.mark.parametrize("sigma, roots", [
    ((0, -1), (-1, 1)),
    ((-6, 11, -6), (1, 2, 3)),
    ((-5,), (5,)),
])
def test_root_mapping_examples(sigma, roots):
    assert np.allclose(root_mapping(MonicRealPolynomial(sigma)), roots, atol=1e-13)


def test_root_mapping_rejects_non_hyperbolic():
    with pytest.raises(NotHyperbolicError):
        root_mapping(MonicRealPolynomial((0, 1)))
    with pytest.raises(NotHyperbolicError):
        root_mapping(MonicRealPolynomial((-2, 1)))  # double root at 1


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_round_trip(d, seed):
    x = gap_nodes(np.random.default_rng(seed), d)
    Q = vieta_map(x)
    r = root_mapping(Q)
    assert np.max(np.abs(r - x)) <= 1e-8
    scale = 1 + np.linalg.norm(Q.sigma)
    assert np.max(np.abs(Q(r))) <= 1e-10 * scale
    assert np.allclose(vieta_map(r).sigma, Q.sigma, rtol=0, atol=1e-9 * scale)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_sturm_count_vs_numpy_roots(d, seed):
    rng = np.random.default_rng(seed)
    sigma = rng.normal(size=d)
    r = np.roots(np.concatenate([[1.0], sigma]))
    real = np.sort(r[np.abs(r.imag) < 1e-7].real)
    # only trust clearly separated configurations
    assume(np.all(np.abs(r.imag[np.abs(r.imag) >= 1e-7]) > 1e-3))
    assume(real.size < 2 or np.min(np.diff(real)) > 1e-3)
    assert sturm_count(sigma) == real.size


def test_sturm_sequence_shape():
    chain = sturm_sequence(MonicRealPolynomial((0, -1)))
    assert [c.size for c in chain] == [3, 2, 1]


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.floats(-5, 5), st.integers(0, 2**32 - 1))
def test_hyperbolic_translation_invariant(d, c, seed):
    rng = np.random.default_rng(seed)
    x = gap_nodes(rng, d)
    assert is_hyperbolic(vieta_map(x)) == is_hyperbolic(vieta_map(x + c))
    Q = MonicRealPolynomial(rng.normal(size=d))
    roots = np.roots(Q.coefficients)
    assume(np.min(np.abs(roots.imag[np.abs(roots.imag) > 1e-9]), initial=1) > 1e-3)
    assert is_hyperbolic(Q) == is_hyperbolic(Q.shifted(c))


@settings(max_examples=200, deadline=None)
@given(st.floats(-4, 4), st.floats(-4, 4))
def test_two_node_discriminant(s1, s2):
    disc = s1 * s1 - 4 * s2
    assume(abs(disc) > 1e-9)
    assert is_hyperbolic((s1, s2), 0.0) == (disc > 0)


def test_batch_matches_single():
    rng = np.random.default_rng(5)
    S = rng.normal(size=(200, 4))
    roots, hyper = root_mapping_batch(S)
    for s, r, h in zip(S, roots, hyper):
        assert h == is_hyperbolic(s)
        if h:
            assert np.allclose(r, root_mapping(s), atol=1e-14)
        else:
            assert np.all(np.isnan(r))


@pytest.mark.parametrize("mu, sigma, expected", [
    ((1, 0, 1, 0), (0, -1), 0.0),
    ((2, 6, 18), (-3,), 0.0),
    ((1, 0, 1, 1), (0, -1), 1.0),
])
def test_moment_recurrence_examples(mu, sigma, expected):
    assert moment_recurrence_check(mu, MonicRealPolynomial(sigma)) == expected


def test_moment_recurrence_needs_enough_moments():
    with pytest.raises(PronyError):
        moment_recurrence_check((1, 0), MonicRealPolynomial((0, -1)))
