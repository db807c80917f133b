import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import dense_sketch
from sketchlogit.errors import DimensionMismatch, DistributionMismatch, EmptyPlan, InvalidRange, MissingScores
from sketchlogit.linalg import leverage_scores_of
from sketchlogit.sketch import (
    Scheme,
    apply_sketch,
    construct_sketch,
    derive_seed,
    identity_plan,
    make_distribution,
    materialize,
    plan_from_indices,
    required_sample_size,
    sketch_diagonal,
)


def test_uniform_distribution():
    np.testing.assert_array_equal(make_distribution("uniform", n=4).probs, [0.25] * 4)


def test_leverage_distribution():
    dist = make_distribution(Scheme.LEVERAGE, np.array([1.0, 1.0, 0.0]))
    np.testing.assert_array_equal(dist.probs, [0.5, 0.5, 0.0])


def test_l2s_distribution():
    # Hand-evaluated mixture, checked with exact fractions: (3/8, 3/8, 1/8, 1/8).
    dist = make_distribution(Scheme.L2S, np.array([1.0, 1.0, 0.0, 0.0]), n=4)
    np.testing.assert_allclose(dist.probs, [0.375, 0.375, 0.125, 0.125], rtol=0, atol=1e-15)


def test_score_schemes_need_scores():
    for scheme in ("leverage", "l2s"):
        with pytest.raises(MissingScores):
            make_distribution(scheme, n=5)


def test_unknown_scheme():
    with pytest.raises(ValueError):
        make_distribution("lewis", n=3)


def test_leverage_probs_are_scores_over_d(rng):
    X = rng.standard_normal((200, 6))
    lev = leverage_scores_of(X)
    dist = make_distribution("leverage", lev)
    np.testing.assert_allclose(dist.probs, lev.scores / 6, atol=1e-10)
    assert abs(dist.probs.sum() - 1) < 1e-10
    l2s = make_distribution("l2s", lev)
    assert abs(l2s.probs.sum() - 1) < 1e-10 and np.all(l2s.probs > 0)


def test_uniform_scales_are_forced():
    plan = construct_sketch(make_distribution("uniform", n=4), 2, seed=5)
    np.testing.assert_allclose(plan.scales, [math.sqrt(2)] * 2)


def test_degenerate_distribution():
    plan = construct_sketch(make_distribution("uniform", n=1), 3, seed=0)
    np.testing.assert_array_equal(plan.indices, [0, 0, 0])
    np.testing.assert_allclose(plan.scales, [1 / math.sqrt(3)] * 3)
    assert plan.entries == [(0, plan.scales[0])] * 3


def test_zero_probability_rows_never_drawn():
    dist = make_distribution("leverage", np.array([0.0, 1.0, 0.0, 1.0, 0.0]))
    idx = np.concatenate([construct_sketch(dist, 50, seed=k).indices for k in range(200)])
    assert set(idx.tolist()) <= {1, 3}


def test_empty_plan_rejected():
    with pytest.raises(EmptyPlan):
        construct_sketch(make_distribution("uniform", n=3), 0, seed=0)


def test_determinism():
    dist = make_distribution("uniform", n=100)
    a, b = construct_sketch(dist, 30, 99), construct_sketch(dist, 30, 99)
    np.testing.assert_array_equal(a.indices, b.indices)
    np.testing.assert_array_equal(a.scales, b.scales)
    assert not np.array_equal(a.indices, construct_sketch(dist, 30, 100).indices)


def test_derive_seed_is_stable():
    assert derive_seed(1, "leverage", 500, 3) == derive_seed(1, "leverage", 500, 3)
    assert derive_seed(1, "leverage", 500, 3) != derive_seed(1, "leverage", 500, 4)
    assert 0 <= derive_seed("x") < 2**64


@pytest.mark.slow
def test_draw_frequencies_match_distribution(rng):
    # 10^5 plans of size 100 from a leverage distribution on n=1000.
    X = rng.standard_normal((1000, 5)) * rng.standard_t(3, size=(1000, 1))
    dist = make_distribution("leverage", leverage_scores_of(X))
    counts = np.zeros(1000)
    plans = 100_000
    for k in range(plans):
        counts += np.bincount(construct_sketch(dist, 100, derive_seed(7, k)).indices, minlength=1000)
    total = plans * 100
    expected = total * dist.probs
    se = np.sqrt(total * dist.probs * (1 - dist.probs))
    z = np.abs(counts - expected) / se
    # Bonferroni over 1000 indices at family-wise level 1e-3.
    assert z.max() < 4.9
    chi2 = np.sum((counts - expected) ** 2 / expected)
    # chi-square with 999 dof: mean 999, sd ~44.7; 6 sd is far in the tail.
    assert chi2 < 999 + 6 * math.sqrt(2 * 999)


def test_diagonal_arithmetic():
    dist = make_distribution("uniform", n=4)
    plan = plan_from_indices(dist, [2, 2])
    np.testing.assert_array_equal(sketch_diagonal(plan, dist), [0, 0, 4, 0])


def test_diagonal_rejects_zero_probability_index():
    lev = make_distribution("leverage", np.array([1.0, 0.0, 1.0]))
    plan = construct_sketch(make_distribution("uniform", n=3), 30, seed=1)
    with pytest.raises(DistributionMismatch):
        sketch_diagonal(plan, lev)


def test_apply_to_identity_selects_row():
    dist = make_distribution("uniform", n=3)
    plan = plan_from_indices(dist, [1])
    out = apply_sketch(plan, np.eye(3))
    np.testing.assert_array_equal(out, [[0.0, plan.scales[0], 0.0]])


def test_apply_shape_and_dimension_check(rng):
    dist = make_distribution("uniform", n=10)
    plan = construct_sketch(dist, 7, seed=0)
    assert apply_sketch(plan, rng.standard_normal((10, 3))).shape == (7, 3)
    assert apply_sketch(plan, rng.standard_normal(10)).shape == (7,)
    with pytest.raises(DimensionMismatch):
        apply_sketch(plan, np.ones((9, 3)))


def test_identity_plan_gives_identity_gram():
    plan = identity_plan(6)
    np.testing.assert_allclose(materialize(plan).T @ materialize(plan), np.eye(6), atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 12), st.integers(1, 15), st.integers(0, 2**63 - 1), st.booleans())
def test_sketch_matches_dense_oracle(n, s, seed, use_leverage):
    rng = np.random.default_rng(seed)
    if use_leverage:
        dist = make_distribution("leverage", rng.random(n) + (rng.random(n) < 0.3))
    else:
        dist = make_distribution("uniform", n=n)
    plan = construct_sketch(dist, s, seed)
    S = dense_sketch(plan.indices, dist.probs)
    np.testing.assert_array_equal(materialize(plan), S)
    assert np.all(np.count_nonzero(S, axis=1) == 1) and np.count_nonzero(S) == s
    gram = S.T @ S
    np.testing.assert_array_equal(gram, np.diag(np.diag(gram)))
    # Dense S^T S sums L rounded squares; allow one unit roundoff per term.
    np.testing.assert_allclose(sketch_diagonal(plan, dist), np.diag(gram), rtol=(s + 1) * 2.3e-16, atol=0)
    M = rng.standard_normal((n, 3))
    np.testing.assert_array_equal(apply_sketch(plan, M), S @ M)


@pytest.mark.parametrize("d, eps, delta, expected", [
    (10, 0.5, 0.1, 3200),
    (24, 0.25, 0.05, 61440),
    (10, 0.5, 0.2, 1600),
    (1, 1 - 1e-12, 1 - 1e-12, 8),
    (3, 0.3, 0.5, 534),  # 24 / 0.045 = 533.33...
])
def test_required_sample_size(d, eps, delta, expected):
    assert required_sample_size(d, eps, delta) == expected


@pytest.mark.parametrize("eps, delta", [(0, 0.1), (1, 0.1), (0.5, 0), (0.5, 1.0), (-0.1, 0.5)])
def test_required_sample_size_range(eps, delta):
    with pytest.raises(InvalidRange):
        required_sample_size(4, eps, delta)
