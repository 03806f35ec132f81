"""Online NMF: aggregate recursion, decay weights, streaming fits."""

import numpy as np
import pytest

from dyntopic.acceptance import TrackingLoader
from dyntopic.online_nmf import (
    DEFAULT_CODING_CONFIG,
    MinibatchPlan,
    OnmfState,
    fit_onmf,
    init_onmf_state,
    onmf_step,
    sequential_onmf,
)
from dyntopic.tensor_core import SolverConfig, nnls
from dyntopic.vectorizer import TermTensor


def test_init_validation():
    with pytest.raises(ValueError, match="rank"):
        init_onmf_state(5, 0)
    with pytest.raises(ValueError, match="beta"):
        init_onmf_state(5, 2, beta=1.5)
    with pytest.raises(ValueError, match="decay_per"):
        init_onmf_state(5, 2, decay_per="week")
    with pytest.raises(ValueError):
        MinibatchPlan(batch_size=0)
    with pytest.raises(ValueError):
        MinibatchPlan(inner_iterations=0)


def test_step_validation():
    state = init_onmf_state(4, 2)
    with pytest.raises(ValueError, match="shape"):
        onmf_step(state, np.ones((3, 2)))
    with pytest.raises(ValueError, match="nonnegative"):
        onmf_step(state, -np.ones((4, 2)))


def test_first_step_replaces_any_prior_statistics():
    # at t=1 the decay weight is 1, so whatever the aggregates held is
    # fully overwritten by the first minibatch's statistics
    rng = np.random.default_rng(0)
    state = init_onmf_state(6, 2, beta=0.7, seed=3)
    state.gram_agg += 99.0
    state.cross_agg -= 7.0
    x = rng.random((6, 4))
    w_before = state.w.copy()
    onmf_step(state, x)
    h = nnls(w_before, x, config=DEFAULT_CODING_CONFIG)
    np.testing.assert_allclose(state.gram_agg, h @ h.T, atol=1e-12)
    np.testing.assert_allclose(state.cross_agg, x @ h.T, atol=1e-12)
    assert state.t == 2


def test_beta_zero_is_memoryless():
    rng = np.random.default_rng(1)
    state = init_onmf_state(5, 2, beta=0.0, seed=4)
    for _ in range(3):
        onmf_step(state, rng.random((5, 3)))
    last = rng.random((5, 3))
    w_before = state.w.copy()
    onmf_step(state, last)
    h = nnls(w_before, last, config=DEFAULT_CODING_CONFIG)
    np.testing.assert_allclose(state.gram_agg, h @ h.T, atol=1e-12)
    np.testing.assert_allclose(state.cross_agg, last @ h.T, atol=1e-12)


def test_five_step_unroll_matches_recursion():
    # replay the documented recursion by hand and demand equality
    beta, eps = 0.7, DEFAULT_CODING_CONFIG.epsilon
    rng = np.random.default_rng(2)
    batches = [rng.random((7, 3)) for _ in range(5)]
    state = init_onmf_state(7, 2, beta=beta, seed=8)
    w = state.w.copy()
    gram = np.zeros((2, 2))
    cross = np.zeros((7, 2))
    for t, x in enumerate(batches, start=1):
        onmf_step(state, x)
        h = nnls(w, x, config=DEFAULT_CODING_CONFIG)
        weight = float(t) ** (-beta)
        gram = gram * (1.0 - weight)
        gram = gram + weight * (h @ h.T)
        cross = cross * (1.0 - weight)
        cross = cross + weight * (x @ h.T)
        step = 1.0 / (np.trace(gram) + eps)
        for _ in range(20):
            w = np.maximum(0.0, w - step * (w @ gram - cross))
        np.testing.assert_array_equal(state.gram_agg, gram)
        np.testing.assert_array_equal(state.cross_agg, cross)
        np.testing.assert_array_equal(state.w, w)
    assert state.t == 6


def test_day_decay_follows_day_counter():
    rng = np.random.default_rng(3)
    state = init_onmf_state(4, 2, beta=1.0, decay_per="day", seed=5)
    first = rng.random((4, 3))
    second = rng.random((4, 3))
    onmf_step(state, first)
    w_before = state.w.copy()
    onmf_step(state, second)
    # day still 1: weight 1 again, so the second step also fully
    # replaces the aggregates despite t having advanced
    h = nnls(w_before, second, config=DEFAULT_CODING_CONFIG)
    np.testing.assert_allclose(state.gram_agg, h @ h.T, atol=1e-12)
    state.day = 4
    gram_before = state.gram_agg.copy()
    w_before = state.w.copy()
    third = rng.random((4, 3))
    onmf_step(state, third)
    h = nnls(w_before, third, config=DEFAULT_CODING_CONFIG)
    expected = gram_before * (1.0 - 0.25) + 0.25 * (h @ h.T)
    np.testing.assert_allclose(state.gram_agg, expected, atol=1e-12)


def test_fit_recovers_stationary_stream():
    rng = np.random.default_rng(6)
    w_true = rng.random((12, 3))
    slices = [w_true @ rng.random((3, 30)) for _ in range(15)]
    w, codes = fit_onmf(
        slices, 3, plan=MinibatchPlan(batch_size=10, inner_iterations=40, seed=1)
    )
    assert len(codes) == 15
    worst = max(
        np.linalg.norm(x - w @ h) / np.linalg.norm(x)
        for x, h in zip(slices, codes)
    )
    assert worst < 5e-2


def test_fit_warns_and_codes_empty_days():
    rng = np.random.default_rng(7)
    slices = [rng.random((5, 4)), np.zeros((5, 0)), rng.random((5, 3))]
    with pytest.warns(UserWarning, match="empty"):
        w, codes = fit_onmf(
            slices, 2, plan=MinibatchPlan(batch_size=2, inner_iterations=3, seed=0)
        )
    assert [c.shape for c in codes] == [(2, 4), (2, 0), (2, 3)]


def test_fit_accepts_term_tensor_and_skips_padding():
    rng = np.random.default_rng(8)
    values = rng.random((3, 6, 4))
    padding = np.zeros((3, 4), dtype=bool)
    padding[1, 2:] = True
    values[1, :, 2:] = 0.0
    tensor = TermTensor(values=values, padding=padding)
    w, codes = fit_onmf(
        tensor, 2, plan=MinibatchPlan(batch_size=2, inner_iterations=3, seed=0)
    )
    assert [c.shape[1] for c in codes] == [4, 2, 4]


def test_fit_accepts_callable_source_and_is_deterministic():
    rng = np.random.default_rng(9)
    slices = [rng.random((6, 5)) for _ in range(4)]

    def source():
        return iter([s.copy() for s in slices])

    plan = MinibatchPlan(batch_size=3, inner_iterations=4, seed=2)
    w1, codes1 = fit_onmf(source, 2, plan=plan)
    w2, codes2 = fit_onmf(source, 2, plan=plan)
    np.testing.assert_array_equal(w1, w2)
    for a, b in zip(codes1, codes2):
        np.testing.assert_array_equal(a, b)


def test_fit_keeps_at_most_one_slice_alive():
    rng = np.random.default_rng(10)
    loader = TrackingLoader([rng.random((8, 6)) for _ in range(6)])
    fit_onmf(loader, 2, plan=MinibatchPlan(batch_size=3, inner_iterations=2, seed=0))
    assert loader.max_alive <= 1


def test_fit_rejects_empty_source():
    with pytest.raises(ValueError, match="no day slices"):
        fit_onmf([], 2)


def test_sequential_schedule_validation():
    rng = np.random.default_rng(11)
    slices = [rng.random((4, 3)) for _ in range(4)]
    plan = MinibatchPlan(batch_size=2, inner_iterations=2, seed=0)
    with pytest.raises(ValueError, match="strictly increasing"):
        sequential_onmf(slices, 2, [3, 2], plan=plan)
    with pytest.raises(ValueError, match="1-based"):
        sequential_onmf(slices, 2, [0, 2], plan=plan)
    with pytest.raises(ValueError, match="beyond"):
        sequential_onmf(slices, 2, [9], plan=plan)


def test_sequential_segments_and_snapshots():
    rng = np.random.default_rng(12)
    slices = [rng.random((6, 5)) for _ in range(5)]
    plan = MinibatchPlan(batch_size=3, inner_iterations=5, seed=3)
    segments = sequential_onmf(slices, 2, [2], plan=plan)
    # implicit trailing checkpoint at day 5
    assert len(segments) == 2
    w1, codes1 = segments[0]
    w2, codes2 = segments[1]
    assert len(codes1) == 2 and len(codes2) == 3
    assert not np.array_equal(w1, w2)
    # each day is coded against its own segment's snapshot
    np.testing.assert_allclose(codes1[1], nnls(w1, slices[1]), atol=1e-12)
    np.testing.assert_allclose(codes2[0], nnls(w2, slices[2]), atol=1e-12)


def test_sequential_explicit_final_checkpoint_matches_implicit():
    rng = np.random.default_rng(13)
    slices = [rng.random((5, 4)) for _ in range(3)]
    plan = MinibatchPlan(batch_size=2, inner_iterations=3, seed=1)
    implicit = sequential_onmf(slices, 2, [1], plan=plan)
    explicit = sequential_onmf(slices, 2, [1, 3], plan=plan)
    assert len(implicit) == len(explicit) == 2
    for (wa, ca), (wb, cb) in zip(implicit, explicit):
        np.testing.assert_array_equal(wa, wb)
        for x, y in zip(ca, cb):
            np.testing.assert_array_equal(x, y)
