"""Online CP decomposition: implicit-Gram coding, aggregate surrogate,
majorize-minimize descent and the segment chaining."""

import numpy as np
import pytest

from dyntopic.ncpd import CpModel
from dyntopic.online_ncpd import (
    FACTOR_UPDATE_ITERATIONS,
    TensorStream,
    as_cp_model,
    fit_oncpd,
    init_oncpd_state,
    oncpd_code,
    oncpd_step,
    sequential_oncpd,
    surrogate_objective,
)
from dyntopic.synth import recovery_score
from dyntopic.tensor_core import SolverConfig, cp_reconstruct, nonneg_lasso


def _rank_one(h, a, b, c):
    return np.einsum("r,ir,jr,kr->ijk", h, a, b, c)


def test_stream_validation():
    x = np.ones((2, 3, 4))
    with pytest.raises(ValueError, match="width"):
        TensorStream.from_tensor(x, 0, 5)
    with pytest.raises(ValueError, match="width"):
        TensorStream.from_tensor(x, 5, 5)
    with pytest.raises(ValueError, match="count"):
        TensorStream.from_tensor(x, 2, 0)
    with pytest.raises(ValueError, match="3 axes"):
        TensorStream.from_tensor(np.ones((2, 2)), 1, 1)


def test_stream_replays_identically():
    rng = np.random.default_rng(0)
    x = rng.random((3, 4, 6))
    stream = TensorStream.from_tensor(x, 2, 5, seed=7)
    first = [chunk.copy() for chunk in stream]
    second = list(stream)
    assert len(first) == 5
    assert all(chunk.shape == (3, 4, 2) for chunk in first)
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a, b)


def test_stream_of_list_passes_through():
    tensors = [np.ones((2, 2, 2)), np.zeros((2, 2, 2))]
    out = list(TensorStream.of(tensors))
    np.testing.assert_array_equal(out[0], tensors[0])
    np.testing.assert_array_equal(out[1], tensors[1])


def test_init_validation():
    with pytest.raises(ValueError, match="rank"):
        init_oncpd_state((2, 2, 2), 0)
    with pytest.raises(ValueError, match="beta"):
        init_oncpd_state((2, 2, 2), 1, beta=-0.1)
    with pytest.raises(ValueError, match="lam"):
        init_oncpd_state((2, 2, 2), 1, lam=-1.0)
    good = np.ones((2, 2))
    with pytest.raises(ValueError, match="warm-start"):
        init_oncpd_state((2, 2, 2), 2, factors=(good, good, np.ones((3, 2))))
    with pytest.raises(ValueError, match="nonnegative"):
        init_oncpd_state((2, 2, 2), 2, factors=(good, good, -good))


def test_code_matches_materialized_design():
    rng = np.random.default_rng(1)
    state = init_oncpd_state((3, 4, 2), 2, lam=0.8, seed=5)
    x = rng.random((3, 4, 2))
    h = oncpd_code(x, state)
    design = np.stack(
        [
            np.einsum(
                "i,j,k->ijk", state.a[:, k], state.b[:, k], state.c[:, k]
            ).ravel()
            for k in range(2)
        ],
        axis=1,
    )
    expected = nonneg_lasso(design, x.ravel(), 0.8)
    np.testing.assert_allclose(h, expected, atol=1e-10)


def test_code_zero_factor_column_codes_zero():
    state = init_oncpd_state((2, 3, 2), 2, lam=0.1, seed=2)
    state.a[:, 1] = 0.0
    h = oncpd_code(np.ones((2, 3, 2)), state)
    assert h[1] == 0.0


def test_step_validation():
    state = init_oncpd_state((2, 3, 4), 2)
    with pytest.raises(ValueError, match="shape"):
        oncpd_step(state, np.ones((2, 3, 5)))
    with pytest.raises(ValueError, match="nonnegative"):
        oncpd_step(state, -np.ones((2, 3, 4)))


def test_coding_trace_records_true_objective():
    rng = np.random.default_rng(3)
    state = init_oncpd_state((3, 4, 2), 2, lam=0.5, seed=9)
    x = rng.random((3, 4, 2))
    a, b, c = state.a.copy(), state.b.copy(), state.c.copy()
    oncpd_step(state, x)
    h = oncpd_code(x, init_oncpd_state((3, 4, 2), 2, lam=0.5, factors=(a, b, c)))
    brute = float(np.linalg.norm(x - _rank_one(h, a, b, c)) ** 2) + 0.5 * float(
        h.sum()
    )
    assert state.coding_trace[-1] == pytest.approx(brute, rel=1e-9)


def test_first_step_replaces_any_prior_statistics():
    rng = np.random.default_rng(4)
    state = init_oncpd_state((2, 3, 2), 2, beta=0.6, lam=0.3, seed=1)
    state.code_gram += 50.0
    state.data_code_agg -= 9.0
    state.loss_agg = 1e6
    x = rng.random((2, 3, 2))
    a, b, c = state.a.copy(), state.b.copy(), state.c.copy()
    oncpd_step(state, x)
    h = oncpd_code(x, init_oncpd_state((2, 3, 2), 2, lam=0.3, factors=(a, b, c)))
    np.testing.assert_allclose(state.code_gram, np.outer(h, h), atol=1e-12)
    np.testing.assert_allclose(
        state.data_code_agg, h[:, None, None, None] * x[None], atol=1e-12
    )
    assert state.loss_agg == pytest.approx(
        float(np.sum(x * x)) + 0.3 * float(h.sum()), rel=1e-12
    )


def test_surrogate_is_decayed_average_of_sample_losses():
    # with beta=1 the aggregates hold exact running means, so the
    # surrogate at ANY factor point must equal the mean of the
    # per-sample losses evaluated there with the recorded codes
    rng = np.random.default_rng(5)
    lam = 0.4
    state = init_oncpd_state((3, 2, 4), 2, beta=1.0, lam=lam, seed=3)
    samples = []
    for _ in range(3):
        x = rng.random((3, 2, 4))
        h = oncpd_code(x, state)
        samples.append((x, h))
        oncpd_step(state, x)
    probe = tuple(1.0 - rng.random(f.shape) for f in (state.a, state.b, state.c))
    expected = np.mean(
        [
            np.linalg.norm(x - _rank_one(h, *probe)) ** 2 + lam * h.sum()
            for x, h in samples
        ]
    )
    assert surrogate_objective(state, factors=probe) == pytest.approx(
        expected, rel=1e-9
    )


def test_three_step_unroll_matches_recursion():
    beta, lam = 0.7, 0.2
    rng = np.random.default_rng(6)
    tensors = [rng.random((3, 2, 4)) for _ in range(3)]
    state = init_oncpd_state((3, 2, 4), 2, beta=beta, lam=lam, seed=11)
    a, b, c = state.a.copy(), state.b.copy(), state.c.copy()
    eps = state.config.epsilon
    code_gram = np.zeros((2, 2))
    agg = np.zeros((2, 3, 2, 4))
    for t, x in enumerate(tensors, start=1):
        oncpd_step(state, x)
        shadow = init_oncpd_state((3, 2, 4), 2, lam=lam, factors=(a, b, c))
        h = oncpd_code(x, shadow)
        weight = float(t) ** (-beta)
        code_gram = code_gram * (1.0 - weight)
        code_gram = code_gram + weight * np.outer(h, h)
        agg = agg * (1.0 - weight)
        agg = agg + weight * h[:, None, None, None] * x[None]

        def pgd(factor, gram, linear):
            step = 1.0 / (np.trace(gram) + eps)
            for _ in range(FACTOR_UPDATE_ITERATIONS):
                factor = np.maximum(0.0, factor - step * (factor @ gram - linear))
            return factor

        gram_a = code_gram * (b.T @ b) * (c.T @ c)
        lin_a = np.einsum("rijk,jr,kr->ir", agg, b, c, optimize=True)
        a = pgd(a, gram_a, lin_a)
        gram_b = code_gram * (a.T @ a) * (c.T @ c)
        lin_b = np.einsum("rijk,ir,kr->jr", agg, a, c, optimize=True)
        b = pgd(b, gram_b, lin_b)
        gram_c = code_gram * (a.T @ a) * (b.T @ b)
        lin_c = np.einsum("rijk,ir,jr->kr", agg, a, b, optimize=True)
        c = pgd(c, gram_c, lin_c)
        np.testing.assert_array_equal(state.code_gram, code_gram)
        np.testing.assert_array_equal(state.a, a)
        np.testing.assert_array_equal(state.b, b)
        np.testing.assert_array_equal(state.c, c)
    assert state.t == 4


def test_factor_updates_never_increase_surrogate():
    rng = np.random.default_rng(7)
    state = init_oncpd_state((4, 3, 5), 3, beta=0.7, lam=0.6, seed=13)
    for _ in range(30):
        oncpd_step(state, rng.random((4, 3, 5)))
    for before, after in state.surrogate_trace:
        assert after <= before + 1e-8 * max(1.0, abs(before))


def test_repeated_tensor_surrogate_monotone_across_steps():
    rng = np.random.default_rng(8)
    x = rng.random((4, 3, 2))
    state = init_oncpd_state((4, 3, 2), 2, beta=1.0, lam=0.0, seed=4)
    finals = []
    for _ in range(40):
        oncpd_step(state, x)
        finals.append(state.surrogate_trace[-1][1])
    finals = np.asarray(finals)
    rises = finals[1:] - finals[:-1]
    assert rises.max(initial=0.0) <= 1e-8 * max(1.0, abs(finals[0]))


def test_fit_empty_stream_raises():
    with pytest.raises(ValueError, match="no tensors"):
        fit_oncpd([], 2)


def test_fit_is_deterministic():
    rng = np.random.default_rng(9)
    x = rng.random((3, 4, 6))
    stream = TensorStream.from_tensor(x, 3, 10, seed=2)
    s1 = fit_oncpd(stream, 2, lam=0.5, seed=6)
    s2 = fit_oncpd(stream, 2, lam=0.5, seed=6)
    np.testing.assert_array_equal(s1.a, s2.a)
    np.testing.assert_array_equal(s1.b, s2.b)
    np.testing.assert_array_equal(s1.c, s2.c)
    assert s1.coding_trace == s2.coding_trace


def test_fit_recovers_planted_cp_tensor():
    # the stream subsamples document slots, so the learned document
    # factor lives in subsample width; judge recovery on the day and
    # term factors, which keep their full axes
    rng = np.random.default_rng(10)
    a = rng.random((5, 2))
    b = rng.random((4, 2))
    c = rng.random((6, 2))
    x = cp_reconstruct(a, b, c)
    stream = TensorStream.from_tensor(x, 3, 200, seed=1)
    state = fit_oncpd(stream, 2, beta=0.8, lam=0.0, seed=5)
    assert state.c.shape == (3, 2)
    assert recovery_score(state.a, a).mean > 0.95
    assert recovery_score(state.b, b).mean > 0.95


def test_warm_start_continues_from_given_factors():
    rng = np.random.default_rng(11)
    x = rng.random((3, 3, 3))
    first = fit_oncpd([x, x], 2, lam=0.1, seed=5)
    factors = (first.a.copy(), first.b.copy(), first.c.copy())
    resumed = fit_oncpd([x], 2, lam=0.1, seed=99, initial_factors=factors)
    fresh = init_oncpd_state((3, 3, 3), 2, lam=0.1, factors=factors)
    oncpd_step(fresh, x)
    np.testing.assert_array_equal(resumed.a, fresh.a)
    np.testing.assert_array_equal(resumed.b, fresh.b)
    np.testing.assert_array_equal(resumed.c, fresh.c)


def test_as_cp_model_snapshot():
    rng = np.random.default_rng(12)
    state = fit_oncpd([rng.random((2, 3, 4)) for _ in range(3)], 2, seed=1)
    model = as_cp_model(state)
    assert isinstance(model, CpModel)
    assert model.dims == (2, 3, 4)
    assert model.rank == 2
    np.testing.assert_array_equal(model.a, state.a)
    assert model.objective_trace == state.coding_trace
    # detached copies, not views
    model.a[0, 0] += 1.0
    assert model.a[0, 0] != state.a[0, 0]


def test_sequential_warm_starts_each_segment():
    rng = np.random.default_rng(13)
    months = [rng.random((3, 4, 6)) for _ in range(2)]
    models = sequential_oncpd(
        months, 2, lam=0.3, samples_per_segment=5, width=3, seed=7
    )
    assert len(models) == 2
    # day and term axes stay full size; documents live in stream width
    assert all(m.dims == (3, 4, 3) for m in models)

    # replaying the first segment and chaining by hand gives segment 2
    stream1 = TensorStream.from_tensor(months[0], 3, 5, seed=7)
    s1 = fit_oncpd(stream1, 2, lam=0.3, seed=7)
    np.testing.assert_array_equal(models[0].a, s1.a)
    stream2 = TensorStream.from_tensor(months[1], 3, 5, seed=8)
    s2 = fit_oncpd(
        stream2,
        2,
        lam=0.3,
        seed=7,
        initial_factors=(s1.a.copy(), s1.b.copy(), s1.c.copy()),
    )
    np.testing.assert_array_equal(models[1].a, s2.a)


def test_sequential_rejects_empty_list():
    with pytest.raises(ValueError, match="no segment"):
        sequential_oncpd([], 2)
