"""Planted-topic generation and greedy cosine recovery scoring."""

import numpy as np
import pytest

from dyntopic.synth import (
    PlantedSpec,
    PlantedTopic,
    gen_planted,
    recovery_score,
)


def _uniform_topic(n_terms, n_days, amp=1.0):
    return PlantedTopic(
        term_dist=np.full(n_terms, 1.0 / n_terms),
        profile=np.full(n_days, amp),
    )


def test_planted_topic_validation():
    with pytest.raises(ValueError, match="vectors"):
        PlantedTopic(term_dist=np.ones((2, 2)) / 4.0, profile=np.ones(3))
    with pytest.raises(ValueError, match="nonnegative"):
        PlantedTopic(term_dist=np.array([1.5, -0.5]), profile=np.ones(3))
    with pytest.raises(ValueError, match="sum to 1"):
        PlantedTopic(term_dist=np.array([0.3, 0.3]), profile=np.ones(3))
    with pytest.raises(ValueError, match="nonnegative"):
        PlantedTopic(term_dist=np.array([0.5, 0.5]), profile=np.array([-1.0]))
    with pytest.raises(ValueError, match="identically zero"):
        PlantedTopic(term_dist=np.array([0.5, 0.5]), profile=np.zeros(3))


def test_planted_spec_validation():
    topic = _uniform_topic(4, 3)
    with pytest.raises(ValueError, match="positive"):
        PlantedSpec(n_days=0, n_terms=4, docs_per_day=2, topics=[topic])
    with pytest.raises(ValueError, match="at least one"):
        PlantedSpec(n_days=3, n_terms=4, docs_per_day=2, topics=[])
    with pytest.raises(ValueError, match="noise_level"):
        PlantedSpec(
            n_days=3, n_terms=4, docs_per_day=2, topics=[topic], noise_level=-0.1
        )
    with pytest.raises(ValueError, match="n_terms"):
        PlantedSpec(n_days=3, n_terms=5, docs_per_day=2, topics=[topic])
    with pytest.raises(ValueError, match="n_days"):
        PlantedSpec(n_days=4, n_terms=4, docs_per_day=2, topics=[topic])


def test_single_topic_tensor_is_exact_outer_product():
    # with one topic the document mixture is degenerate (always 1), so
    # every document column is profile[t] * term_dist exactly
    dist = np.array([0.5, 0.25, 0.25])
    profile = np.array([2.0, 0.0, 1.0])
    spec = PlantedSpec(
        n_days=3,
        n_terms=3,
        docs_per_day=4,
        topics=[PlantedTopic(term_dist=dist, profile=profile)],
        seed=5,
    )
    tensor = gen_planted(spec)
    assert tensor.dims == (3, 3, 4)
    assert not tensor.padding.any()
    for t in range(3):
        for j in range(4):
            np.testing.assert_allclose(
                tensor.values[t, :, j], profile[t] * dist, atol=1e-12
            )


def test_generation_is_seeded_and_noise_is_nonnegative():
    topics = [_uniform_topic(5, 4), _uniform_topic(5, 4, amp=2.0)]
    clean_spec = PlantedSpec(
        n_days=4, n_terms=5, docs_per_day=3, topics=topics, seed=9
    )
    noisy_spec = PlantedSpec(
        n_days=4, n_terms=5, docs_per_day=3, topics=topics, noise_level=0.1, seed=9
    )
    clean = gen_planted(clean_spec)
    again = gen_planted(clean_spec)
    noisy = gen_planted(noisy_spec)
    np.testing.assert_array_equal(clean.values, again.values)
    assert (noisy.values >= clean.values - 1e-15).all()
    assert noisy.values.min() >= 0.0
    other = gen_planted(
        PlantedSpec(n_days=4, n_terms=5, docs_per_day=3, topics=topics, seed=10)
    )
    assert not np.array_equal(clean.values, other.values)


def test_recovery_score_perfect_permuted_scaled_match():
    rng = np.random.default_rng(1)
    planted = rng.random((6, 3))
    learned = planted[:, [2, 0, 1]] * np.array([3.0, 0.5, 7.0])
    score = recovery_score(learned, planted)
    assert score.matching == [1, 2, 0]
    np.testing.assert_allclose(score.cosines, np.ones(3), atol=1e-12)
    assert score.mean == pytest.approx(1.0)


def test_recovery_score_greedy_assigns_distinct_columns():
    e1 = np.array([1.0, 0.0])
    e2 = np.array([0.0, 1.0])
    planted = np.stack([e1, e1], axis=1)  # two identical targets
    learned = np.stack([e1, e2], axis=1)
    score = recovery_score(learned, planted)
    assert sorted(score.matching) == [0, 1]
    assert score.cosines[0] == pytest.approx(1.0)
    assert score.cosines[1] == pytest.approx(0.0)


def test_recovery_score_extra_learned_columns_allowed():
    planted = np.array([[1.0], [0.0]])
    learned = np.array([[0.1, 0.9], [0.9, 0.05]])
    score = recovery_score(learned, planted)
    assert score.matching == [1]


def test_recovery_score_zero_vector_has_zero_cosine():
    planted = np.array([[1.0], [1.0]])
    learned = np.zeros((2, 1))
    score = recovery_score(learned, planted)
    assert score.cosines[0] == 0.0


def test_recovery_score_validation():
    with pytest.raises(ValueError, match="columns"):
        recovery_score(np.ones(3), np.ones((3, 1)))
    with pytest.raises(ValueError, match="different spaces"):
        recovery_score(np.ones((3, 2)), np.ones((4, 2)))
    with pytest.raises(ValueError, match="at least"):
        recovery_score(np.ones((3, 1)), np.ones((3, 2)))
