"""Synthetic corpora with planted topics, and recovery scoring.

Each planted topic is a distribution over terms plus a temporal
profile saying how strongly it emits on each day. Every document mixes
the active topics with Dirichlet weights, so a day's documents share
the day's topical mix without being identical. Used to check that the
factorizations actually find what was planted, in particular that the
tensor method keeps short-lived topics that matrix methods blur away.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .vectorizer import TermTensor


@dataclass
class PlantedTopic:
    term_dist: np.ndarray  # (n_terms,), nonnegative, sums to 1
    profile: np.ndarray  # (n_days,), nonnegative intensity per day

    def __post_init__(self):
        self.term_dist = np.asarray(self.term_dist, dtype=np.float64)
        self.profile = np.asarray(self.profile, dtype=np.float64)
        if self.term_dist.ndim != 1 or self.profile.ndim != 1:
            raise ValueError("term_dist and profile must be vectors")
        if self.term_dist.min(initial=0.0) < 0.0:
            raise ValueError("term_dist must be nonnegative")
        if abs(float(self.term_dist.sum()) - 1.0) > 1e-9:
            raise ValueError("term_dist must sum to 1")
        if self.profile.min(initial=0.0) < 0.0:
            raise ValueError("profile must be nonnegative")
        if not self.profile.any():
            raise ValueError("profile is identically zero")


@dataclass
class PlantedSpec:
    n_days: int
    n_terms: int
    docs_per_day: int
    topics: list
    noise_level: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_days < 1 or self.n_terms < 1 or self.docs_per_day < 1:
            raise ValueError("dimensions must be positive")
        if not self.topics:
            raise ValueError("at least one planted topic is required")
        if self.noise_level < 0.0:
            raise ValueError("noise_level must be >= 0")
        for topic in self.topics:
            if topic.term_dist.shape != (self.n_terms,):
                raise ValueError("term_dist length does not match n_terms")
            if topic.profile.shape != (self.n_days,):
                raise ValueError("profile length does not match n_days")


def gen_planted(spec):
    """Generate the planted-topic tensor for a :class:`PlantedSpec`.

    Document j on day t is sum_k profile_k(t) * pi_{tjk} * term_dist_k
    with pi_{tj} ~ Dirichlet(1,...,1), plus truncated Gaussian noise
    max(0, N(0, noise_level)) per entry when noise is requested.
    Deterministic per seed.
    """
    rng = np.random.default_rng(spec.seed)
    profiles = np.stack([t.profile for t in spec.topics], axis=1)  # (T, K)
    dists = np.stack([t.term_dist for t in spec.topics], axis=0)  # (K, n)
    mix = rng.dirichlet(
        np.ones(len(spec.topics)), size=(spec.n_days, spec.docs_per_day)
    )  # (T, L, K)
    values = np.einsum("tk,tjk,kn->tnj", profiles, mix, dists, optimize=True)
    if spec.noise_level > 0.0:
        noise = rng.normal(0.0, spec.noise_level, size=values.shape)
        values += np.maximum(0.0, noise)
    padding = np.zeros((spec.n_days, spec.docs_per_day), dtype=bool)
    return TermTensor(values=values, padding=padding)


@dataclass
class RecoveryScore:
    matching: list  # learned column index chosen for each planted topic
    cosines: np.ndarray  # cosine per planted topic, in planting order
    mean: float


def _cosine_matrix(planted, learned):
    p_norm = np.linalg.norm(planted, axis=0)
    l_norm = np.linalg.norm(learned, axis=0)
    sim = planted.T @ learned
    denom = np.outer(p_norm, l_norm)
    out = np.zeros_like(sim)
    np.divide(sim, denom, out=out, where=denom > 0.0)
    return out


def recovery_score(learned_columns, planted_columns):
    """Match each planted topic to a distinct learned column.

    Greedy global matching on cosine similarity: repeatedly take the
    highest remaining (planted, learned) pair, ties broken by lowest
    planted then lowest learned index. Requires at least as many
    learned columns as planted topics. A zero vector has cosine 0 with
    everything. Returns per-planted-topic cosines and their mean.
    """
    planted = np.asarray(planted_columns, dtype=np.float64)
    learned = np.asarray(learned_columns, dtype=np.float64)
    if planted.ndim != 2 or learned.ndim != 2:
        raise ValueError("inputs must be columns-as-topics matrices")
    if planted.shape[0] != learned.shape[0]:
        raise ValueError("planted and learned topics live in different spaces")
    n_planted = planted.shape[1]
    n_learned = learned.shape[1]
    if n_learned < n_planted:
        raise ValueError(
            "need at least %d learned columns, got %d" % (n_planted, n_learned)
        )
    sim = _cosine_matrix(planted, learned)
    pairs = sorted(
        ((p, l) for p in range(n_planted) for l in range(n_learned)),
        key=lambda pl: (-sim[pl[0], pl[1]], pl[0], pl[1]),
    )
    matching = [-1] * n_planted
    used = set()
    for p, l in pairs:
        if matching[p] >= 0 or l in used:
            continue
        matching[p] = l
        used.add(l)
    cosines = np.array([sim[p, matching[p]] for p in range(n_planted)])
    return RecoveryScore(
        matching=matching, cosines=cosines, mean=float(cosines.mean())
    )
