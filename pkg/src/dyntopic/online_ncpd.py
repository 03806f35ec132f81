"""Online nonnegative CP decomposition over a stream of tensor samples.

Each incoming tensor is coded against the current factors by a
nonnegative l1-regularized least-squares problem solved through the
rank-sized Gram matrix (the full design of vectorized rank-1 terms is
never formed). The code statistics decay into running aggregates with
weight t^(-beta) and the three factors then take fixed
projected-gradient budgets on the surrogate those aggregates define,
one factor at a time. Memory stays at one stream tensor plus the
aggregates regardless of stream length.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor_core import SolverConfig, nonneg_lasso_gram
from .vectorizer import TermTensor

DEFAULT_CODING_CONFIG = SolverConfig(max_iterations=500, tolerance=1e-12)
FACTOR_UPDATE_ITERATIONS = 20


def _tensor_values(x):
    if isinstance(x, TermTensor):
        return x.values
    return np.asarray(x, dtype=np.float64)


@dataclass
class TensorStream:
    """A re-iterable stream of equally-shaped nonnegative tensors.

    Built either from an explicit list of tensors or from one source
    tensor whose document axis is subsampled with replacement: each of
    ``count`` draws picks ``width`` document slots uniformly, keeping
    every day and term. Iterating the stream again replays the same
    draws (the generator reseeds), so multi-pass algorithms see a
    stable sequence.
    """

    tensors: list = None
    source: np.ndarray = None
    width: int = None
    count: int = None
    seed: int = 0

    @classmethod
    def of(cls, tensors):
        return cls(tensors=list(tensors))

    @classmethod
    def from_tensor(cls, source, width, count, seed=0):
        values = _tensor_values(source)
        if values.ndim != 3:
            raise ValueError("source must have 3 axes")
        if width < 1 or width > values.shape[2]:
            raise ValueError(
                "width must lie in [1, %d]" % values.shape[2]
            )
        if count < 1:
            raise ValueError("count must be >= 1")
        return cls(source=values, width=width, count=count, seed=seed)

    def __iter__(self):
        if self.tensors is not None:
            for x in self.tensors:
                yield _tensor_values(x)
            return
        rng = np.random.default_rng(self.seed)
        for _ in range(self.count):
            idx = rng.integers(0, self.source.shape[2], size=self.width)
            chunk = self.source[:, :, idx]
            yield chunk
            del chunk


@dataclass
class OncpdState:
    """Factors plus running statistics of an online CP run.

    ``code_gram`` averages h h^T over the stream; ``data_code_agg[k]``
    averages h[k] * X so the surrogate objective and its factor
    gradients are computable without revisiting old tensors.
    ``loss_agg`` averages ||X||^2 + lam * ||h||_1 with the same decay,
    which makes the surrogate's value (not just its minimizer)
    available; ``surrogate_trace`` records it before and after each
    factor update.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    code_gram: np.ndarray
    data_code_agg: np.ndarray
    loss_agg: float
    t: int
    beta: float
    lam: float
    config: SolverConfig
    coding_trace: list = field(default_factory=list, repr=False)
    surrogate_trace: list = field(default_factory=list, repr=False)


def init_oncpd_state(
    dims, rank, beta=0.7, lam=1.0, seed=0, config=None, factors=None
):
    """Fresh aggregates with random or supplied warm-start factors."""
    n1, n2, n3 = dims
    if rank < 1:
        raise ValueError("rank must be >= 1")
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    if lam < 0.0:
        raise ValueError("lam must be >= 0")
    if config is None:
        config = DEFAULT_CODING_CONFIG
    if factors is None:
        rng = np.random.default_rng(seed)
        a = 1.0 - rng.random((n1, rank))
        b = 1.0 - rng.random((n2, rank))
        c = 1.0 - rng.random((n3, rank))
    else:
        a, b, c = (np.array(f, dtype=np.float64) for f in factors)
        if a.shape != (n1, rank) or b.shape != (n2, rank) or c.shape != (n3, rank):
            raise ValueError("warm-start factors do not match dims and rank")
        if min(a.min(), b.min(), c.min()) < 0.0:
            raise ValueError("warm-start factors must be nonnegative")
    return OncpdState(
        a=a,
        b=b,
        c=c,
        code_gram=np.zeros((rank, rank)),
        data_code_agg=np.zeros((rank, n1, n2, n3)),
        loss_agg=0.0,
        t=1,
        beta=beta,
        lam=lam,
        config=config,
    )


def oncpd_code(x, state, config=None):
    """Code one tensor against the current factors.

    Solves min_{h>=0} ||x - sum_k h_k a_k o b_k o c_k||^2 + lam ||h||_1
    through the r-by-r Gram (A^T A) * (B^T B) * (C^T C) and the r
    correlations <x, a_k o b_k o c_k>; the n1*n2*n3-row design never
    exists. Columns that are all zero in any factor have zero Gram
    diagonal and code to zero.
    """
    x = _tensor_values(x)
    gram = (state.a.T @ state.a) * (state.b.T @ state.b) * (state.c.T @ state.c)
    corr = np.einsum(
        "ijk,ir,jr,kr->r", x, state.a, state.b, state.c, optimize=True
    )
    return nonneg_lasso_gram(
        gram, corr, state.lam, config=config or state.config
    )


def surrogate_objective(state, factors=None):
    """Value of the aggregate surrogate at the given (default current)
    factors: the decayed average of ||X_s - theta x h_s||^2 + lam*|h_s|_1."""
    if factors is None:
        a, b, c = state.a, state.b, state.c
    else:
        a, b, c = factors
    cross = np.einsum(
        "rijk,ir,jr,kr->r", state.data_code_agg, a, b, c, optimize=True
    )
    gram = state.code_gram * (a.T @ a) * (b.T @ b) * (c.T @ c)
    return float(state.loss_agg - 2.0 * np.sum(cross) + np.sum(gram))


def _pgd_factor(factor, gram, linear, epsilon):
    # Same fixed-budget projected gradient as the matrix dictionary
    # update; trace(gram) dominates the curvature so each iteration
    # descends the surrogate restricted to this factor.
    step = 1.0 / (np.trace(gram) + epsilon)
    for _ in range(FACTOR_UPDATE_ITERATIONS):
        factor = np.maximum(0.0, factor - step * (factor @ gram - linear))
    return factor


def oncpd_step(state, x):
    """Fold one stream tensor into the state and refine all factors.

    Records the coding objective of the step in ``coding_trace`` and
    the surrogate value before/after the factor updates in
    ``surrogate_trace`` (the update never increases the surrogate).
    Mutates and returns the state.
    """
    x = _tensor_values(x)
    expected = (state.a.shape[0], state.b.shape[0], state.c.shape[0])
    if x.shape != expected:
        raise ValueError(
            "stream tensor shape %s does not match factors %s"
            % (x.shape, expected)
        )
    if np.min(x, initial=0.0) < 0.0:
        raise ValueError("stream tensor must be nonnegative")
    h = oncpd_code(x, state)
    gram = (state.a.T @ state.a) * (state.b.T @ state.b) * (state.c.T @ state.c)
    corr = np.einsum(
        "ijk,ir,jr,kr->r", x, state.a, state.b, state.c, optimize=True
    )
    norm_sq = float(np.sum(x * x))
    coding_obj = (
        norm_sq
        - 2.0 * float(h @ corr)
        + float(h @ gram @ h)
        + state.lam * float(np.sum(h))
    )
    state.coding_trace.append(coding_obj)

    weight = float(state.t) ** (-state.beta)
    state.code_gram *= 1.0 - weight
    state.code_gram += weight * np.outer(h, h)
    state.data_code_agg *= 1.0 - weight
    state.data_code_agg += weight * h[:, None, None, None] * x[None, :, :, :]
    state.loss_agg = (1.0 - weight) * state.loss_agg + weight * (
        norm_sq + state.lam * float(np.sum(h))
    )

    before = surrogate_objective(state)
    eps = state.config.epsilon
    gram_a = state.code_gram * (state.b.T @ state.b) * (state.c.T @ state.c)
    lin_a = np.einsum(
        "rijk,jr,kr->ir", state.data_code_agg, state.b, state.c, optimize=True
    )
    state.a = _pgd_factor(state.a, gram_a, lin_a, eps)
    gram_b = state.code_gram * (state.a.T @ state.a) * (state.c.T @ state.c)
    lin_b = np.einsum(
        "rijk,ir,kr->jr", state.data_code_agg, state.a, state.c, optimize=True
    )
    state.b = _pgd_factor(state.b, gram_b, lin_b, eps)
    gram_c = state.code_gram * (state.a.T @ state.a) * (state.b.T @ state.b)
    lin_c = np.einsum(
        "rijk,ir,jr->kr", state.data_code_agg, state.a, state.b, optimize=True
    )
    state.c = _pgd_factor(state.c, gram_c, lin_c, eps)
    state.surrogate_trace.append((before, surrogate_objective(state)))
    state.t += 1
    return state


def fit_oncpd(
    stream, rank, beta=0.7, lam=1.0, seed=0, config=None, initial_factors=None
):
    """Run online CP over a stream of equally-shaped tensors.

    ``stream`` is any iterable of 3-way arrays (a :class:`TensorStream`
    for the subsampling setup). Factors start from seeded uniform
    draws unless warm-start factors are given; aggregates always start
    fresh. Returns the final state.
    """
    state = None
    it = iter(stream)
    while True:
        try:
            x = next(it)
        except StopIteration:
            break
        x = _tensor_values(x)
        if state is None:
            state = init_oncpd_state(
                x.shape,
                rank,
                beta=beta,
                lam=lam,
                seed=seed,
                config=config,
                factors=initial_factors,
            )
        oncpd_step(state, x)
        x = None
    if state is None:
        raise ValueError("stream yields no tensors")
    return state


def as_cp_model(state):
    """View the state's factors as a batch-style CP model (the trace
    holds the per-step coding objectives rather than a batch trace)."""
    from .ncpd import CpModel

    return CpModel(
        a=state.a.copy(),
        b=state.b.copy(),
        c=state.c.copy(),
        objective_trace=list(state.coding_trace),
        rank=state.a.shape[1],
        config=state.config,
    )


def sequential_oncpd(
    monthly_tensors,
    rank,
    beta=0.7,
    lam=1.0,
    samples_per_segment=100,
    width=None,
    seed=0,
    config=None,
):
    """Chain online CP runs across consecutive time segments.

    Each segment tensor (a month of data in the intended use) is
    subsampled into ``samples_per_segment`` stream tensors of document
    width ``width``. Every segment starts with fresh aggregates and a
    reset step counter but warm-starts its factors from the previous
    segment's final factors, so topics carry over while the statistics
    track the new segment only. An element that is already an iterable
    of tensors (e.g. a :class:`TensorStream`) is streamed as-is.
    Returns one :class:`~dyntopic.ncpd.CpModel` snapshot per segment.
    """
    monthly_tensors = list(monthly_tensors)
    if not monthly_tensors:
        raise ValueError("no segment tensors given")
    snapshots = []
    factors = None
    for segment, month in enumerate(monthly_tensors):
        if isinstance(month, (TermTensor, np.ndarray)):
            if width is None:
                width = _tensor_values(month).shape[2]
            stream = TensorStream.from_tensor(
                month, width, samples_per_segment, seed=seed + segment
            )
        else:
            stream = month
        state = fit_oncpd(
            stream,
            rank,
            beta=beta,
            lam=lam,
            seed=seed,
            config=config,
            initial_factors=factors,
        )
        snapshots.append(as_cp_model(state))
        factors = (state.a.copy(), state.b.copy(), state.c.copy())
    return snapshots
