"""Online nonnegative matrix factorization over a stream of day slices.

Instead of refitting from scratch as days arrive, the dictionary W is
refined from aggregate statistics: each minibatch is coded against the
current W, the code Gram and data-code cross products are folded into
running averages with a t^(-beta) weight, and W takes a few projected
gradient steps on the quadratic surrogate those averages define. Only
one day slice is ever held in memory and the state size is independent
of the number of days seen.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .tensor_core import SolverConfig, nnls
from .vectorizer import TermTensor

DEFAULT_CODING_CONFIG = SolverConfig(max_iterations=300, tolerance=1e-10)
W_UPDATE_ITERATIONS = 20


@dataclass
class MinibatchPlan:
    """How to slice a day into learning minibatches."""

    batch_size: int = 50
    inner_iterations: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.inner_iterations < 1:
            raise ValueError("inner_iterations must be >= 1")


@dataclass
class OnmfState:
    """Dictionary plus running statistics of an online NMF run.

    ``gram_agg`` and ``cross_agg`` are the decayed averages of H H^T
    and X H^T; ``t`` counts learning steps taken so far plus one (the
    weight applied to step t is t^(-beta), so a fresh state at t=1
    gives its first minibatch full weight). ``decay_per`` selects
    whether the weight follows the global step counter or the day
    counter.
    """

    w: np.ndarray
    gram_agg: np.ndarray
    cross_agg: np.ndarray
    t: int
    day: int
    beta: float
    decay_per: str
    config: SolverConfig
    steps_per_day: list = field(default_factory=list, repr=False)


def init_onmf_state(
    n_terms, rank, beta=0.7, seed=0, config=None, decay_per="step"
):
    if rank < 1:
        raise ValueError("rank must be >= 1")
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    if decay_per not in ("step", "day"):
        raise ValueError("decay_per must be 'step' or 'day'")
    if config is None:
        config = DEFAULT_CODING_CONFIG
    rng = np.random.default_rng(seed)
    w = 1.0 - rng.random((n_terms, rank))
    return OnmfState(
        w=w,
        gram_agg=np.zeros((rank, rank)),
        cross_agg=np.zeros((n_terms, rank)),
        t=1,
        day=1,
        beta=beta,
        decay_per=decay_per,
        config=config,
    )


def _update_dictionary(w, gram, cross, epsilon):
    # Fixed projected-gradient budget on the surrogate quadratic.
    # trace(gram) bounds its top eigenvalue, so the step cannot
    # overshoot and every iteration is a descent step.
    step = 1.0 / (np.trace(gram) + epsilon)
    for _ in range(W_UPDATE_ITERATIONS):
        w = np.maximum(0.0, w - step * (w @ gram - cross))
    return w


def onmf_step(state, minibatch):
    """Fold one minibatch into the state and refine the dictionary.

    Codes the columns against the current W, decays the aggregates
    toward the new statistics with weight t^(-beta), and takes the
    fixed projected-gradient budget on W. Mutates and returns the
    state; the step counter advances by one.
    """
    x = np.asarray(minibatch, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != state.w.shape[0]:
        raise ValueError("minibatch shape does not match the dictionary")
    if np.min(x, initial=0.0) < 0.0:
        raise ValueError("minibatch must be nonnegative")
    h = nnls(state.w, x, config=state.config)
    clock = state.t if state.decay_per == "step" else state.day
    weight = float(clock) ** (-state.beta)
    state.gram_agg *= 1.0 - weight
    state.gram_agg += weight * (h @ h.T)
    state.cross_agg *= 1.0 - weight
    state.cross_agg += weight * (x @ h.T)
    state.w = _update_dictionary(
        state.w, state.gram_agg, state.cross_agg, state.config.epsilon
    )
    state.t += 1
    return state


def _slice_passes(source):
    """Make a fresh per-day iterator over ``source`` for one pass."""
    if callable(source):
        return source()
    if isinstance(source, TermTensor):
        return _tensor_slices(source)
    if isinstance(source, np.ndarray):
        if source.ndim != 3:
            raise ValueError("array source must have 3 axes")
        return _array_slices(source)
    return iter(source)


def _tensor_slices(tensor):
    for t in range(tensor.values.shape[0]):
        yield tensor.values[t][:, ~tensor.padding[t]]


def _array_slices(values):
    for t in range(values.shape[0]):
        yield values[t]


def _learning_pass(source, state, plan, checkpoints=None):
    """Run the minibatch steps over every day; snapshot W when asked."""
    rng = np.random.default_rng(plan.seed)
    snapshots = {}
    day_count = 0
    it = _slice_passes(source)
    while True:
        try:
            day_slice = next(it)
        except StopIteration:
            break
        day_count += 1
        x = np.asarray(day_slice, dtype=np.float64)
        day_slice = None
        n_docs = x.shape[1]
        if n_docs == 0:
            warnings.warn("day %d is empty; skipped" % day_count, stacklevel=3)
        else:
            take = min(plan.batch_size, n_docs)
            for _ in range(plan.inner_iterations):
                idx = rng.choice(n_docs, size=take, replace=False)
                onmf_step(state, x[:, idx])
            state.steps_per_day.append(plan.inner_iterations)
            state.day += 1
        x = None
        if checkpoints is not None and day_count in checkpoints:
            snapshots[day_count] = state.w.copy()
    return day_count, snapshots


def _coding_pass(source, dictionary_for_day, coding_config):
    codes = []
    day_count = 0
    it = _slice_passes(source)
    while True:
        try:
            day_slice = next(it)
        except StopIteration:
            break
        day_count += 1
        x = np.asarray(day_slice, dtype=np.float64)
        day_slice = None
        w = dictionary_for_day(day_count)
        if x.shape[1] == 0:
            codes.append(np.zeros((w.shape[1], 0)))
        else:
            codes.append(nnls(w, x, config=coding_config))
        x = None
    return codes


def fit_onmf(
    source,
    rank,
    beta=0.7,
    plan=None,
    config=None,
    decay_per="step",
    coding_config=None,
):
    """Run online NMF over a re-iterable sequence of day matrices.

    ``source`` may be a TermTensor, a 3-way array, a list of matrices,
    or a zero-argument callable returning a fresh iterator (so huge
    corpora can stream from disk twice: once to learn W, once to code
    each day against the final W). Returns ``(w, codes)`` with one
    code matrix per day, empty days coded as (rank, 0).
    """
    if plan is None:
        plan = MinibatchPlan()
    first = _peek_terms(source)
    state = init_onmf_state(
        first, rank, beta=beta, seed=plan.seed, config=config,
        decay_per=decay_per,
    )
    _learning_pass(source, state, plan)
    w = state.w
    codes = _coding_pass(source, lambda _day: w, coding_config)
    return w, codes


def _peek_terms(source):
    it = _slice_passes(source)
    try:
        first = next(it)
    except StopIteration:
        raise ValueError("source yields no day slices") from None
    n_terms = np.asarray(first).shape[0]
    first = None
    it = None
    return n_terms


def sequential_onmf(
    source,
    rank,
    checkpoint_schedule,
    beta=0.7,
    plan=None,
    config=None,
    decay_per="step",
    coding_config=None,
):
    """Online NMF with dictionary snapshots at scheduled days.

    One continuous learning run covers all days (the step counter is
    never reset); the dictionary is snapshotted after each checkpoint
    day and the days of each segment are coded against their segment's
    snapshot. A trailing checkpoint at the final day is implied when
    the schedule does not end there. Returns a list of
    ``(w_snapshot, codes)`` pairs, one per segment.
    """
    if plan is None:
        plan = MinibatchPlan()
    schedule = [int(d) for d in checkpoint_schedule]
    if schedule != sorted(set(schedule)):
        raise ValueError("checkpoint_schedule must be strictly increasing")
    if schedule and schedule[0] < 1:
        raise ValueError("checkpoint days are 1-based")
    first = _peek_terms(source)
    state = init_onmf_state(
        first, rank, beta=beta, seed=plan.seed, config=config,
        decay_per=decay_per,
    )
    n_days, snapshots = _learning_pass(
        source, state, plan, checkpoints=set(schedule)
    )
    if schedule and schedule[-1] > n_days:
        raise ValueError(
            "checkpoint day %d beyond the %d-day corpus"
            % (schedule[-1], n_days)
        )
    if not schedule or schedule[-1] < n_days:
        schedule.append(n_days)
        snapshots[n_days] = state.w.copy()

    def dictionary_for_day(day):
        for cp in schedule:
            if day <= cp:
                return snapshots[cp]
        return snapshots[schedule[-1]]

    codes = _coding_pass(source, dictionary_for_day, coding_config)
    segments = []
    start = 0
    for cp in schedule:
        segments.append((snapshots[cp], codes[start:cp]))
        start = cp
    return segments
