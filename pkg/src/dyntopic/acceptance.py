"""Runnable verification gates for the whole package.

Each check is a self-contained experiment with fixed seeds and a
stated budget; the CLI's ``bench`` subcommand runs them all and the
test suite runs them one by one. The thresholds encode either exact
mathematical guarantees (monotonicity, oracle agreement) or
artifact-chosen cutoffs for the qualitative claims (pulse-topic
recovery), and each check reports a one-line detail string with the
measured numbers.
"""

from __future__ import annotations

import time
import weakref
from dataclasses import dataclass

import numpy as np

from .ncpd import fit_ncpd
from .nmf import code as nmf_code
from .nmf import fit_nmf
from .online_ncpd import fit_oncpd, init_oncpd_state, oncpd_code, oncpd_step
from .online_nmf import MinibatchPlan, fit_onmf, init_onmf_state, onmf_step
from .synth import PlantedSpec, PlantedTopic, gen_planted, recovery_score
from .tensor_core import (
    SolverConfig,
    cp_reconstruct,
    kkt_residual,
    nnls,
    nonneg_lasso,
)
from .topics import daily_prevalence, summarize_topic
from .vectorizer import tokenize, filter_terms


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self):
        return "%s %s (%.2fs): %s" % (
            "PASS" if self.passed else "FAIL",
            self.name,
            self.seconds,
            self.detail,
        )


def enumerate_nonneg_lasso(design, target, lam=0.0):
    """Reference oracle: global optimum by support enumeration.

    For every support S the stationarity system is
    ``G_SS h_S = corr_S - lam/2``; feasible solutions are compared on
    the exact objective ``||t - Dh||^2 + lam*sum(h)``. Exponential in
    the column count, which the callers keep at 8 or less.
    """
    design = np.asarray(design, dtype=float)
    target = np.asarray(target, dtype=float)
    r = design.shape[1]
    gram = design.T @ design
    corr = design.T @ target
    base = float(target @ target)
    best_h = np.zeros(r)
    best_obj = base  # the empty support
    for mask in range(1, 1 << r):
        idx = np.flatnonzero([(mask >> k) & 1 for k in range(r)])
        g_ss = gram[np.ix_(idx, idx)]
        c_s = corr[idx] - 0.5 * lam
        try:
            sol = np.linalg.solve(g_ss, c_s)
        except np.linalg.LinAlgError:
            sol = np.linalg.lstsq(g_ss, c_s, rcond=None)[0]
        if sol.min(initial=0.0) < 0.0:
            continue
        obj = (
            base
            - 2.0 * float(sol @ corr[idx])
            + float(sol @ g_ss @ sol)
            + lam * float(sol.sum())
        )
        if obj < best_obj:
            best_obj = obj
            best_h = np.zeros(r)
            best_h[idx] = sol
    return best_h, best_obj


def _lasso_objective(design, target, h, lam):
    resid = target - design @ h
    return float(resid @ resid) + lam * float(np.sum(h))


def check_nmf_monotonicity():
    """Batch NMF objective never increases, across 50 random seeds."""
    t0 = time.time()
    worst = 0.0
    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        x = rng.random((20, 15))
        model = fit_nmf(x, 5, SolverConfig(max_iterations=60, tolerance=1e-12, seed=seed))
        trace = np.asarray(model.objective_trace)
        rises = trace[1:] - trace[:-1]
        slack = 1e-10 * np.maximum(np.abs(trace[:-1]), 1.0)
        worst = max(worst, float(np.max(rises - slack, initial=-np.inf)))
    passed = worst <= 0.0
    return CheckResult(
        "nmf-monotonicity",
        passed,
        "max rise beyond slack %.3e over 50 seeds" % worst,
        time.time() - t0,
    )


def check_ncpd_monotonic_recovery():
    """NCPD objective monotone; exact rank-2 tensor recovered < 1e-3."""
    t0 = time.time()
    rng = np.random.default_rng(42)
    x = rng.random((8, 8, 8))
    model = fit_ncpd(x, 3, SolverConfig(max_iterations=200, tolerance=1e-12, seed=3))
    trace = np.asarray(model.objective_trace)
    rises = trace[1:] - trace[:-1]
    slack = 1e-8 * np.maximum(np.abs(trace[:-1]), 1.0)
    worst = float(np.max(rises - slack, initial=-np.inf))

    gen = np.random.default_rng(7)
    a = gen.random((10, 2))
    b = gen.random((8, 2))
    c = gen.random((6, 2))
    planted = cp_reconstruct(a, b, c)
    fit = fit_ncpd(planted, 2, SolverConfig(max_iterations=2000, tolerance=1e-14, seed=11))
    rel = fit.final_objective / np.linalg.norm(planted)
    passed = worst <= 0.0 and rel < 1e-3
    return CheckResult(
        "ncpd-monotonic-recovery",
        passed,
        "max rise beyond slack %.3e; recovery rel error %.2e" % (worst, rel),
        time.time() - t0,
    )


def check_solver_oracles():
    """nnls and nonneg_lasso vs support enumeration on 1000 instances."""
    t0 = time.time()
    rng = np.random.default_rng(123)
    worst_gap = -np.inf
    worst_kkt = 0.0
    for i in range(1000):
        m = int(rng.integers(1, 9))
        r = int(rng.integers(1, 9))
        design = rng.random((m, r))
        target = rng.random(m) * 2.0 - 0.5
        if i % 2 == 0:
            lam = 0.0
            h = nnls(design, target)
        else:
            lam = float(rng.random() * 2.0)
            h = nonneg_lasso(design, target, lam)
        _, oracle_obj = enumerate_nonneg_lasso(design, target, lam)
        gap = _lasso_objective(design, target, h, lam) - oracle_obj
        worst_gap = max(worst_gap, gap)
        worst_kkt = max(worst_kkt, kkt_residual(design, target, h, lam))
    passed = worst_gap < 1e-4 and worst_kkt < 1e-6
    return CheckResult(
        "solver-oracles",
        passed,
        "worst objective gap %.2e, worst KKT %.2e" % (worst_gap, worst_kkt),
        time.time() - t0,
    )


def check_coding_equivalence():
    """Implicit-Gram tensor coding equals materialized-design lasso."""
    t0 = time.time()
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(200):
        n1 = int(rng.integers(1, 5))
        n2 = int(rng.integers(1, 5))
        n3 = int(rng.integers(1, 5))
        r = int(rng.integers(1, 4))
        lam = float(rng.random() * 2.0)
        state = init_oncpd_state(
            (n1, n2, n3), r, lam=lam, seed=int(rng.integers(1 << 31))
        )
        x = rng.random((n1, n2, n3))
        h_implicit = oncpd_code(x, state)
        design = np.stack(
            [
                np.einsum(
                    "i,j,k->ijk", state.a[:, k], state.b[:, k], state.c[:, k]
                ).ravel()
                for k in range(r)
            ],
            axis=1,
        )
        h_explicit = nonneg_lasso(design, x.ravel(), lam)
        worst = max(worst, float(np.max(np.abs(h_implicit - h_explicit))))
    passed = worst <= 1e-8
    return CheckResult(
        "coding-equivalence",
        passed,
        "max coordinate difference %.2e over 200 instances" % worst,
        time.time() - t0,
    )


def _stationary_stream(seed=0, n_days=90, m=50, rank=5, docs=100, noise=0.05):
    """Day slices from one fixed dictionary, plus clipped Gaussian noise."""
    rng = np.random.default_rng(seed)
    w_true = rng.random((m, rank))
    slices = []
    for _ in range(n_days):
        h = rng.random((rank, docs))
        x = w_true @ h
        if noise > 0.0:
            x = x + np.maximum(0.0, rng.normal(0.0, noise, size=x.shape))
        slices.append(x)
    return w_true, slices


def check_online_batch_agreement():
    """Online NMF lands within 10% of batch NMF on a stationary stream."""
    t0 = time.time()
    _, slices = _stationary_stream(seed=20)
    rank, beta = 5, 0.7
    plan = MinibatchPlan(batch_size=50, inner_iterations=100, seed=20)
    # Hot-loop coding budget: polish off, as the solver config documents.
    # The final coding pass keeps the polished default.
    learn_cfg = SolverConfig(max_iterations=120, tolerance=1e-9, polish=False)
    w, codes = fit_onmf(slices, rank, beta=beta, plan=plan, config=learn_cfg)
    online_obj = sum(
        float(np.linalg.norm(x - w @ h) ** 2) for x, h in zip(slices, codes)
    )
    concat = np.concatenate(slices, axis=1)
    batch = fit_nmf(
        concat, rank, SolverConfig(max_iterations=500, tolerance=1e-9, seed=20)
    )
    batch_obj = batch.final_objective
    ratio = online_obj / batch_obj
    passed = online_obj <= 1.1 * batch_obj
    return CheckResult(
        "online-batch-agreement",
        passed,
        "online %.4f vs batch %.4f (ratio %.3f)" % (online_obj, batch_obj, ratio),
        time.time() - t0,
    )


def pulse_fixture(seed=99):
    """30 days x 200 terms x 50 docs: three persistent topics plus one
    three-day pulse on days 10-12, disjoint 50-term supports, sigma 0.05.

    Amplitudes sit near 10 so the planted mass dominates the dense
    truncated-noise floor (about 4 mass units per document at 0.05);
    the persistent profiles get distinct shapes so greedy matching is
    not deciding between lookalike columns.
    """
    n_days, n_terms, docs = 30, 200, 50
    shapes = [
        np.full(n_days, 1.0),
        np.linspace(0.5, 1.5, n_days),
        np.linspace(1.5, 0.5, n_days),
    ]
    topics = []
    for k in range(4):
        dist = np.zeros(n_terms)
        dist[k * 50 : (k + 1) * 50] = 1.0 / 50.0
        if k < 3:
            profile = 10.0 * shapes[k]
        else:
            profile = np.zeros(n_days)
            profile[9:12] = 12.0  # days 10-12, 1-based
        topics.append(PlantedTopic(term_dist=dist, profile=profile))
    spec = PlantedSpec(
        n_days=n_days,
        n_terms=n_terms,
        docs_per_day=docs,
        topics=topics,
        noise_level=0.05,
        seed=seed,
    )
    return spec, gen_planted(spec)


def check_pulse_topic_claim():
    """Tensor method resolves a three-day pulse topic better than NMF."""
    t0 = time.time()
    spec, tensor = pulse_fixture()
    profiles = np.stack([t.profile for t in spec.topics], axis=1)
    pulse_idx = 3

    cp = fit_ncpd(
        tensor, 4, SolverConfig(max_iterations=700, tolerance=1e-10, seed=1)
    )
    ncpd_scores = recovery_score(cp.a, profiles)
    ncpd_pulse = float(ncpd_scores.cosines[pulse_idx])

    flat = np.concatenate(
        [tensor.values[t] for t in range(spec.n_days)], axis=1
    )
    nmf = fit_nmf(flat, 4, SolverConfig(max_iterations=500, tolerance=1e-9, seed=1))
    codes = [nmf_code(tensor.values[t], nmf.w) for t in range(spec.n_days)]
    prevalence = daily_prevalence(codes)
    nmf_scores = recovery_score(prevalence.values.T, profiles)
    nmf_pulse = float(nmf_scores.cosines[pulse_idx])

    passed = ncpd_pulse >= 0.90 and nmf_pulse <= ncpd_pulse
    return CheckResult(
        "pulse-topic-claim",
        passed,
        "pulse cosine ncpd %.3f vs nmf %.3f (thresholds artifact-chosen)"
        % (ncpd_pulse, nmf_pulse),
        time.time() - t0,
    )


def check_mm_descent():
    """Online NCPD surrogate never increases on a repeated tensor."""
    t0 = time.time()
    rng = np.random.default_rng(31)
    x = rng.random((5, 4, 3))
    state = init_oncpd_state((5, 4, 3), 2, beta=1.0, lam=0.0, seed=8)
    worst_step = -np.inf
    worst_seq = -np.inf
    prev = None
    for _ in range(100):
        oncpd_step(state, x)
        before, after = state.surrogate_trace[-1]
        worst_step = max(worst_step, after - before - 1e-8 * max(1.0, abs(before)))
        if prev is not None:
            worst_seq = max(worst_seq, after - prev - 1e-8 * max(1.0, abs(prev)))
        prev = after
    passed = worst_step <= 0.0 and worst_seq <= 0.0
    return CheckResult(
        "mm-descent",
        passed,
        "max per-step rise %.3e, max across-step rise %.3e (beyond slack)"
        % (worst_step, worst_seq),
        time.time() - t0,
    )


class TrackingLoader:
    """Re-iterable slice source that counts simultaneously alive slices."""

    def __init__(self, slices):
        self._slices = [np.asarray(s, dtype=float) for s in slices]
        self._refs = []
        self.max_alive = 0

    def _note(self, arr):
        self._refs = [w for w in self._refs if w() is not None]
        self._refs.append(weakref.ref(arr))
        alive = sum(1 for w in self._refs if w() is not None)
        self.max_alive = max(self.max_alive, alive)

    def __call__(self):
        for s in self._slices:
            arr = s.copy()
            self._note(arr)
            yield arr
            del arr


def _state_bytes(state):
    return state.w.nbytes + state.gram_agg.nbytes + state.cross_agg.nbytes


def check_memory_contracts():
    """Online fits keep at most one slice resident; state size is flat in T."""
    t0 = time.time()
    rng = np.random.default_rng(17)
    slices = [rng.random((12, 9)) for _ in range(8)]
    loader = TrackingLoader(slices)
    fit_onmf(loader, 3, plan=MinibatchPlan(batch_size=4, inner_iterations=2, seed=0))
    onmf_alive = loader.max_alive

    tensors = [rng.random((4, 5, 3)) for _ in range(10)]
    stream = TrackingLoader(tensors)
    fit_oncpd(stream(), 2, lam=0.5, seed=2)
    oncpd_alive = stream.max_alive

    sizes = []
    for n_days in (6, 12):
        state = init_onmf_state(10, 3, seed=0)
        for t in range(n_days):
            onmf_step(state, rng.random((10, 4)))
        sizes.append(_state_bytes(state))
    flat = sizes[0] == sizes[1]

    passed = onmf_alive <= 1 and oncpd_alive <= 1 and flat
    return CheckResult(
        "memory-contracts",
        passed,
        "max alive slices onmf %d, oncpd %d; state bytes %d vs %d after 2x days"
        % (onmf_alive, oncpd_alive, sizes[0], sizes[1]),
        time.time() - t0,
    )


def check_preprocessing_fixtures():
    """Tokenizer, filters, idf and summarization hand fixtures, exactly."""
    import datetime as dt

    from .corpus import Document
    from .vectorizer import build_vocab, tfidf_matrix

    t0 = time.time()
    failures = []
    if tokenize("Stay Home! https://t.co/x") != ["stay", "home", "https", "co"]:
        failures.append("tokenize url fixture")
    if tokenize("COVID-19 cases") != ["covid", "19", "cases"]:
        failures.append("tokenize hyphen fixture")
    if filter_terms(["coronavirus", "covid19", "recovered", "discover"]) != [
        "recovered",
        "discover",
    ]:
        failures.append("pandemic-term filter fixture")
    if filter_terms(["123", "covid", "19"]) != []:
        failures.append("no-alphabet filter fixture")

    day = dt.date(2020, 3, 1)
    docs = [
        Document(id="a", date=day, text="the cat sat", engagement=0),
        Document(id="b", date=day, text="the cat", engagement=0),
    ]
    vocab = build_vocab(docs)
    if vocab.terms != ["cat", "cat sat", "sat"]:
        failures.append("two-document vocabulary")
    idf = vocab.idf()
    idf_sat = idf[vocab.index["sat"]]
    if abs(idf_sat - (np.log(1.5) + 1.0)) > 1e-12:
        failures.append("idf(sat) fixture")
    mat = tfidf_matrix(docs, vocab)
    norm = float(np.sqrt(1.0 + 2.0 * idf_sat**2))
    cat_weight = float(mat[vocab.index["cat"], 0])
    if abs(cat_weight - 1.0 / norm) > 1e-12:
        failures.append("tfidf column normalization")
    if abs(cat_weight - 0.4494364165) > 1e-9:
        failures.append("tfidf normalized cat weight")

    summary = summarize_topic({"stay": 0.4, "safe": 0.3, "stay safe": 0.25}, 3)
    if [t for t, _ in summary.entries] != ["stay safe"]:
        failures.append("bigram-subsumption fixture")
    passed = not failures
    return CheckResult(
        "preprocessing-fixtures",
        passed,
        "all exact" if passed else "failed: " + ", ".join(failures),
        time.time() - t0,
    )


def check_fit_determinism():
    """Every CLI fit method, run twice with one seed, writes identical files."""
    import filecmp
    import os
    import shutil
    import tempfile
    from contextlib import redirect_stdout
    import io

    from . import cli
    from .vectorizer import save_tensor

    t0 = time.time()
    rng = np.random.default_rng(3)
    tensor = rng.random((6, 20, 8))
    mismatches = []
    workdir = tempfile.mkdtemp(prefix="dyntopic-accept-")
    try:
        tensor_dir = os.path.join(workdir, "vec")
        os.makedirs(tensor_dir)
        save_tensor(tensor, os.path.join(tensor_dir, "tensor.bin"))
        for model in ("nmf", "onmf", "ncpd", "oncpd"):
            outs = []
            for attempt in (0, 1):
                out = os.path.join(workdir, "%s_%d" % (model, attempt))
                argv = [
                    "fit",
                    "--input",
                    tensor_dir,
                    "--model",
                    model,
                    "--rank",
                    "3",
                    "--seed",
                    "5",
                    "--iterations",
                    "40",
                    "--inner",
                    "3",
                    "--batch",
                    "4",
                    "--count",
                    "10",
                    "--width",
                    "4",
                    "--output",
                    out,
                ]
                buf = io.StringIO()
                with redirect_stdout(buf):
                    rc = cli.main(argv)
                if rc != 0:
                    mismatches.append("%s run failed rc=%d" % (model, rc))
                outs.append(out)
            if len(outs) == 2:
                names = sorted(
                    os.path.relpath(os.path.join(base, f), outs[0])
                    for base, _dirs, files in os.walk(outs[0])
                    for f in files
                    if f.endswith(".csv")
                )
                if not names:
                    mismatches.append("%s wrote no csv files" % model)
                for name in names:
                    other = os.path.join(outs[1], name)
                    if not os.path.exists(other):
                        mismatches.append("%s/%s missing in rerun" % (model, name))
                        continue
                    same = filecmp.cmp(
                        os.path.join(outs[0], name), other, shallow=False
                    )
                    if not same:
                        mismatches.append("%s/%s differs" % (model, name))
    finally:
        shutil.rmtree(workdir, ignore_errors=True)
    passed = not mismatches
    return CheckResult(
        "fit-determinism",
        passed,
        "all model files bitwise identical" if passed else "; ".join(mismatches),
        time.time() - t0,
    )


ALL_CHECKS = [
    ("nmf-monotonicity", check_nmf_monotonicity),
    ("ncpd-monotonic-recovery", check_ncpd_monotonic_recovery),
    ("solver-oracles", check_solver_oracles),
    ("coding-equivalence", check_coding_equivalence),
    ("online-batch-agreement", check_online_batch_agreement),
    ("pulse-topic-claim", check_pulse_topic_claim),
    ("mm-descent", check_mm_descent),
    ("memory-contracts", check_memory_contracts),
    ("preprocessing-fixtures", check_preprocessing_fixtures),
    ("fit-determinism", check_fit_determinism),
]


def run_all(names=None):
    """Run the named checks (all by default) and return their results."""
    wanted = set(names) if names else None
    results = []
    for name, fn in ALL_CHECKS:
        if wanted is not None and name not in wanted:
            continue
        results.append(fn())
    return results
