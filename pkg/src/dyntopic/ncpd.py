"""Batch nonnegative CP tensor decomposition via multiplicative updates.

Approximates a 3-way nonnegative tensor by a sum of ``rank`` outer
products a_k x b_k x c_k with all factors nonnegative. Each sweep
applies a multiplicative update to the day, term and document factors
in turn; the matricized-tensor-times-Khatri-Rao products are formed
with einsum so the Khatri-Rao matrix itself is never materialized.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .tensor_core import SolverConfig, load_matrix_csv, save_matrix_csv
from .vectorizer import TermTensor

DEFAULT_CONFIG = SolverConfig(max_iterations=2000, tolerance=1e-6)


@dataclass
class CpModel:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    objective_trace: list
    rank: int
    config: SolverConfig

    @property
    def final_objective(self):
        return self.objective_trace[-1]

    @property
    def dims(self):
        return (self.a.shape[0], self.b.shape[0], self.c.shape[0])


def _values(x):
    if isinstance(x, TermTensor):
        return x.values
    return np.asarray(x, dtype=np.float64)


def mttkrp(x, factors, mode):
    """Matricized tensor times Khatri-Rao product for one mode (1-based)."""
    a, b, c = factors
    if mode == 1:
        return np.einsum("ijk,jr,kr->ir", x, b, c, optimize=True)
    if mode == 2:
        return np.einsum("ijk,ir,kr->jr", x, a, c, optimize=True)
    if mode == 3:
        return np.einsum("ijk,ir,jr->kr", x, a, b, optimize=True)
    raise ValueError("mode must be 1, 2 or 3")


def fit_ncpd(x, rank, config=None):
    """Fit a rank-``rank`` nonnegative CP model to a 3-way tensor.

    The objective trace holds the (unsquared) Frobenius reconstruction
    error at initialization and after every full sweep. Stops early
    when the relative change of the objective falls below tolerance.
    """
    if config is None:
        config = DEFAULT_CONFIG
    x = _values(x)
    if x.ndim != 3:
        raise ValueError("x must have 3 axes")
    if np.min(x, initial=0.0) < 0.0:
        raise ValueError("x must be nonnegative")
    if rank < 1:
        raise ValueError("rank must be >= 1")
    n1, n2, n3 = x.shape
    if rank >= max(n1, n2, n3):
        warnings.warn(
            "rank %d >= largest axis %d; decomposition is not compressive"
            % (rank, max(n1, n2, n3)),
            stacklevel=2,
        )
    rng = np.random.default_rng(config.seed)
    a = 1.0 - rng.random((n1, rank))
    b = 1.0 - rng.random((n2, rank))
    c = 1.0 - rng.random((n3, rank))
    eps = config.epsilon
    norm_x_sq = float(np.sum(x * x))

    def objective():
        # ||X - sum_k a_k o b_k o c_k||_F via the factor Grams; clip the
        # tiny negative values that cancellation can produce.
        inner = float(np.sum(mttkrp(x, (a, b, c), 3) * c))
        gram = (a.T @ a) * (b.T @ b) * (c.T @ c)
        val = norm_x_sq - 2.0 * inner + float(np.sum(gram))
        return float(np.sqrt(max(val, 0.0)))

    trace = [objective()]
    for _ in range(config.max_iterations):
        a *= mttkrp(x, (a, b, c), 1) / (a @ ((b.T @ b) * (c.T @ c)) + eps)
        b *= mttkrp(x, (a, b, c), 2) / (b @ ((a.T @ a) * (c.T @ c)) + eps)
        c *= mttkrp(x, (a, b, c), 3) / (c @ ((a.T @ a) * (b.T @ b)) + eps)
        obj = objective()
        trace.append(obj)
        prev = trace[-2]
        if abs(prev - obj) <= config.tolerance * max(abs(prev), eps):
            break
    return CpModel(
        a=a, b=b, c=c, objective_trace=trace, rank=rank, config=config
    )


def temporal_prevalence(model, normalize="day"):
    """Topic-by-day prevalence read off the day factor.

    The document and term column norms are folded into the day factor
    first (each b_k, c_k scaled to unit l1 norm) so that a topic's
    trajectory reflects its total mass. ``normalize="day"`` scales each
    day column to sum 1, ``normalize="topic"`` scales each topic row to
    sum 1; all-zero columns or rows stay zero.
    """
    if normalize not in ("day", "topic"):
        raise ValueError("normalize must be 'day' or 'topic'")
    scale = np.sum(np.abs(model.b), axis=0) * np.sum(np.abs(model.c), axis=0)
    p = (model.a * scale).T.copy()
    if normalize == "day":
        sums = p.sum(axis=0)
        sums[sums == 0.0] = 1.0
        p /= sums
    else:
        sums = p.sum(axis=1)
        sums[sums == 0.0] = 1.0
        p /= sums[:, None]
    return p


def save_cp_model(model, directory, kind="ncpd"):
    """Write A.csv, B.csv, C.csv and meta.json under ``directory``."""
    if kind not in ("ncpd", "oncpd"):
        raise ValueError("kind must be 'ncpd' or 'oncpd', got %r" % (kind,))
    os.makedirs(directory, exist_ok=True)
    save_matrix_csv(model.a, os.path.join(directory, "A.csv"))
    save_matrix_csv(model.b, os.path.join(directory, "B.csv"))
    save_matrix_csv(model.c, os.path.join(directory, "C.csv"))
    meta = {
        "kind": kind,
        "rank": int(model.rank),
        "seed": int(model.config.seed),
        "iterations": len(model.objective_trace) - 1,
        "final_objective": float(model.final_objective),
    }
    with open(os.path.join(directory, "meta.json"), "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")
    return directory


def load_cp_model(directory, config=None):
    """Read a model directory written by :func:`save_cp_model`."""
    with open(os.path.join(directory, "meta.json"), "r", encoding="utf-8") as f:
        meta = json.load(f)
    if meta.get("kind") not in ("ncpd", "oncpd"):
        raise ValueError("%s does not hold a CP model" % directory)
    a = load_matrix_csv(os.path.join(directory, "A.csv"))
    b = load_matrix_csv(os.path.join(directory, "B.csv"))
    c = load_matrix_csv(os.path.join(directory, "C.csv"))
    if config is None:
        config = replace(DEFAULT_CONFIG, seed=int(meta.get("seed", 0)))
    return CpModel(
        a=a,
        b=b,
        c=c,
        objective_trace=[float(meta["final_objective"])],
        rank=int(meta["rank"]),
        config=config,
    )
