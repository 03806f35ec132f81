"""Batch nonnegative matrix factorization via multiplicative updates.

Factors X ~= W H with W, H >= 0 by alternating the classical
multiplicative update rules, which never increase the squared
Frobenius objective. Used both on single-day matrices and on a whole
corpus flattened to terms-by-(all documents).
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .tensor_core import SolverConfig, load_matrix_csv, nnls, save_matrix_csv

DEFAULT_CONFIG = SolverConfig(max_iterations=500, tolerance=1e-5)


@dataclass
class NmfModel:
    w: np.ndarray
    h: np.ndarray
    objective_trace: list
    rank: int
    config: SolverConfig

    @property
    def final_objective(self):
        return self.objective_trace[-1]


def _check_nonnegative(x, what):
    if np.min(x, initial=0.0) < 0.0:
        raise ValueError("%s must be nonnegative" % what)


def fit_nmf(x, rank, config=None):
    """Factor a nonnegative matrix into ``rank`` nonnegative parts.

    Both factors start from seeded uniform draws on (0, 1] so no entry
    begins at an absorbing zero. The trace records the squared
    Frobenius objective at initialization and after every full update
    sweep; iteration stops early once its relative change drops below
    the configured tolerance.
    """
    if config is None:
        config = DEFAULT_CONFIG
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("x must be a matrix")
    _check_nonnegative(x, "x")
    if rank < 1:
        raise ValueError("rank must be >= 1")
    m, l = x.shape
    if rank >= min(m, l):
        warnings.warn(
            "rank %d >= min(%d, %d); factorization is not compressive"
            % (rank, m, l),
            stacklevel=2,
        )
    rng = np.random.default_rng(config.seed)
    w = 1.0 - rng.random((m, rank))
    h = 1.0 - rng.random((rank, l))
    eps = config.epsilon
    trace = [float(np.linalg.norm(x - w @ h) ** 2)]
    for _ in range(config.max_iterations):
        h *= (w.T @ x) / (w.T @ w @ h + eps)
        w *= (x @ h.T) / (w @ (h @ h.T) + eps)
        obj = float(np.linalg.norm(x - w @ h) ** 2)
        trace.append(obj)
        prev = trace[-2]
        if abs(prev - obj) <= config.tolerance * max(abs(prev), eps):
            break
    return NmfModel(w=w, h=h, objective_trace=trace, rank=rank, config=config)


def code(x, w, config=None):
    """Least-squares nonnegative codes of new columns against fixed W."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != w.shape[0]:
        raise ValueError(
            "x has %d rows but W has %d" % (x.shape[0], w.shape[0])
        )
    _check_nonnegative(x, "x")
    return nnls(w, x, config=config)


def rel_error(x, model):
    """Relative reconstruction error ||X - WH||_F / ||X||_F."""
    x = np.asarray(x, dtype=np.float64)
    denom = np.linalg.norm(x)
    resid = np.linalg.norm(x - model.w @ model.h)
    return float(resid / max(denom, model.config.epsilon))


def save_nmf_model(model, directory, kind="nmf"):
    """Write W.csv, H.csv and meta.json under ``directory``."""
    if kind not in ("nmf", "onmf"):
        raise ValueError("kind must be 'nmf' or 'onmf', got %r" % (kind,))
    os.makedirs(directory, exist_ok=True)
    save_matrix_csv(model.w, os.path.join(directory, "W.csv"))
    save_matrix_csv(model.h, os.path.join(directory, "H.csv"))
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


def load_nmf_model(directory, config=None):
    """Read a model directory written by :func:`save_nmf_model`."""
    with open(os.path.join(directory, "meta.json"), "r", encoding="utf-8") as f:
        meta = json.load(f)
    if meta.get("kind") not in ("nmf", "onmf"):
        raise ValueError("%s does not hold an NMF model" % directory)
    w = load_matrix_csv(os.path.join(directory, "W.csv"))
    h = load_matrix_csv(os.path.join(directory, "H.csv"))
    if config is None:
        config = replace(DEFAULT_CONFIG, seed=int(meta.get("seed", 0)))
    return NmfModel(
        w=w,
        h=h,
        objective_trace=[float(meta["final_objective"])],
        rank=int(meta["rank"]),
        config=config,
    )
