"""Dense matrix/3-tensor kernels and the two nonnegative solvers.

Matrices and tensors are plain float64 ndarrays. Mode-n unfoldings use
the standard column ordering in which the remaining index with the
lowest mode number varies fastest, which makes the factorization
identity ``unfold(cp_reconstruct(a, b, c), 1) == a @ khatri_rao(c, b).T``
hold exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SolverConfig:
    """Iteration budget and numerical guards shared by all solvers.

    ``polish`` lets :func:`nnls` finish with one exact least-squares
    solve on the support its iterations identified; hot inner loops
    that call the solver thousands of times turn it off.
    """

    max_iterations: int = 500
    tolerance: float = 1e-8
    epsilon: float = 1e-12
    seed: int = 0
    polish: bool = True

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")


# Tight budget used when a caller does not supply a config; chosen so the
# small subproblems these solvers see reach KKT residuals well below 1e-6.
_TIGHT = SolverConfig(max_iterations=10000, tolerance=1e-14)


def unfold(x, mode):
    """Mode-n unfolding of a third-order tensor.

    Parameters
    ----------
    x : ndarray, shape (n1, n2, n3)
    mode : int
        1, 2 or 3. Fibers of this mode become columns of the result;
        the remaining indices are ordered with the lower-numbered mode
        varying fastest.

    Returns
    -------
    ndarray, shape (n_mode, prod of the other two dims)
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 3:
        raise ValueError("unfold expects a 3-way tensor, got ndim=%d" % x.ndim)
    if mode not in (1, 2, 3):
        raise ValueError("mode must be 1, 2 or 3")
    return np.reshape(np.moveaxis(x, mode - 1, 0), (x.shape[mode - 1], -1), order="F")


def fold(mat, mode, dims):
    """Inverse of :func:`unfold`: rebuild the (n1, n2, n3) tensor."""
    mat = np.asarray(mat, dtype=float)
    if mode not in (1, 2, 3):
        raise ValueError("mode must be 1, 2 or 3")
    dims = tuple(int(d) for d in dims)
    rest = tuple(d for i, d in enumerate(dims) if i != mode - 1)
    moved = np.reshape(mat, (dims[mode - 1],) + rest, order="F")
    return np.moveaxis(moved, 0, mode - 1)


def khatri_rao(a, b):
    """Column-wise Kronecker product.

    Column k of the result is ``kron(a[:, k], b[:, k])``, so for inputs
    of shapes (n1, r) and (n2, r) the output has shape (n1 * n2, r) with
    the ``b`` index varying fastest.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("khatri_rao expects two matrices")
    if a.shape[1] != b.shape[1]:
        raise ValueError(
            "column count mismatch: %d vs %d" % (a.shape[1], b.shape[1])
        )
    return (a[:, np.newaxis, :] * b[np.newaxis, :, :]).reshape(-1, a.shape[1])


def hadamard(a, b):
    """Entrywise product of two same-shape arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("shape mismatch: %s vs %s" % (a.shape, b.shape))
    return a * b


def cp_reconstruct(a, b, c, weights=None):
    """Sum of rank-1 outer products defined by CP factor matrices.

    ``out[i, j, k] = sum_t weights[t] * a[i, t] * b[j, t] * c[k, t]``
    with weights defaulting to all ones.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    if not (a.ndim == b.ndim == c.ndim == 2):
        raise ValueError("factors must be matrices")
    r = a.shape[1]
    if b.shape[1] != r or c.shape[1] != r:
        raise ValueError(
            "rank mismatch: %d, %d, %d" % (a.shape[1], b.shape[1], c.shape[1])
        )
    if weights is None:
        weights = np.ones(r)
    else:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (r,):
            raise ValueError("weights must have length %d" % r)
    return np.einsum("t,it,jt,kt->ijk", weights, a, b, c, optimize=True)


def _top_eigenvalue(g, epsilon):
    """Power-iteration estimate of the largest eigenvalue of a PSD matrix."""
    r = g.shape[0]
    v = np.full(r, 1.0 / np.sqrt(r))
    lam = 0.0
    for _ in range(60):
        w = g @ v
        nrm = np.linalg.norm(w)
        if nrm <= epsilon:
            break
        new_lam = float(v @ w)
        v = w / nrm
        if abs(new_lam - lam) <= 1e-13 * max(abs(lam), 1.0):
            lam = new_lam
            break
        lam = new_lam
    return max(lam, epsilon)


def nnls(design, target, config=None):
    """Nonnegative least squares by projected gradient.

    Minimizes ``||target - design @ h||_F^2`` over ``h >= 0`` with fixed
    step 1/L, where L is a power-iteration estimate of the largest
    eigenvalue of ``design.T @ design``. Iterates until the relative
    objective change drops below ``config.tolerance`` or the iteration
    budget runs out.

    Parameters
    ----------
    design : ndarray, shape (m, r)
    target : ndarray, shape (m,) or (m, k)
        A matrix target is solved column by column (the iterations are
        carried jointly, which is equivalent for this separable problem).
    config : SolverConfig, optional

    Returns
    -------
    ndarray, shape (r,) or (r, k), entrywise >= 0
    """
    cfg = config or _TIGHT
    design = np.asarray(design, dtype=float)
    target = np.asarray(target, dtype=float)
    if not np.all(np.isfinite(design)) or not np.all(np.isfinite(target)):
        raise ValueError("nnls requires finite inputs")
    single = target.ndim == 1
    t = target[:, np.newaxis] if single else target
    if design.shape[0] != t.shape[0]:
        raise ValueError(
            "dimension mismatch: design %s vs target %s" % (design.shape, t.shape)
        )

    gram = design.T @ design
    corr = design.T @ t
    step = 1.0 / _top_eigenvalue(gram, cfg.epsilon)
    base = float(np.sum(t * t))

    h = np.zeros_like(corr)
    q = gram @ h
    prev_obj = base
    for _ in range(cfg.max_iterations):
        h = np.maximum(0.0, h - step * (q - corr))
        q = gram @ h
        obj = base + float(np.sum(h * (q - 2.0 * corr)))
        if abs(prev_obj - obj) < cfg.tolerance * max(abs(prev_obj), cfg.epsilon):
            break
        prev_obj = obj
    if cfg.polish:
        h = _polish_support(gram, corr, h)
    return h[:, 0] if single else h


def _active_set_column(gram, c, h0):
    # First-order methods identify a near-optimal support long before
    # they pin down the values on a badly conditioned face, so finish
    # with exact solves restricted to the positive support: step back
    # to the boundary and drop coordinates while the restricted
    # solution is infeasible, then add the worst KKT-violating zero
    # coordinate and repeat. ``c`` already absorbs any -lam/2 shift, so
    # the quadratic h'Gh - 2h'c ranks candidates for the lasso too.
    # The starting point is only returned improved, never worsened.
    r = h0.shape[0]
    obj0 = float(h0 @ (gram @ h0 - 2.0 * c))
    support = np.flatnonzero(h0 > 0.0)
    current = h0[support].copy()
    tol = 1e-10 * max(1.0, float(np.abs(c).max(initial=0.0)))
    best_obj, best = obj0, None
    for _round in range(2 * r + 4):
        sol = None
        for _ in range(support.size + 1):
            if support.size == 0:
                sol = np.zeros(0)
                break
            g_ss = gram[np.ix_(support, support)]
            sol = np.linalg.lstsq(g_ss, c[support], rcond=None)[0]
            gap = float(np.abs(g_ss @ sol - c[support]).max())
            if gap > 1e-8 * max(1.0, float(np.abs(c[support]).max())):
                # Singular face whose linear tilt has no stationary
                # point (lam shifts c out of range(G)): the objective
                # falls along the null-space tilt until a coordinate
                # leaves, so slide there and re-solve the smaller face.
                vals, vecs = np.linalg.eigh(g_ss)
                null = vecs[:, vals <= max(float(vals.max(initial=0.0)), 1.0) * 1e-12]
                tilt = null @ (null.T @ c[support])
                falling = tilt < 0.0
                if not falling.any():
                    sol = None
                    break
                with np.errstate(divide="ignore", invalid="ignore"):
                    steps = np.where(falling, -current / tilt, np.inf)
                alpha = float(steps.min())
                current = np.maximum(0.0, current + alpha * tilt)
                current[steps <= alpha] = 0.0
                keep = current > 0.0
                support = support[keep]
                current = current[keep]
                sol = None
                continue
            if sol.min(initial=0.0) >= 0.0:
                break
            move = sol - current
            blocking = move < 0.0
            with np.errstate(divide="ignore", invalid="ignore"):
                steps = np.where(blocking, -current / move, np.inf)
            alpha = min(float(steps.min()), 1.0)
            current = np.maximum(0.0, current + alpha * move)
            current[steps <= alpha] = 0.0  # blocking coords leave exactly
            keep = current > 0.0
            support = support[keep]
            current = current[keep]
            sol = None
        if sol is None or sol.min(initial=0.0) < 0.0:
            break
        candidate = np.zeros(r)
        candidate[support] = sol
        grad = gram @ candidate - c  # half the true gradient
        obj_cand = float(candidate @ (gram @ candidate - 2.0 * c))
        if best is None or obj_cand < best_obj:
            best_obj, best = obj_cand, candidate
        off = np.ones(r, dtype=bool)
        off[support] = False
        violating = np.flatnonzero(off & (grad < -tol))
        if violating.size == 0:
            break
        entering = violating[np.argmin(grad[violating])]
        support = np.append(support, entering)
        current = candidate[support].copy()
    if best is not None and best_obj <= obj0:
        return best
    return h0


def _polish_support(gram, corr, h, lam=0.0):
    for j in range(h.shape[1]):
        h[:, j] = _active_set_column(gram, corr[:, j] - 0.5 * lam, h[:, j])
    return h


def nonneg_lasso(design, target, lam, config=None):
    """Nonnegative L1-regularized least squares by coordinate descent.

    Minimizes ``||target - design @ h||^2 + lam * sum(h)`` over ``h >= 0``
    using cyclic coordinate descent with the closed-form update
    ``h_k = max(0, (d_k . residual_excluding_k - lam/2) / ||d_k||^2)``.
    An all-zero design column pins its coordinate at 0. With ``lam=0``
    this agrees with :func:`nnls` on full-rank problems.
    """
    cfg = config or _TIGHT
    if lam < 0:
        raise ValueError("lam must be >= 0")
    design = np.asarray(design, dtype=float)
    target = np.asarray(target, dtype=float)
    if not np.all(np.isfinite(design)) or not np.all(np.isfinite(target)):
        raise ValueError("nonneg_lasso requires finite inputs")
    if target.ndim != 1 or design.ndim != 2 or design.shape[0] != target.shape[0]:
        raise ValueError("design must be (m, r) and target (m,)")

    r = design.shape[1]
    sq_norms = np.einsum("ij,ij->j", design, design)
    h = np.zeros(r)
    residual = target.copy()
    for _ in range(cfg.max_iterations):
        max_delta = 0.0
        for k in range(r):
            if sq_norms[k] <= cfg.epsilon:
                continue
            old = h[k]
            rho = design[:, k] @ residual + old * sq_norms[k]
            new = max(0.0, (rho - 0.5 * lam) / sq_norms[k])
            if new != old:
                residual += design[:, k] * (old - new)
                h[k] = new
                max_delta = max(max_delta, abs(new - old))
        if max_delta < cfg.tolerance * max(1.0, float(np.max(h, initial=0.0))):
            break
    if cfg.polish:
        h = _active_set_column(design.T @ design, design.T @ target - 0.5 * lam, h)
    return h


def nonneg_lasso_gram(gram, corr, lam, config=None):
    """Coordinate descent for the nonnegative lasso given only its
    normal-equation statistics.

    Solves the same problem as :func:`nonneg_lasso` for a design D and
    target y known only through ``gram = D.T @ D`` and ``corr = D.T @ y``,
    which is what the implicit coding path of the online tensor method
    provides. Coordinates with a zero diagonal are pinned at 0.
    """
    cfg = config or _TIGHT
    if lam < 0:
        raise ValueError("lam must be >= 0")
    gram = np.asarray(gram, dtype=float)
    corr = np.asarray(corr, dtype=float)
    r = corr.shape[0]
    if gram.shape != (r, r):
        raise ValueError("gram must be (r, r) matching corr")

    h = np.zeros(r)
    q = np.zeros(r)  # gram @ h, maintained incrementally
    diag = np.diag(gram)
    for _ in range(cfg.max_iterations):
        max_delta = 0.0
        for k in range(r):
            if diag[k] <= cfg.epsilon:
                continue
            old = h[k]
            rho = corr[k] - (q[k] - diag[k] * old)
            new = max(0.0, (rho - 0.5 * lam) / diag[k])
            if new != old:
                q += gram[:, k] * (new - old)
                h[k] = new
                max_delta = max(max_delta, abs(new - old))
        if max_delta < cfg.tolerance * max(1.0, float(np.max(h, initial=0.0))):
            break
    if cfg.polish:
        h = _active_set_column(gram, corr - 0.5 * lam, h)
    return h


def kkt_residual(design, target, h, lam=0.0):
    """Max violation of the first-order conditions at ``h >= 0``.

    For the objective ``||target - design @ h||^2 + lam * sum(h)`` the
    gradient is ``g = 2 design.T (design @ h - target) + lam``; at the
    optimum every positive coordinate has ``g_k = 0`` and every zero
    coordinate has ``g_k >= 0``.
    """
    design = np.asarray(design, dtype=float)
    target = np.asarray(target, dtype=float)
    h = np.asarray(h, dtype=float)
    g = 2.0 * design.T @ (design @ h - target) + lam
    active = h > 0
    res = 0.0
    if np.any(active):
        res = float(np.max(np.abs(g[active])))
    if np.any(~active):
        res = max(res, float(np.max(-g[~active], initial=0.0)))
    return res


def save_matrix_csv(mat, path):
    """Write a matrix as headerless row-major CSV (round-trip precision)."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in mat:
            fh.write(",".join("%.17g" % v for v in row))
            fh.write("\n")


def load_matrix_csv(path):
    """Read a matrix written by :func:`save_matrix_csv`."""
    return np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
