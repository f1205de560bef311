"""Absolute-accuracy solves with M = diag(shift) + L, shift >= 1.

Every eigenvalue of such an M is at least 1, so ``||M^{-1}||_2 <= 1`` and a
residual ``||b - M x||_2 <= eps`` certifies ``||x - M^{-1} b||_2 <= eps``.

The solve is mixed precision: Jacobi-preconditioned conjugate gradients in
float64 produce corrections, while the residual of the accumulated iterate is
recomputed in extended precision (``np.longdouble``) and drives iterative
refinement. Inside each refinement round the CG iterate is passed through
minimal-residual smoothing, so the reported residual norms never increase.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, ValidationError
from .graph import Graph

EPS_FLOOR = 1e-14
# relative floor: a float64 result cannot be closer than ~u*||x|| to the
# true solution, and ||x|| <= ||b|| here
REL_FLOOR = 1e-15
_U64 = np.finfo(np.float64).eps / 2
_ULD = np.finfo(np.longdouble).eps / 2


@dataclass(frozen=True, eq=False)
class SpdOperator:
    """M = diag(shift) + L(graph) with every shift entry >= 1."""

    graph: Graph
    shift: np.ndarray

    def __post_init__(self):
        shift = np.asarray(self.shift, dtype=float)
        if shift.shape != (self.graph.n,):
            raise ValidationError("shift must have length n")
        if np.any(~np.isfinite(shift)) or np.any(shift < 1.0 - 1e-12):
            raise ValidationError("shift entries must be >= 1")
        shift.setflags(write=False)
        object.__setattr__(self, "shift", shift)

    @property
    def n(self):
        return self.graph.n

    @property
    def diagonal(self):
        return self.shift + self.graph.degrees

    def matvec(self, v):
        v = np.asarray(v, dtype=float)
        d = self.diagonal if v.ndim == 1 else self.diagonal[:, None]
        return d * v - self.graph.adjacency @ v

    def __matmul__(self, v):
        return self.matvec(v)

    def dense(self):
        return np.diag(self.shift) + self.graph.dense_laplacian()


@dataclass
class SolveInfo:
    """Diagnostics for a single-column solve."""

    iterations: int = 0
    rounds: int = 0
    residual: float = 0.0
    error_bound: float = 0.0
    target: float = 0.0
    history: list = field(default_factory=list)


def _norm_ld(r):
    return float(np.sqrt(np.sum(np.square(r, dtype=np.longdouble))))


def _pcg_block(op, B, targets, max_iter, histories):
    """Smoothed Jacobi-PCG on every column of B; stops each at its target.

    Converged columns are frozen (zero step) rather than dropped, which keeps
    the block operations on contiguous arrays. Returns the smoothed iterates
    and the number of iterations performed.
    """
    dinv = 1.0 / op.diagonal[:, None]
    X = np.zeros_like(B)
    R = B.copy()
    Xs = np.zeros_like(B)
    Rs = B.copy()
    Z = dinv * R
    P = Z.copy()
    rz = np.einsum("ij,ij->j", R, Z)
    active = np.sqrt(np.einsum("ij,ij->j", Rs, Rs)) > targets
    it = 0
    while active.any() and it < max_iter:
        it += 1
        Q = op.matvec(P)
        pq = np.einsum("ij,ij->j", P, Q)
        alpha = np.where(active & (pq > 0), rz / np.where(pq > 0, pq, 1.0), 0.0)
        X += alpha * P
        R -= alpha * Q
        # minimal-residual smoothing: rs <- rs + eta (r - rs), eta minimising ||rs||
        dR = R - Rs
        dd = np.einsum("ij,ij->j", dR, dR)
        eta = np.where(active & (dd > 0), -np.einsum("ij,ij->j", Rs, dR) / np.where(dd > 0, dd, 1.0), 0.0)
        Rs += eta * dR
        Xs += eta * (X - Xs)
        rs_norm = np.sqrt(np.einsum("ij,ij->j", Rs, Rs))
        for c in np.flatnonzero(active).tolist():
            histories[c].append(float(rs_norm[c]))
        Z = dinv * R
        rz_new = np.einsum("ij,ij->j", R, Z)
        beta = np.where(rz > 0, rz_new / np.where(rz > 0, rz, 1.0), 0.0)
        P = Z + beta * P
        rz = rz_new
        # a recurrence residual of exactly zero also means convergence
        active &= (rs_norm > targets) & (rz_new > 0)
    return Xs, it


def _residual_block(op, b_ld, X, chunk=8):
    """b - M X in extended precision, a few columns at a time."""
    g = op.graph
    R = b_ld - op.diagonal.astype(np.longdouble)[:, None] * X
    if g.m:
        w = g.weights.astype(np.longdouble)[:, None]
        empty = np.diff(g.indptr) == 0
        for lo in range(0, X.shape[1], chunk):
            hi = min(lo + chunk, X.shape[1])
            prod = w * X[g.indices, lo:hi]
            prod = np.concatenate([prod, np.zeros((1, hi - lo), dtype=np.longdouble)])
            rows = np.add.reduceat(prod, g.indptr[:-1], axis=0)
            rows[empty] = 0
            R[:, lo:hi] += rows
    return R


def _rounding_terms(op):
    """(gamma, ||M||_inf) for the longdouble residual error bound."""
    g = op.graph
    row_len = int(np.diff(g.indptr).max()) if g.n else 0
    gamma = (row_len + 2) * _ULD
    return gamma, float(np.max(op.diagonal + g.degrees)) if g.n else 0.0


def effective_eps(op, eps, b_norm):
    """Tolerance actually enforced for a right-hand side of norm ``b_norm``.

    ``eps`` is raised to ``max(1e-14, 1e-15 ||b||)`` and to twice the
    rounding overhead of certifying a float64 result, so that the target is
    always attainable.
    """
    gamma, m_inf = _rounding_terms(op)
    overhead = _U64 * b_norm + gamma * (1.0 + m_inf) * b_norm
    return max(float(eps), EPS_FLOOR, REL_FLOOR * float(b_norm), 2.0 * overhead)


def solve(op: SpdOperator, b, eps, max_iter=None, return_info=False):
    """Return x with ||x - M^{-1} b||_2 <= eps for each column of ``b``.

    ``b`` may be a vector or an n-by-p block whose columns are solved
    independently; ``eps`` may be a scalar or one value per column. Requests
    below the attainable floor (see :func:`effective_eps`) are raised to it.

    Raises ConvergenceError when the total CG iteration count exceeds
    ``max_iter`` (default 10 n + 1000) before the target is certified.
    """
    b = np.asarray(b, dtype=float)
    single = b.ndim == 1
    B = b[:, None] if single else b
    n, p = B.shape
    if n != op.n:
        raise ValidationError(f"right-hand side has length {n}, operator has n={op.n}")
    if not np.all(np.isfinite(B)):
        raise ValidationError("right-hand side must be finite")
    eps = np.broadcast_to(np.asarray(eps, dtype=float), (p,))
    if np.any(~(eps > 0)):
        raise ValidationError("eps must be positive")
    if max_iter is None:
        max_iter = 10 * n + 1000

    b_ld = B.astype(np.longdouble)
    b_norms = np.array([_norm_ld(b_ld[:, c]) for c in range(p)])
    targets = np.array([effective_eps(op, e, bn) for e, bn in zip(eps, b_norms)], dtype=float)
    gamma, m_inf = _rounding_terms(op)

    X = np.zeros((n, p), dtype=np.longdouble)
    R = b_ld.copy()
    res = b_norms.copy()
    bound = res.copy()
    infos = [SolveInfo(target=t) for t in targets]
    for c in range(p):
        infos[c].history.append(float(res[c]))
    pending = bound > targets
    total_iters = np.zeros(p, dtype=int)

    while pending.any():
        cols = np.flatnonzero(pending)
        budget = max_iter - int(total_iters[cols].max())
        if budget <= 0:
            c = int(cols[np.argmax(res[cols])])
            raise ConvergenceError(
                f"solver iteration cap {max_iter} reached; residual {res[c]:.3e} > target {targets[c]:.3e}",
                residual=float(res[c]),
                iterations=int(total_iters[c]),
            )
        # each round aims a little below the target, or ten digits below
        # the current residual when the target is further away than that
        inner = np.maximum(0.25 * targets[cols], 1e-10 * res[cols])
        hist = {c: [] for c in range(len(cols))}
        D, used = _pcg_block(op, R[:, cols].astype(float), inner, budget, hist)
        for j, c in enumerate(cols.tolist()):
            infos[c].history.extend(hist[j])
            infos[c].rounds += 1
        total_iters[cols] += used
        X[:, cols] += D
        R[:, cols] = _residual_block(op, b_ld[:, cols], X[:, cols])
        for c in cols.tolist():
            res[c] = _norm_ld(R[:, c])
            xn = _norm_ld(X[:, c])
            # rounding the result to float64 moves it by at most u*||x||; the
            # longdouble residual itself carries error ~ u_ld (||b|| + ||M|| ||x||)
            bound[c] = res[c] + _U64 * xn + gamma * (b_norms[c] + m_inf * xn)
            infos[c].history.append(float(res[c]))
        pending = bound > targets

    out = X.astype(float)
    for c in range(p):
        infos[c].iterations = int(total_iters[c])
        infos[c].residual = float(res[c])
        infos[c].error_bound = float(bound[c])
    if single:
        out = out[:, 0]
        infos = infos[0]
    return (out, infos) if return_info else out
