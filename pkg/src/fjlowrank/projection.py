"""Euclidean projection of rows onto {x : sum(x) = 1, l <= x <= u}.

The projection is ``x(mu) = clip(v - mu, l, u)`` for the ``mu`` at which the
entries sum to one. ``sum x(mu)`` is piecewise linear and nonincreasing in
``mu`` with kinks at ``v - u`` and ``v - l``; sorting those 2k kinks and
sweeping them locates the crossing segment, which is then interpolated.
All rows are handled together with array operations.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .model import Bounds

FEAS_TOL = 1e-9


def _project(V, L, U):
    n, k = V.shape
    sl, su = L.sum(axis=1), U.sum(axis=1)
    bad = np.flatnonzero((sl > 1 + FEAS_TOL) | (su < 1 - FEAS_TOL) | np.any(L > U, axis=1))
    if bad.size:
        i = int(bad[0])
        raise ValidationError(f"row {i}: infeasible bounds (sum lower {sl[i]:.12g}, sum upper {su[i]:.12g})")

    kinks = np.concatenate([V - U, V - L], axis=1)
    kind = np.concatenate([np.ones((n, k)), -np.ones((n, k))], axis=1)
    # starts sort before ends at equal values, so zero-width boxes cancel out
    order = np.lexsort((-kind, kinks), axis=1) if n else np.zeros((0, 2 * k), dtype=int)
    B = np.take_along_axis(kinks, order, axis=1)
    slope = np.cumsum(np.take_along_axis(kind, order, axis=1), axis=1)
    # g at each kink: g(B_0) = sum(u), then drop by slope * segment length
    drops = slope[:, :-1] * np.diff(B, axis=1)
    G = su[:, None] - np.concatenate([np.zeros((n, 1)), np.cumsum(drops, axis=1)], axis=1)

    hit = G <= 1.0
    r = np.where(hit.any(axis=1), np.argmax(hit, axis=1), 2 * k - 1)
    rows = np.arange(n)
    prev = np.maximum(r - 1, 0)
    a = slope[rows, prev]
    with np.errstate(divide="ignore", invalid="ignore"):
        mu = np.where(
            (r > 0) & (a > 0),
            B[rows, prev] + (G[rows, prev] - 1.0) / a,
            B[rows, r],
        )
    X = np.clip(V - mu[:, None], L, U)

    # a Newton step on mu removes the rounding left by the sweep
    for _ in range(2):
        res = X.sum(axis=1) - 1.0
        free = (X > L) & (X < U)
        nf = free.sum(axis=1)
        fix = (nf > 0) & (np.abs(res) > 0)
        if not fix.any():
            break
        mu = mu + np.where(fix, res / np.maximum(nf, 1), 0.0)
        X = np.clip(V - mu[:, None], L, U)
    return X


def project_rows(V, lower, upper):
    """Project every row of ``V`` onto its box-and-hyperplane set."""
    V = np.asarray(V, dtype=float)
    L = np.broadcast_to(np.asarray(lower, dtype=float), V.shape)
    U = np.broadcast_to(np.asarray(upper, dtype=float), V.shape)
    if V.ndim != 2:
        raise ValidationError("expected a matrix")
    if not np.all(np.isfinite(V)):
        raise ValidationError("cannot project non-finite values")
    return _project(V, L, U)


def project_row(v, lower, upper):
    """Project a single vector; scalar bounds are broadcast."""
    v = np.asarray(v, dtype=float)
    lo = np.broadcast_to(np.asarray(lower, dtype=float), v.shape)
    hi = np.broadcast_to(np.asarray(upper, dtype=float), v.shape)
    return project_rows(v[None, :], lo[None, :], hi[None, :])[0]


def project_matrix(V, bounds: Bounds):
    if np.shape(V) != bounds.shape:
        raise ValidationError(f"matrix shape {np.shape(V)} does not match bounds {bounds.shape}")
    return project_rows(V, bounds.lower, bounds.upper)
