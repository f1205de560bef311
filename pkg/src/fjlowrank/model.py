"""Timeline-augmented FJ model with a rank-2k adjacency update.

Given a user-topic matrix ``X`` (n x k) and an influence-topic matrix ``Y``
(k x n), the timeline contributes the adjacency

    A_X = c (X Y + Y^T X^T),   c = C W / (2 n),

whose Laplacian is added to the graph Laplacian. Writing ``U = [X, Y^T]`` and
``V = [Y; X^T]`` gives ``A_X = c U V``, so the expressed opinions

    z_X = (I + L + diag(A_X 1) - c U V)^{-1} s

can be obtained from a handful of sparse solves with
``M = I + L + diag(A_X 1)`` and one dense 2k x 2k system (Woodbury).
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import ConditioningError, ParseError, ValidationError
from .graph import Graph
from .solver import SpdOperator, solve

log = logging.getLogger(__name__)

DENSE_CAP = 3000
ROW_TOL = 1e-9
PIVOT_MIN = 1e-12


def _check_stochastic(M, name, tol=ROW_TOL):
    if np.any(~np.isfinite(M)):
        raise ValidationError(f"{name} has non-finite entries")
    if np.any(M < 0) or np.any(M > 1):
        raise ValidationError(f"{name} entries must lie in [0, 1]")
    dev = np.abs(M.sum(axis=1) - 1.0)
    if dev.size and dev.max() > tol:
        row = int(np.argmax(dev))
        raise ValidationError(f"{name} row {row} sums to {M[row].sum():.12g}, expected 1")


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


class LowRankModel:
    """Immutable bundle of graph, topic matrices and weight fraction ``C``.

    ``check=False`` skips the row-stochastic and connectivity checks; it is
    meant for perturbation experiments (finite differences), where ``X`` only
    needs to stay entry-wise nonnegative.
    """

    def __init__(self, graph: Graph, X, Y, C, check=True):
        X = _frozen(X)
        Y = _frozen(Y)
        if X.ndim != 2 or Y.ndim != 2:
            raise ValidationError("X and Y must be 2-d")
        n, k = X.shape
        if n != graph.n or Y.shape != (k, n):
            raise ValidationError(f"expected X {graph.n}x{k} and Y {k}x{graph.n}, got {X.shape} and {Y.shape}")
        C = float(C)
        if not (np.isfinite(C) and C >= 0):
            raise ValidationError("C must be a nonnegative real")
        if np.any(X < 0) or np.any(Y < 0):
            raise ValidationError("X and Y must be nonnegative")
        if check:
            if k > n:
                raise ValidationError("k must not exceed n")
            if not graph.is_connected:
                raise ValidationError("graph must be connected")
            _check_stochastic(X, "X")
            _check_stochastic(Y, "Y")
        self.graph = graph
        self.X = X
        self.Y = Y
        self.C = C
        self.W = graph.total_weight
        self.scale = C * self.W / (2.0 * n) if n else 0.0

    @property
    def n(self):
        return self.graph.n

    @property
    def k(self):
        return self.X.shape[1]

    def with_X(self, X, check=True):
        return LowRankModel(self.graph, X, self.Y, self.C, check=check)

    def with_C(self, C):
        return LowRankModel(self.graph, self.X, self.Y, C, check=False)

    @cached_property
    def ax_degree(self):
        """A_X 1, from the factors in O(nk)."""
        d = self.scale * (self.X @ self.Y.sum(axis=1) + self.Y.T @ self.X.sum(axis=0))
        d.setflags(write=False)
        return d

    @cached_property
    def operator(self) -> SpdOperator:
        return SpdOperator(self.graph, 1.0 + self.ax_degree)

    @property
    def U(self):
        return np.hstack([self.X, self.Y.T])

    @property
    def V(self):
        return np.vstack([self.Y, self.X.T])

    def weight_norms(self):
        """Entry-wise 1-norms of the graph adjacency (2W) and of A_X (C W)."""
        return {"graph_adjacency_l11": 2.0 * self.W, "timeline_adjacency_l11": float(self.ax_degree.sum())}

    def dense_ax(self):
        XY = self.X @ self.Y
        return self.scale * (XY + XY.T)


def weight_identity(X, Y):
    """Entry-wise 1-norm of ``X Y + Y^T X^T`` for nonnegative factors.

    Both terms have the same total, ``(1^T X)(Y 1)``, so no n x n matrix is
    needed. For row-stochastic inputs the value is 2n.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    return 2.0 * float(X.sum(axis=0) @ Y.sum(axis=1))


def ax_matvec(model: LowRankModel, v):
    """A_X v = c (X (Y v) + Y^T (X^T v))."""
    v = np.asarray(v, dtype=float)
    if v.shape[0] != model.n:
        raise ValidationError(f"vector length {v.shape[0]} != n={model.n}")
    return model.scale * (model.X @ (model.Y @ v) + model.Y.T @ (model.X.T @ v))


def _top_singular(B, iters=100, rtol=1e-9):
    """Largest singular value of a small matrix by power iteration on B^T B."""
    B = np.asarray(B, dtype=float)
    if B.size == 0 or not np.any(B):
        return 0.0, True
    G = B.T @ B
    x = np.ones(G.shape[0]) / np.sqrt(G.shape[0])
    est = 0.0
    for _ in range(iters):
        y = G @ x
        ny = np.linalg.norm(y)
        if ny == 0:
            # the start vector hit the null space; restart on a column of G
            x = G[:, int(np.argmax(np.abs(G).sum(axis=0)))].copy()
            x /= np.linalg.norm(x)
            continue
        x = y / ny
        new = float(np.sqrt(x @ G @ x))
        if abs(new - est) <= rtol * new:
            return new, True
        est = new
    return est, False


@dataclass(frozen=True)
class SpectralReport:
    norm_estimate: float
    threshold: float
    satisfied: bool
    converged: bool = True

    def as_dict(self):
        return {
            "norm_estimate": self.norm_estimate,
            "threshold": self.threshold if np.isfinite(self.threshold) else None,
            "satisfied": self.satisfied,
            "converged": self.converged,
        }


def _threshold(model):
    return np.inf if model.scale == 0 else 0.99 / model.scale


def spectral_condition(model: LowRankModel, R=None) -> SpectralReport:
    """Estimate ||V M^{-1} U||_2 and compare it with 0.99 (2n / C W).

    ``R`` may carry a precomputed ``M^{-1} U``; otherwise its columns are
    solved to accuracy 1e-10.
    """
    thr = _threshold(model)
    if model.scale == 0:
        return SpectralReport(0.0, float(thr), True)
    if R is None:
        R = solve(model.operator, model.U, 1e-10)
    est, conv = _top_singular(model.V @ R)
    return SpectralReport(est, float(thr), bool(est <= thr), conv)


@dataclass
class OpinionEstimate:
    """Result of the Woodbury opinion estimate.

    ``verified`` is False when the spectral premise behind the accuracy
    guarantee does not hold for this instance; the vector is still returned.
    """

    z: np.ndarray
    verified: bool
    spectral: SpectralReport | None = None
    budgets: dict = field(default_factory=dict)
    solver_iterations: int = 0


def _budgets(model, s, eps):
    """Tolerances for the three solve stages, with Frobenius norms of U and V."""
    n, k, c = model.n, model.k, model.scale
    nu = float(np.hypot(np.linalg.norm(model.X), np.linalg.norm(model.Y)))
    nv = nu  # V is U^T up to a block swap, so the norms coincide
    ns = float(np.linalg.norm(s))
    cw = model.C * model.W
    two_n = 2.0 * n
    uv = nu * nv
    eps_z1 = eps / 4 * min(1.0, two_n / (200 * cw * uv))
    inner = 100.0 if ns == 0 else min(100.0, (two_n / cw) * (eps / 4) / (uv * ns))
    eps_r = min(0.009 * two_n / (cw * nv), two_n / (1e5 * cw * nv) * inner) / (2 * k)
    eps_z2 = (two_n / cw) * eps / 4
    return {"eps_z1": eps_z1, "eps_R": eps_r, "eps_z2": eps_z2}


def estimate_opinions(model: LowRankModel, s, eps) -> OpinionEstimate:
    """Woodbury estimate of z_X with target accuracy ``eps`` in the 2-norm."""
    s = np.asarray(s, dtype=float)
    if s.shape != (model.n,):
        raise ValidationError(f"s must have length {model.n}")
    if not eps > 0:
        raise ValidationError("eps must be positive")
    op = model.operator
    if model.scale == 0:
        z, info = solve(op, s, eps, return_info=True)
        return OpinionEstimate(z, True, SpectralReport(0.0, np.inf, True), {}, info.iterations)
    if not np.any(s):
        return OpinionEstimate(np.zeros(model.n), True)

    b = _budgets(model, s, eps)
    c = model.scale
    U, V = model.U, model.V
    z1, i1 = solve(op, s, b["eps_z1"], return_info=True)
    y1 = V @ z1
    R, infos = solve(op, U, b["eps_R"], return_info=True)
    VR = V @ R
    S = np.eye(VR.shape[0]) - c * VR
    lu, piv = scipy.linalg.lu_factor(S, check_finite=True)
    if np.min(np.abs(np.diag(lu))) < PIVOT_MIN:
        raise ConditioningError(
            "Woodbury system is numerically singular; check spectral_condition(model)"
        )
    y2 = scipy.linalg.lu_solve((lu, piv), y1)
    y3 = U @ y2
    z2, i2 = solve(op, y3, b["eps_z2"], return_info=True)
    spectral = spectral_condition(model, R)
    if not spectral.satisfied:
        log.debug("spectral condition fails: %.4g > %.4g", spectral.norm_estimate, spectral.threshold)
    iters = i1.iterations + max(i.iterations for i in infos) + i2.iterations
    return OpinionEstimate(z1 + c * z2, spectral.satisfied, spectral, b, iters)


def approx_opinions(model: LowRankModel, s, eps):
    """Vector part of :func:`estimate_opinions`."""
    return estimate_opinions(model, s, eps).z


def dense_system(model: LowRankModel):
    """I + L + L_X as a dense matrix."""
    if model.n > DENSE_CAP:
        raise ValidationError(f"dense evaluation limited to n <= {DENSE_CAP}")
    A = model.dense_ax()
    return np.eye(model.n) + model.graph.dense_laplacian() + np.diag(A.sum(axis=1)) - A


def exact_opinions_dense(model: LowRankModel, s):
    """z_X by a dense Cholesky factorization; a reference for small n."""
    s = np.asarray(s, dtype=float)
    if s.shape != (model.n,):
        raise ValidationError(f"s must have length {model.n}")
    K = dense_system(model)
    return scipy.linalg.cho_solve(scipy.linalg.cho_factor(K), s)


def exact_objective_dense(model: LowRankModel, s):
    s = np.asarray(s, dtype=float)
    return float(s @ exact_opinions_dense(model, s))


def approx_objective(model: LowRankModel, s, eps):
    """s^T z~ with the opinions computed to accuracy eps / sqrt(n)."""
    s = np.asarray(s, dtype=float)
    return float(s @ approx_opinions(model, s, eps / np.sqrt(model.n)))


@dataclass(frozen=True)
class Bounds:
    """Entry-wise box [lower, upper] intersected with unit row sums."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _frozen(self.lower)
        hi = _frozen(self.upper)
        if lo.shape != hi.shape or lo.ndim != 2:
            raise ValidationError("lower and upper must be matrices of equal shape")
        if np.any(lo < 0) or np.any(hi > 1) or np.any(lo > hi):
            raise ValidationError("bounds must satisfy 0 <= lower <= upper <= 1")
        if np.any(lo.sum(axis=1) > 1 + 1e-9) or np.any(hi.sum(axis=1) < 1 - 1e-9):
            raise ValidationError("bounds leave some row without a feasible point")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def shape(self):
        return self.lower.shape

    def contains(self, X, tol=1e-9):
        X = np.asarray(X, dtype=float)
        return bool(
            X.shape == self.shape
            and np.all(X >= self.lower)
            and np.all(X <= self.upper)
            and np.all(np.abs(X.sum(axis=1) - 1) <= tol)
        )


def bounds_from_theta(X, theta, frozen=None) -> Bounds:
    """Box of half-width ``theta`` around X, clipped to [0, 1].

    Columns listed in ``frozen`` are pinned to their current values.
    """
    theta = float(theta)
    if not 0 <= theta <= 1:
        raise ValidationError("theta must lie in [0, 1]")
    X = np.asarray(X, dtype=float)
    lo = np.maximum(0.0, X - theta)
    hi = np.minimum(1.0, X + theta)
    if frozen is not None and len(frozen):
        cols = np.asarray(list(frozen), dtype=int)
        if cols.min() < 0 or cols.max() >= X.shape[1]:
            raise ValidationError("frozen topic index out of range")
        lo[:, cols] = X[:, cols]
        hi[:, cols] = X[:, cols]
    return Bounds(lo, hi)


def normalize_rows(M):
    """Scale rows to unit sum.

    Rows already within summation rounding of 1 (k ulps) are left untouched,
    so the operation is idempotent. Elsewhere the rounding left after division
    is absorbed into the largest entry.
    """
    M = np.array(M, dtype=float)
    sums = M.sum(axis=1)
    rows = np.flatnonzero(np.abs(sums - 1.0) > M.shape[1] * np.finfo(float).eps)
    if rows.size:
        sub = M[rows] / sums[rows, None]
        idx = np.argmax(sub, axis=1)
        r = np.arange(len(rows))
        sub[r, idx] = 0.0
        sub[r, idx] = 1.0 - sub.sum(axis=1)
        M[rows] = sub
    return M


def load_matrix(source, tol=1e-6):
    """Parse a row-stochastic TSV matrix and renormalize its rows.

    ``source`` is a string or an iterable of lines. Rows whose sums are more
    than ``tol`` from 1 are rejected.
    """
    lines = source.splitlines() if isinstance(source, str) else source
    rows = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            vals = [float(t) for t in line.split()]
        except ValueError:
            raise ParseError(f"non-numeric entry in {line!r}", lineno) from None
        if rows and len(vals) != len(rows[0]):
            raise ParseError(f"expected {len(rows[0])} columns, found {len(vals)}", lineno)
        rows.append(vals)
    if not rows:
        raise ValidationError("matrix file is empty")
    M = np.array(rows)
    _check_stochastic(M, "matrix", tol=tol)
    return normalize_rows(M)


def read_matrix(path, tol=1e-6):
    with open(os.fspath(path)) as fh:
        return load_matrix(fh, tol)


def format_matrix(M):
    return "".join("\t".join(f"{x:.17g}" for x in row) + "\n" for row in np.asarray(M).tolist())


def write_matrix(M, path):
    with open(os.fspath(path), "w") as fh:
        fh.write(format_matrix(M))


def augmented_indices(model: LowRankModel, s, z, tol=1e-8):
    """Polarization and disagreement on the graph plus the timeline edges.

    The timeline disagreement ``z^T L_X z`` equals
    ``sum(ax_degree z^2) - 2 c (z^T X)(Y z)``. ``z`` should approximate z_X;
    the identity ``P + D = s^T z`` is checked to relative accuracy ``tol``.
    """
    from .fj import Indices
    from .graph import laplacian_quadratic

    s = np.asarray(s, dtype=float)
    z = np.asarray(z, dtype=float)
    P = float(z @ z)
    lx = float(model.ax_degree @ (z * z) - 2.0 * model.scale * (z @ model.X) @ (model.Y @ z))
    D = laplacian_quadratic(model.graph, z) + lx
    total = P + D
    sz = float(s @ z)
    if abs(total - sz) > tol * (1.0 + abs(total)):
        raise ValidationError(f"P + D = {total:.12g} but s^T z = {sz:.12g}; z is not z_X")
    return Indices(P, D, total)
