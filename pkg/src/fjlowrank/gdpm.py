"""Accelerated projected gradient descent over the feasible topic matrices.

Each iteration takes one inexact gradient at the current point X and forms

* a projected gradient step ``V = P(X - grad / L)``,
* a step from the start point along the weighted gradient history,
  ``W = P(X0 - G / (2L))`` where ``G`` accumulates ``(t + 1)/2 * grad_t``,
* the next point ``X = tau V + (1 - tau) W`` with ``tau = alpha_T / A_T``.

``P`` is the row-wise projection onto the bounds. The best point seen among
the X and V iterates is returned.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import FJError, ValidationError
from .gradient import gradient_approx, gradient_from_opinions, lipschitz_bound
from .model import Bounds, LowRankModel, estimate_opinions, exact_opinions_dense
from .projection import project_matrix


@dataclass(frozen=True)
class GdpmConfig:
    learning_rate: float | str = 10.0
    max_iters: int = 100
    grad_eps: float = 1e-6
    convergence_ratio: float | None = 0.99999  # None disables the ratio rule
    track_objective: bool = False
    exact: bool = False  # dense opinions; for small test instances only

    def __post_init__(self):
        if self.learning_rate != "theory" and not float(self.learning_rate) > 0:
            raise ValidationError("learning_rate must be positive or 'theory'")
        if int(self.max_iters) < 0:
            raise ValidationError("max_iters must be nonnegative")
        if not self.grad_eps > 0:
            raise ValidationError("grad_eps must be positive")
        if self.convergence_ratio is not None and not 0 < self.convergence_ratio <= 1:
            raise ValidationError("convergence_ratio must lie in (0, 1] or be None")


@dataclass(frozen=True)
class TraceRecord:
    iter: int
    objective: float
    grad_norm: float
    seconds: float


TRACE_FIELDS = ("iter", "objective", "grad_norm", "seconds")


def trace_csv(trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_FIELDS)
    for r in trace:
        w.writerow([r.iter, f"{r.objective:.17g}", f"{r.grad_norm:.17g}", f"{r.seconds:.6f}"])
    return buf.getvalue()


@dataclass
class OptimizeResult:
    X_best: np.ndarray
    f_best: float
    f_initial: float
    trace: list = field(default_factory=list)
    best_iter: int = 0
    best_kind: str = "X"
    iterations: int = 0
    stop_reason: str = "max_iters"
    learning_rate: float = 0.0
    unverified_evaluations: int = 0

    @property
    def ratio(self):
        return reduction_ratio(self.f_initial, self.f_best)


def reduction_ratio(f_before, f_after):
    if not f_before > 0:
        raise ValidationError("reduction ratio needs a positive initial objective")
    return float(f_after) / float(f_before)


class _Oracle:
    """Objective and gradient at a point, exact or Woodbury-based."""

    def __init__(self, model, s, cfg):
        self.model, self.s, self.cfg = model, np.asarray(s, dtype=float), cfg
        self.unverified = 0

    def value_and_grad(self, X):
        m = self.model.with_X(X, check=False)
        if self.cfg.exact:
            z = exact_opinions_dense(m, self.s)
            G = gradient_from_opinions(m, z)
        else:
            G, est = gradient_approx(m, self.s, self.cfg.grad_eps, return_estimate=True)
            self.unverified += not est.verified
            z = est.z
        return float(self.s @ z), G

    def value(self, X):
        m = self.model.with_X(X, check=False)
        if self.cfg.exact:
            return float(self.s @ exact_opinions_dense(m, self.s))
        est = estimate_opinions(m, self.s, self.cfg.grad_eps / np.sqrt(m.n))
        self.unverified += not est.verified
        return float(self.s @ est.z)


def optimize(model: LowRankModel, s, bounds: Bounds, config: GdpmConfig = GdpmConfig(), callback=None) -> OptimizeResult:
    """Minimize the index over the matrices allowed by ``bounds``.

    ``callback(T, X, V, W)``, if given, sees the iterates of every step before
    the next point is evaluated.
    """
    X0 = np.array(model.X)
    if not bounds.contains(X0):
        raise ValidationError("starting matrix violates the bounds")
    if config.learning_rate == "theory":
        Lc = lipschitz_bound(model, s)
        if not Lc > 0:
            Lc = 1.0  # the objective is constant in X
    else:
        Lc = float(config.learning_rate)

    oracle = _Oracle(model, s, config)
    t0 = time.perf_counter()
    X = X0
    f, g = oracle.value_and_grad(X)
    trace = [TraceRecord(0, f, float(np.linalg.norm(g)), time.perf_counter() - t0)]
    res = OptimizeResult(X0, f, f, trace, learning_rate=Lc)

    G = np.zeros_like(X0)
    A = 0.5
    for T in range(1, int(config.max_iters) + 1):
        try:
            V = project_matrix(X - g / Lc, bounds)
            alpha = (T + 1) / 2.0
            G += alpha * g
            W = project_matrix(X0 - G / (2.0 * Lc), bounds)
            A += alpha
            tau = alpha / A
            X = tau * V + (1.0 - tau) * W
            if callback is not None:
                callback(T, X, V, W)
            if config.track_objective:
                fv = oracle.value(V)
                if fv < res.f_best:
                    res.X_best, res.f_best, res.best_iter, res.best_kind = V, fv, T, "V"
            f_prev = f
            f, g = oracle.value_and_grad(X)
        except FJError as exc:
            raise type(exc)(f"iteration {T}: {exc}") from exc
        trace.append(TraceRecord(T, f, float(np.linalg.norm(g)), time.perf_counter() - t0))
        res.iterations = T
        if f < res.f_best:
            res.X_best, res.f_best, res.best_iter, res.best_kind = X, f, T, "X"
        if config.convergence_ratio is not None and f_prev > 0 and f / f_prev > config.convergence_ratio:
            res.stop_reason = "ratio"
            break
    res.unverified_evaluations = oracle.unverified
    return res
