"""Greedy re-weighting heuristics.

Every round recomputes the expressed opinions, the mean opinion ``z_bar`` and
the topic signals ``tau = Y z``. Then each user moves as much weight as the
bounds allow from one topic ``j'`` to another topic ``j``.

``bl1`` favors topics whose signal is close to the mean opinion. Its
selection rule comes in three readings (see ``BL1_SELECTIONS``):

* ``as_listed``: both j and j' minimise ``|tau - z_bar|``.
* ``as_prose``: j maximises the distance and j' minimises it.
* ``as_named``: j minimises the distance and j' maximises it.

``bl2`` pushes each user toward the topic most opposed to its own opinion. It
takes the weight from the most moderate topic on the user's own side.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import FJError, ValidationError
from .gdpm import TraceRecord
from .model import Bounds, LowRankModel, estimate_opinions, exact_opinions_dense

VARIANTS = ("bl1", "bl2")
BL1_SELECTIONS = ("as_listed", "as_prose", "as_named")


@dataclass(frozen=True)
class TopicSignals:
    z_bar: float
    tau: np.ndarray


def topic_signals(model: LowRankModel, z) -> TopicSignals:
    z = np.asarray(z, dtype=float)
    if z.shape != (model.n,):
        raise ValidationError(f"z must have length {model.n}")
    return TopicSignals(float(z.mean()), model.Y @ z)


@dataclass(frozen=True)
class BaselineRecord(TraceRecord):
    skipped_rows: int = 0
    noop_rows: int = 0


@dataclass
class BaselineResult:
    X_best: np.ndarray
    f_best: float
    f_initial: float
    trace: list = field(default_factory=list)
    best_iter: int = 0
    unverified_evaluations: int = 0

    @property
    def ratio(self):
        return self.f_best / self.f_initial


def _pick(score, eligible, largest=False):
    """Column index per row optimizing ``score`` over eligible entries; -1 if none.

    Ties resolve to the lowest column index.
    """
    fill = -np.inf if largest else np.inf
    masked = np.where(eligible, score, fill)
    idx = np.argmax(masked, axis=1) if largest else np.argmin(masked, axis=1)
    return np.where(eligible.any(axis=1), idx, -1)


def choose_transfers(X, bounds: Bounds, z, sig: TopicSignals, variant, bl1_selection="as_listed"):
    """Per-row (j, j') choices; -1 marks rows without an eligible pair."""
    n, k = X.shape
    head = X < bounds.upper
    slack = X > bounds.lower
    dist = np.broadcast_to(np.abs(sig.tau - sig.z_bar), (n, k))
    if variant == "bl1":
        if bl1_selection not in BL1_SELECTIONS:
            raise ValidationError(f"bl1_selection must be one of {BL1_SELECTIONS}")
        j = _pick(dist, head, largest=bl1_selection == "as_prose")
        jp = _pick(dist, slack, largest=bl1_selection == "as_named")
    elif variant == "bl2":
        zt = np.outer(z, sig.tau)
        j = _pick(-zt, head, largest=True)
        jp = _pick(dist, slack & (zt > 0))
        zero = z == 0
        j[zero] = -1
        jp[zero] = -1
    else:
        raise ValidationError(f"variant must be one of {VARIANTS}")
    return j, jp


def apply_transfers(X, bounds: Bounds, j, jp):
    """Move delta = min(headroom at j, slack at j') within each row."""
    X = np.array(X, dtype=float)
    rows = np.flatnonzero((j >= 0) & (jp >= 0) & (j != jp))
    cj, cjp = j[rows], jp[rows]
    up = bounds.upper[rows, cj] - X[rows, cj]
    down = X[rows, cjp] - bounds.lower[rows, cjp]
    delta = np.minimum(up, down)
    # land exactly on the binding bound so the entry stops being eligible
    X[rows, cj] = np.where(up <= down, bounds.upper[rows, cj], X[rows, cj] + delta)
    X[rows, cjp] = np.where(down <= up, bounds.lower[rows, cjp], X[rows, cjp] - delta)
    return X


def run_baseline(
    model: LowRankModel,
    s,
    bounds: Bounds,
    variant="bl2",
    t_max=10,
    eps=1e-6,
    bl1_selection="as_listed",
    exact=False,
) -> BaselineResult:
    """Run ``t_max`` greedy rounds and return the best matrix visited.

    ``eps`` bounds the error of every objective value. The initial matrix is
    a candidate too, so the returned objective never exceeds the starting one.
    """
    if variant not in VARIANTS:
        raise ValidationError(f"variant must be one of {VARIANTS}")
    if int(t_max) < 0:
        raise ValidationError("t_max must be nonnegative")
    s = np.asarray(s, dtype=float)
    X = np.array(model.X)
    if not bounds.contains(X):
        raise ValidationError("starting matrix violates the bounds")

    unverified = 0

    def evaluate(Xc):
        nonlocal unverified
        m = model.with_X(Xc, check=False)
        if exact:
            z = exact_opinions_dense(m, s)
        else:
            est = estimate_opinions(m, s, eps / np.sqrt(m.n))
            unverified += not est.verified
            z = est.z
        return m, z, float(s @ z)

    t0 = time.perf_counter()
    m, z, f = evaluate(X)
    res = BaselineResult(X, f, f, [BaselineRecord(0, f, float("nan"), time.perf_counter() - t0)])
    for T in range(1, int(t_max) + 1):
        try:
            sig = topic_signals(m, z)
            j, jp = choose_transfers(X, bounds, z, sig, variant, bl1_selection)
            X = apply_transfers(X, bounds, j, jp)
            m, z, f = evaluate(X)
        except FJError as exc:
            raise type(exc)(f"round {T}: {exc}") from exc
        skipped = int(np.sum((j < 0) | (jp < 0)))
        noop = int(np.sum((j >= 0) & (j == jp)))
        res.trace.append(BaselineRecord(T, f, float("nan"), time.perf_counter() - t0, skipped, noop))
        if f < res.f_best:
            res.X_best, res.f_best, res.best_iter = X, f, T
    res.unverified_evaluations = unverified
    return res
