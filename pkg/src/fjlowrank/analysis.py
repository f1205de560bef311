"""Post-optimization summaries: per-topic weight shifts and degree growth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import spearmanr

from .errors import ValidationError
from .model import LowRankModel


def topic_weight_change(X_before, X_after):
    """Column-sum change per topic; positive means the topic gained weight."""
    A = np.asarray(X_before, dtype=float)
    B = np.asarray(X_after, dtype=float)
    if A.shape != B.shape:
        raise ValidationError(f"shape mismatch: {A.shape} vs {B.shape}")
    return B.sum(axis=0) - A.sum(axis=0)


@dataclass
class TopicTable:
    delta: np.ndarray
    tau_s: np.ndarray
    tau_z_before: np.ndarray
    tau_z_after: np.ndarray

    def rows(self):
        for j in range(len(self.delta)):
            yield {
                "topic": j,
                "delta": float(self.delta[j]),
                "tau_s": float(self.tau_s[j]),
                "tau_z_before": float(self.tau_z_before[j]),
                "tau_z_after": float(self.tau_z_after[j]),
            }


def topic_table(Y, X_before, X_after, s, z_before, z_after) -> TopicTable:
    Y = np.asarray(Y, dtype=float)
    n = Y.shape[1]
    for name, v in (("s", s), ("z_before", z_before), ("z_after", z_after)):
        if np.shape(v) != (n,):
            raise ValidationError(f"{name} must have length {n}")
    return TopicTable(topic_weight_change(X_before, X_after), Y @ s, Y @ z_before, Y @ z_after)


def influence_scores(Y):
    """Total recommendation weight each user receives across topics."""
    return np.asarray(Y, dtype=float).sum(axis=0)


def degree_increase_rate(model: LowRankModel):
    """Timeline degree over original degree, per user."""
    deg = model.graph.degrees
    if np.any(deg <= 0):
        raise ValidationError("every vertex needs a positive degree")
    return model.ax_degree / deg


def grouped_stats(values, key, groups=20):
    """Mean and population std of ``values`` over equal-size groups of ``key``.

    Users are sorted by ascending key (stable, so ties keep index order) and
    cut into ``groups`` contiguous groups whose sizes differ by at most one.
    """
    values = np.asarray(values, dtype=float)
    key = np.asarray(key, dtype=float)
    if values.shape != key.shape:
        raise ValidationError("values and key must align")
    groups = max(1, min(int(groups), len(values)))
    order = np.argsort(key, kind="stable")
    out = []
    for g, idx in enumerate(np.array_split(order, groups)):
        out.append(
            {
                "group": g,
                "size": int(len(idx)),
                "key_min": float(key[idx].min()),
                "key_max": float(key[idx].max()),
                "mean": float(values[idx].mean()),
                "std": float(values[idx].std()),
            }
        )
    return out


def rank_correlation(a, b):
    """Spearman correlation; 0.0 when either input is constant."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        return 0.0
    return float(spearmanr(a, b).statistic)
