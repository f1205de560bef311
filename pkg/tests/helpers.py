import itertools

import numpy as np

from fjlowrank.graph import from_edges
from fjlowrank.model import LowRankModel, normalize_rows
from fjlowrank.fj import mean_center_rescale


def random_connected_graph(rng, n, extra=None, wlo=0.5, whi=2.0):
    """Random spanning tree plus ``extra`` random edges, uniform weights."""
    parents = np.array([rng.integers(0, i) for i in range(1, n)], dtype=int)
    u = list(range(1, n))
    v = parents.tolist()
    extra = n if extra is None else extra
    if n > 2:
        a = rng.integers(0, n, extra)
        b = rng.integers(0, n, extra)
        keep = a != b
        u += a[keep].tolist()
        v += b[keep].tolist()
    w = rng.uniform(wlo, whi, len(u))
    return from_edges(n, u, v, w)


def random_topics(rng, n, k, sharp=3.0):
    X = normalize_rows(rng.random((n, k)) ** sharp + 1e-3)
    Y = normalize_rows(rng.random((k, n)) ** (2 * sharp) + 1e-6)
    return X, Y


def random_model(rng, n, k, C, **kw):
    g = random_connected_graph(rng, n, **kw)
    X, Y = random_topics(rng, n, k)
    return LowRankModel(g, X, Y, C)


def random_opinions(rng, n):
    return mean_center_rescale(rng.random(n))


def enumerate_oracle(v, l, u):
    """Try every assignment of coordinates to {lower, upper, free}.

    For a given pattern the free coordinates share one shift mu; the candidate
    is kept if it is feasible and satisfies the sign conditions of the KKT
    system. Among valid candidates the closest point wins.
    """
    k = len(v)
    best, best_d = None, np.inf
    for pat in itertools.product(range(3), repeat=k):
        pat = np.array(pat)
        free = pat == 2
        x = np.where(pat == 0, l, u).astype(float)
        if free.any():
            mu = (v[free].sum() + x[~free].sum() - 1.0) / free.sum()
            x[free] = v[free] - mu
        elif abs(x.sum() - 1) > 1e-12:
            continue
        if np.any(x < l - 1e-12) or np.any(x > u + 1e-12) or abs(x.sum() - 1) > 1e-9:
            continue
        d = np.sum((x - v) ** 2)
        if d < best_d:
            best, best_d = x, d
    return best


def segment_oracle(v, l, u):
    """Walk the sorted kinks in plain Python and solve the linear equation
    for mu on the segment where the clipped sum crosses 1."""
    pts = sorted(set((v - u).tolist() + (v - l).tolist()))
    pts = [pts[0] - 1.0] + pts + [pts[-1] + 1.0]

    def total(mu):
        return float(np.clip(v - mu, l, u).sum())

    for a, b in zip(pts, pts[1:]):
        ga, gb = total(a), total(b)
        if ga >= 1.0 >= gb:
            mu = a if ga == gb else a + (ga - 1.0) * (b - a) / (ga - gb)
            return np.clip(v - mu, l, u)
    raise AssertionError("no crossing segment")


def random_problem(rng, k):
    l = rng.uniform(0, 1.0 / k, k) * rng.integers(0, 2, k)
    u = np.minimum(1.0, l + rng.uniform(0, 1, k))
    while u.sum() < 1:
        u = np.minimum(1.0, u * 1.5 + 0.01)
    v = rng.normal(0, 1, k) / np.sqrt(k) + 1.0 / k
    return v, l, u
