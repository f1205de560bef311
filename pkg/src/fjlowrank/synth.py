"""Seeded synthetic instances: opinions, topic matrices and graphs.

Random numbers come from the counter-based Philox generator. Each logical
stream gets its own 128-bit key ``(seed, purpose << 40 | index)``: one stream
for the opinions, one per row of X and one per row of Y. Any row can therefore
be regenerated on its own, and the output does not depend on generation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .errors import ValidationError
from .fj import mean_center_rescale
from .graph import Graph, from_edges
from .model import normalize_rows

OPINION_DISTS = ("uniform", "powerlaw", "exponential", "polarized")

_OPINIONS, _XROW, _YROW, _GRAPH = 1, 2, 3, 4
_MASK64 = (1 << 64) - 1


def stream(seed, purpose, index=0) -> np.random.Generator:
    """Independent generator for ``(seed, purpose, index)``."""
    if not 0 <= index < (1 << 40):
        raise ValidationError("stream index out of range")
    return np.random.Generator(np.random.Philox(key=[int(seed) & _MASK64, (purpose << 40) | index]))


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 42
    opinion_dist: str = "polarized"
    k: int = 20
    powerlaw_alpha: float = 2.5
    exp_rate: float = 1.0
    x_sparsity_threshold: float = 0.25
    chunk_count: int = 3
    chunk_weights: tuple = field(default=(0.3, 0.4, 0.3))
    per_topic_user_fraction: float = 0.02

    def __post_init__(self):
        if self.opinion_dist not in OPINION_DISTS:
            raise ValidationError(f"opinion_dist must be one of {OPINION_DISTS}")
        w = np.asarray(self.chunk_weights, dtype=float)
        if len(w) != self.chunk_count or np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise ValidationError("chunk_weights must be chunk_count nonnegative values summing to 1")
        if not 0 < self.per_topic_user_fraction <= 1:
            raise ValidationError("per_topic_user_fraction must lie in (0, 1]")
        if self.powerlaw_alpha <= 1:
            raise ValidationError("powerlaw_alpha must exceed 1")


def powerlaw(rng, size, alpha):
    """Pareto samples with density proportional to x^-alpha on [1, inf)."""
    return (1.0 - rng.random(size)) ** (-1.0 / (alpha - 1.0))


def truncated_exponential(rng, size, rate):
    """Exponential(rate) conditioned on [0, 1], by inverse CDF."""
    return -np.log1p(-rng.random(size) * -np.expm1(-rate)) / rate


def gen_opinions(n, config: SynthConfig):
    if n < 2:
        raise ValidationError("need at least two users")
    rng = stream(config.seed, _OPINIONS)
    dist = config.opinion_dist
    if dist == "uniform":
        raw = rng.random(n)
    elif dist == "powerlaw":
        x = powerlaw(rng, n, config.powerlaw_alpha)
        raw = (x - x.min()) / (x.max() - x.min())
    else:
        raw = truncated_exponential(rng, n, config.exp_rate)
        if dist == "polarized":
            half = math.ceil(n / 2)
            raw[half:] = 1.0 - raw[half:]
    return mean_center_rescale(raw)


def gen_X(n, config: SynthConfig):
    """Sparse row-stochastic user-topic matrix with power-law rows."""
    k = config.k
    if k < 2:
        raise ValidationError("need at least two topics")
    X = np.empty((n, k))
    for i in range(n):
        row = powerlaw(stream(config.seed, _XROW, i), k, config.powerlaw_alpha)
        row /= row.max()
        row[row < config.x_sparsity_threshold] = 0.0
        X[i] = row
    return normalize_rows(X)


def opinion_chunks(s, d):
    """Chunk index in 0..d-1 of each opinion, splitting [-1, 1] evenly."""
    s = np.asarray(s, dtype=float)
    return np.minimum(np.floor((s + 1.0) * d / 2.0), d - 1).astype(int).clip(0)


def chunk_interval(i, d):
    return -1.0 + 2.0 * i / d, -1.0 + 2.0 * (i + 1) / d


def gen_Y(n, config: SynthConfig, s, return_chunks=False):
    """Influence-topic matrix whose topics draw authors from one opinion chunk.

    Chunks without any user are never selected, which is the same as
    resampling until a nonempty chunk comes up.
    """
    s = np.asarray(s, dtype=float)
    if s.shape != (n,):
        raise ValidationError(f"s must have length {n}")
    d = config.chunk_count
    labels = opinion_chunks(s, d)
    members = [np.flatnonzero(labels == i) for i in range(d)]
    w = np.array([wt if len(members[i]) else 0.0 for i, wt in enumerate(config.chunk_weights)])
    if w.sum() <= 0:
        raise ValidationError("every opinion chunk with positive weight is empty")
    w /= w.sum()
    per_topic = math.ceil(config.per_topic_user_fraction * n)
    Y = np.zeros((config.k, n))
    chosen = np.empty(config.k, dtype=int)
    for j in range(config.k):
        rng = stream(config.seed, _YROW, j)
        i = int(rng.choice(d, p=w))
        pool = members[i]
        users = rng.choice(pool, size=min(per_topic, len(pool)), replace=False)
        Y[j, users] = powerlaw(rng, len(users), config.powerlaw_alpha)
        chosen[j] = i
    Y = normalize_rows(Y)
    return (Y, chosen) if return_chunks else Y


def gen_graph(n, seed, attach=5) -> Graph:
    """Preferential-attachment graph with about ``attach * n`` unit-weight edges."""
    if n <= attach:
        raise ValidationError(f"need n > {attach}")
    nx_seed = int(stream(seed, _GRAPH).integers(1 << 32))
    G = nx.barabasi_albert_graph(n, attach, seed=nx_seed)
    e = np.array(G.edges(), dtype=np.int64).reshape(-1, 2)
    return from_edges(n, e[:, 0], e[:, 1])


@dataclass
class Instance:
    graph: Graph
    s: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    config: SynthConfig


def make_instance(n, config: SynthConfig, attach=5) -> Instance:
    s = gen_opinions(n, config)
    return Instance(gen_graph(n, config.seed, attach), s, gen_X(n, config), gen_Y(n, config, s), config)
