"""Undirected weighted graphs stored in compressed sparse row form.

Edge-list text format: one edge per line, ``u v [w]`` with 0-based integer
vertex ids and an optional positive weight (default 1.0). ``#`` starts a
comment. Inputs with 1-based ids must be shifted before loading.
"""

from __future__ import annotations

import io
import logging
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import ParseError, ValidationError

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected weighted graph.

    ``indptr``/``indices``/``weights`` hold the symmetric adjacency in CSR
    layout with neighbors sorted per vertex; every undirected edge appears
    twice with bit-identical weights. Use :func:`from_edges` to build one.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    dropped_self_loops: int = field(default=0)

    def __post_init__(self):
        for arr in (self.indptr, self.indices, self.weights):
            arr.setflags(write=False)

    @property
    def m(self) -> int:
        return len(self.indices) // 2

    @cached_property
    def total_weight(self) -> float:
        """W: sum of weights with each undirected edge counted once."""
        u, v, w = self.edges()
        return float(np.sum(w))

    @property
    def W(self) -> float:
        return self.total_weight

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        A = sp.csr_matrix((self.weights, self.indices, self.indptr), shape=(self.n, self.n))
        A.has_sorted_indices = True
        return A

    @cached_property
    def degrees(self) -> np.ndarray:
        """Weighted degrees D_ii."""
        d = np.add.reduceat(np.append(self.weights, 0.0), self.indptr[:-1]) if self.n else np.zeros(0)
        d[np.diff(self.indptr) == 0] = 0.0
        d.setflags(write=False)
        return d

    @property
    def max_degree(self) -> float:
        return float(self.degrees.max()) if self.n else 0.0

    @cached_property
    def n_components(self) -> int:
        if self.n == 0:
            return 0
        return int(connected_components(self.adjacency, directed=False)[0])

    @property
    def is_connected(self) -> bool:
        return self.n_components == 1

    def neighbors(self, i):
        """Sorted neighbor ids and weights of vertex ``i``."""
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.weights[lo:hi]

    def edges(self):
        """Arrays ``(u, v, w)`` listing each undirected edge once with u < v."""
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        keep = rows < self.indices
        return rows[keep], self.indices[keep], self.weights[keep]

    def dense_laplacian(self) -> np.ndarray:
        """Dense D - A; meant for small graphs and test oracles."""
        A = self.adjacency.toarray()
        return np.diag(A.sum(axis=1)) - A


def from_edges(n, u, v, w=None, dropped_self_loops=0) -> Graph:
    """Build a :class:`Graph` from parallel edge arrays.

    Duplicate undirected edges are merged by summing their weights. Self-loops
    are dropped and added to the ``dropped_self_loops`` count.
    """
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    w = np.ones(len(u)) if w is None else np.asarray(w, dtype=float)
    if not (len(u) == len(v) == len(w)):
        raise ValidationError("edge arrays must have equal length")
    if len(u) and (min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= n):
        raise ValidationError(f"vertex id out of range for n={n}")
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise ValidationError("edge weights must be finite and positive")

    loops = u == v
    if loops.any():
        dropped_self_loops += int(loops.sum())
        u, v, w = u[~loops], v[~loops], w[~loops]

    # merge on the canonical (min, max) orientation, then mirror, so both
    # directions carry the same summed value
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    upper = sp.coo_matrix((w, (lo, hi)), shape=(n, n)).tocsr()
    upper.sum_duplicates()
    A = (upper + upper.T).tocsr()
    A.sort_indices()
    return Graph(
        n=int(n),
        indptr=A.indptr.astype(np.int64),
        indices=A.indices.astype(np.int64),
        weights=A.data.astype(float),
        dropped_self_loops=dropped_self_loops,
    )


def _lines(source):
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def load_edge_list(source, n=None) -> Graph:
    """Parse edge-list text (a string or an iterable of lines).

    ``n`` defaults to one more than the largest vertex id seen.
    """
    us, vs, ws = [], [], []
    for lineno, raw in enumerate(_lines(source), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ParseError(f"expected 'u v [w]', got {raw.strip()!r}", lineno)
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"vertex ids must be integers: {raw.strip()!r}", lineno) from None
        if a < 0 or b < 0:
            raise ParseError("vertex ids must be non-negative (0-based)", lineno)
        wt = 1.0
        if len(parts) == 3:
            try:
                wt = float(parts[2])
            except ValueError:
                raise ParseError(f"bad weight {parts[2]!r}", lineno) from None
            if not np.isfinite(wt) or wt <= 0:
                raise ValidationError(f"line {lineno}: weight must be positive, got {parts[2]}")
        us.append(a)
        vs.append(b)
        ws.append(wt)

    seen = max(max(us, default=-1), max(vs, default=-1)) + 1
    if n is None:
        n = seen
    elif n < seen:
        raise ValidationError(f"n={n} but vertex id {seen - 1} present")
    g = from_edges(n, us, vs, ws)
    if g.dropped_self_loops:
        log.warning("dropped %d self-loop(s)", g.dropped_self_loops)
    return g


def read_edge_list(path, n=None) -> Graph:
    with open(path) as fh:
        return load_edge_list(fh, n=n)


def format_edge_list(g: Graph) -> str:
    u, v, w = g.edges()
    return "".join(f"{a} {b} {x:.17g}\n" for a, b, x in zip(u.tolist(), v.tolist(), w.tolist()))


def write_edge_list(g: Graph, path):
    with open(os.fspath(path), "w") as fh:
        fh.write(format_edge_list(g))


def largest_connected_component(g: Graph):
    """Induced subgraph on the largest component, reindexed densely.

    Returns ``(subgraph, mapping)`` where ``mapping[old]`` is the new id or -1
    for dropped vertices. Ties go to the component holding the smallest
    original vertex id.
    """
    if g.n == 0:
        raise ValidationError("empty graph")
    _, labels = connected_components(g.adjacency, directed=False)
    sizes = np.bincount(labels)
    # labels are assigned in order of first appearance, so the smallest
    # label among the largest components owns the smallest vertex id
    best = int(np.flatnonzero(sizes == sizes.max())[0])
    keep = labels == best
    mapping = np.full(g.n, -1, dtype=np.int64)
    mapping[keep] = np.arange(int(keep.sum()))
    u, v, w = g.edges()
    sel = keep[u]
    return from_edges(int(keep.sum()), mapping[u[sel]], mapping[v[sel]], w[sel]), mapping


def laplacian_matvec(g: Graph, v) -> np.ndarray:
    """(D - A) v, accepting a vector or an n-by-p block."""
    v = np.asarray(v, dtype=float)
    if v.shape[0] != g.n:
        raise ValidationError(f"vector length {v.shape[0]} != n={g.n}")
    d = g.degrees if v.ndim == 1 else g.degrees[:, None]
    return d * v - g.adjacency @ v


def laplacian_quadratic(g: Graph, v) -> float:
    """v^T L v evaluated edge-wise as sum of w_ij (v_i - v_j)^2."""
    u, t, w = g.edges()
    v = np.asarray(v, dtype=float)
    return float(np.sum(w * (v[u] - v[t]) ** 2))
