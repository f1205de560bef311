"""Friedkin-Johnsen dynamics on a fixed graph.

Each vertex repeatedly averages its innate opinion (weight 1) with the
expressed opinions of its neighbors (edge weights). The fixed point is
``z = (I + L)^{-1} s`` and the disagreement-polarization index is
``I = sum z_i^2 + sum_edges w (z_i - z_j)^2 = s^T z``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ParseError, ValidationError
from .graph import Graph, laplacian_quadratic
from .solver import SpdOperator, solve

DENSE_LIMIT = 2000


def _vector(x, n, name):
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ValidationError(f"{name} must have length {n}, got shape {x.shape}")
    return x


def fj_step(g: Graph, s, z):
    """One synchronous update of every vertex."""
    s = _vector(s, g.n, "s")
    z = _vector(z, g.n, "z")
    return (s + g.adjacency @ z) / (1.0 + g.degrees)


def iterate(g: Graph, s, steps, z0=None):
    """Apply :func:`fj_step` ``steps`` times starting from ``z0`` (default s)."""
    s = _vector(s, g.n, "s")
    z = s.copy() if z0 is None else _vector(z0, g.n, "z0")
    A, denom = g.adjacency, 1.0 + g.degrees
    for _ in range(int(steps)):
        z = (s + A @ z) / denom
    return z


def equilibrium_exact(g: Graph, s, dense=False):
    """Solve ``(I + L) z = s``.

    The default path uses the iterative solver at absolute accuracy
    ``1e-12 max(1, ||s||)``. ``dense=True`` switches to a Cholesky
    factorization and is meant as a test oracle for n <= 2000.
    """
    s = _vector(s, g.n, "s")
    if not g.is_connected:
        raise ValidationError("graph must be connected")
    if dense:
        if g.n > DENSE_LIMIT:
            raise ValidationError(f"dense mode limited to n <= {DENSE_LIMIT}")
        M = np.eye(g.n) + g.dense_laplacian()
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(M), s)
    op = SpdOperator(g, np.ones(g.n))
    return solve(op, s, 1e-12 * max(1.0, float(np.linalg.norm(s))))


@dataclass(frozen=True)
class Indices:
    P: float
    D: float
    I: float

    def as_dict(self):
        return {"P": self.P, "D": self.D, "I": self.I}


def indices(g: Graph, s, z, check=True) -> Indices:
    """Polarization, disagreement and their sum for the equilibrium ``z``.

    With ``check`` set, the identity ``P + D = s^T z`` is verified; a
    mismatch means ``z`` is not the equilibrium for ``s``.
    """
    s = _vector(s, g.n, "s")
    z = _vector(z, g.n, "z")
    P = float(z @ z)
    D = laplacian_quadratic(g, z)
    total = P + D
    if check:
        sz = float(s @ z)
        if abs(total - sz) > 1e-8 * (1.0 + abs(total)):
            raise ValidationError(
                f"P + D = {total:.12g} but s^T z = {sz:.12g}; z is not the equilibrium for s"
            )
    return Indices(P, D, total)


def mean_center_rescale(raw):
    """Subtract the mean, then scale so the largest magnitude is exactly 1."""
    x = np.asarray(raw, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValidationError("expected a non-empty vector")
    x = x - x.mean()
    peak = np.abs(x).max()
    if not peak > 0:
        raise ValidationError("cannot rescale a constant vector")
    x = x / peak
    # pin the extreme entry so max |x| == 1 holds bit-exactly
    i = int(np.argmax(np.abs(x)))
    x[i] = np.sign(x[i])
    return x


def check_opinions(s, centered=False):
    s = np.asarray(s, dtype=float)
    if np.any(~np.isfinite(s)) or np.any(np.abs(s) > 1 + 1e-12):
        raise ValidationError("opinions must lie in [-1, 1]")
    if centered and abs(s.sum()) > 1e-9 * len(s):
        raise ValidationError("opinions are not mean-centered")
    return s


def load_opinions(source, n=None):
    """Parse one decimal per line from a string or an iterable of lines.

    Blank lines and ``#`` comments are skipped.
    """
    lines = source.splitlines() if isinstance(source, str) else source
    vals = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            vals.append(float(line))
        except ValueError:
            raise ParseError(f"not a number: {line!r}", lineno) from None
    s = check_opinions(np.array(vals))
    if n is not None and len(s) != n:
        raise ValidationError(f"expected {n} opinions, found {len(s)}")
    return s


def read_opinions(path, n=None):
    with open(os.fspath(path)) as fh:
        return load_opinions(fh, n)


def format_opinions(s):
    return "".join(f"{x:.17g}\n" for x in np.asarray(s, dtype=float).tolist())


def write_opinions(s, path):
    with open(path, "w") as fh:
        fh.write(format_opinions(s))
