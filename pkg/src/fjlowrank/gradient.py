"""Gradient of f(X) = s^T (I + L + L_X)^{-1} s with respect to X.

With z the expressed opinions, a = Y z, h = z * z and b = Y h, the gradient is

    grad = c (2 z a^T - h 1_k^T - 1_n b^T),   c = C W / (2 n),

an n x k matrix assembled in O(nk) without forming z z^T.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .model import LowRankModel, estimate_opinions, exact_opinions_dense


def gradient_from_opinions(model: LowRankModel, z):
    z = np.asarray(z, dtype=float)
    if z.shape != (model.n,):
        raise ValidationError(f"z must have length {model.n}")
    h = z * z
    a = model.Y @ z
    b = model.Y @ h
    return model.scale * (2.0 * np.outer(z, a) - h[:, None] - b[None, :])


def gradient_exact(model: LowRankModel, s):
    return gradient_from_opinions(model, exact_opinions_dense(model, s))


def opinion_accuracy(model: LowRankModel, eps):
    """Opinion accuracy that keeps the assembled gradient within ``eps``."""
    cw = model.C * model.W
    ny = float(np.linalg.norm(model.Y))
    return min(eps, np.sqrt(eps)) * np.sqrt(model.n) / (8.0 * (1.0 + cw) * (1.0 + ny))


def gradient_approx(model: LowRankModel, s, eps, return_estimate=False):
    """Gradient from Woodbury-estimated opinions, accurate to ``eps`` in Frobenius norm.

    With ``return_estimate`` the :class:`OpinionEstimate` used is returned as
    well, so callers can reuse the opinions for the objective.
    """
    if not eps > 0:
        raise ValidationError("eps must be positive")
    est = estimate_opinions(model, s, opinion_accuracy(model, eps))
    G = gradient_from_opinions(model, est.z)
    return (G, est) if return_estimate else G


def spectral_norm_Y(Y, iters=100, rtol=1e-10):
    """||Y||_2 by power iteration on the k x k Gram matrix Y Y^T.

    Falls back to the Frobenius norm (an upper bound) when the iteration has
    not settled.
    """
    Y = np.asarray(Y, dtype=float)
    if not np.any(Y):
        return 0.0
    G = Y @ Y.T
    x = np.ones(G.shape[0])
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iters):
        y = G @ x
        ny = np.linalg.norm(y)
        if ny == 0:
            break
        x = y / ny
        new = float(x @ G @ x)
        if abs(new - est) <= rtol * new:
            return float(np.sqrt(new))
        est = new
    return float(np.linalg.norm(Y))


def lipschitz_bound(model: LowRankModel, s):
    """Smoothness constant 8 C W ||s|| ||Y||_2^2 / sqrt(n)."""
    s = np.asarray(s, dtype=float)
    if model.scale == 0 or not np.any(s):
        return 0.0
    ny = spectral_norm_Y(model.Y)
    return 8.0 * model.C * model.W * float(np.linalg.norm(s)) * ny * ny / np.sqrt(model.n)
