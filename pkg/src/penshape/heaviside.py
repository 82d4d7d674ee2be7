"""Heaviside function and its cubic C^1 regularization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Smoothing", "H", "H_eps", "H_eps_prime"]


@dataclass(frozen=True)
class Smoothing:
    eps: float

    def __post_init__(self):
        if not (self.eps > 0 and np.isfinite(self.eps)):
            raise ValueError(f"smoothing width must be positive, got {self.eps}")


def _eps(s):
    return s.eps if isinstance(s, Smoothing) else Smoothing(float(s)).eps


def H(v):
    """0 for ``v <= 0`` and 1 for ``v > 0``."""
    out = (np.asarray(v) > 0).astype(float)
    return out if out.ndim else float(out)


def H_eps(s, v):
    """Regularized Heaviside: 0 below 0, ``v^2 (3 eps - 2 v) / eps^3`` on (0, eps), 1 above."""
    eps = _eps(s)
    v = np.asarray(v, dtype=float)
    # normalized variable keeps H_eps(eps/2) = 1/2 exact
    t = np.clip(v / eps, 0.0, 1.0)
    out = t * t * (3.0 - 2.0 * t)
    out = np.where(v >= eps, 1.0, np.where(v <= 0, 0.0, out))
    return out if out.ndim else float(out)


def H_eps_prime(s, v):
    """Derivative ``6 v (eps - v) / eps^3`` on (0, eps), zero elsewhere."""
    eps = _eps(s)
    v = np.asarray(v, dtype=float)
    inside = (v > 0) & (v < eps)
    t = v / eps
    out = np.where(inside, 6.0 * t * (1.0 - t) / eps, 0.0)
    return out if out.ndim else float(out)
