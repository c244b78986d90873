"""Deterministic direction sets on the unit sphere.

Set comparisons, Demyanov sampling, and the derivative estimators all draw
unit directions from a scrambled Halton sequence mapped through the inverse
normal CDF.  The sequence is fixed by an explicit seed so that every run of
a certification produces identical numbers.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

__all__ = ["DEFAULT_SEED", "direction_set", "stencil"]

#: seed of the shared low-discrepancy direction set
DEFAULT_SEED = 0x5EED


@lru_cache(maxsize=64)
def direction_set(dim: int, count: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    """``count`` unit vectors in R^dim, identical across runs for one seed."""
    if dim < 1:
        raise ValueError("dim must be positive")
    if count < 1:
        raise ValueError("count must be positive")
    sampler = qmc.Halton(d=dim, scramble=True, seed=seed)
    u = sampler.random(count)
    # keep strictly inside (0,1) so ndtri stays finite
    u = np.clip(u, 1e-12, 1.0 - 1e-12)
    g = ndtri(u)
    norms = np.linalg.norm(g, axis=1)
    degenerate = norms < 1e-300
    if np.any(degenerate):
        g[degenerate] = 0.0
        g[degenerate, 0] = 1.0
        norms[degenerate] = 1.0
    out = g / norms[:, None]
    out.setflags(write=False)
    return out


@lru_cache(maxsize=16)
def stencil(dim: int, count: int = 8) -> np.ndarray:
    """Fixed small stencil of unit directions used by derivative estimators."""
    if dim == 1:
        out = np.array([[1.0], [-1.0]])
    elif dim == 2:
        ang = 2.0 * np.pi * np.arange(count) / count
        out = np.column_stack([np.cos(ang), np.sin(ang)])
    else:
        out = np.array(direction_set(dim, count))
    out.setflags(write=False)
    return out
