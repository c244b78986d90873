"""Numerical strong slope estimator.

The strong slope of f at x is the limsup of (f(x) - f(y)) / d(y, x) as
y -> x (zero at local minimizers).  The estimator reuses the band schedule
of the Hadamard machinery: per scale band it takes the maximum decrease
quotient over sampled radii and directions, and reads the limit off the
two finest bands.  When those bands show no decrease at all the
local-minimizer branch fires and the slope is reported as 0.
"""

from __future__ import annotations

import numpy as np

from ..exhauster import BLOWUP, DEFAULT_SCHEDULE, HadamardSchedule, _as_batch_fn
from ..geometry import as_vector, direction_set, stencil

__all__ = ["strong_slope_estimate"]

#: dense direction fans used in low dimension for the limsup search;
#: the 2D fan keeps the angular error ||grad|| * (1 - cos(pi/N)) below the
#: 1e-3 margin that the slope >= demcoqd-distance cross-check relies on
_FAN_2D = 512
_FAN_ND = 128


def _slope_directions(dim: int) -> np.ndarray:
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        ang = 2.0 * np.pi * np.arange(_FAN_2D) / _FAN_2D
        return np.column_stack([np.cos(ang), np.sin(ang)])
    return np.vstack([stencil(dim), direction_set(dim, _FAN_ND)])


def strong_slope_estimate(f, x, schedule: HadamardSchedule = DEFAULT_SCHEDULE) -> float:
    """Estimate the strong slope of ``f`` (expression or batch callable) at x.

    Returns 0.0 when the two finest scale bands sample no decrease, and the
    +inf sentinel when the quotients blow up.
    """
    fn = _as_batch_fn(f)
    x = as_vector(x)
    dirs = _slope_directions(x.shape[0])
    f0 = float(fn(x.reshape(1, -1))[0])
    band_max = []
    for k in range(schedule.k_min, schedule.k_max + 1):
        tk = 2.0 ** (-k)
        radii = np.linspace(tk, 2.0 * tk, schedule.t_samples)
        pts = x[None, None, :] + radii[:, None, None] * dirs[None, :, :]
        vals = fn(pts.reshape(-1, x.shape[0])).reshape(len(radii), len(dirs))
        quot = (f0 - vals) / radii[:, None]
        if not np.all(np.isfinite(quot)):
            return np.inf
        band_max.append(float(np.max(quot)))
    finest = max(band_max[-2:])
    if finest <= 0.0:
        return 0.0
    if finest > BLOWUP:
        return np.inf
    return finest
