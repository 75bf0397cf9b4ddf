"""Experiment selection: hypothesis/time guesses, window placement, and
truncation-aware evolution-time caps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import bounds
from .errors import DegeneratePrior
from .model import Window
from .smc import ParticleCloud

PERTURB_EPS = 1e-12
MAX_REDRAWS = 100


@dataclass
class ExperimentDesign:
    """One interactive experiment: window, inversion hypothesis, time,
    and the swap count (1 for commuting runs)."""

    win: Window
    x_inv: np.ndarray
    t: float
    r: int = 1

    def __post_init__(self) -> None:
        if self.t <= 0:
            raise ValueError("evolution time must be positive")
        if self.r < 1:
            raise ValueError("swap count must be >= 1")


def pgh_design(
    rng: np.random.Generator,
    local_cloud: ParticleCloud,
    win: Window,
    cap: float | None = None,
) -> ExperimentDesign:
    """Guess an experiment from two weighted posterior draws.

    The evolution time is the reciprocal L1 distance between two distinct
    particles; for diagonal models the L1 norm upper-bounds the operator
    norm of the Hamiltonian difference, so the time is a conservative
    inverse-uncertainty proxy.  The first draw becomes the inversion
    hypothesis.  Identical-valued draws are redrawn, then nudged apart.
    """
    if np.count_nonzero(local_cloud.weights) < 2:
        raise DegeneratePrior("need at least two particles with nonzero weight")
    x_a = x_b = None
    for _ in range(MAX_REDRAWS):
        i, j = rng.choice(local_cloud.size, size=2, replace=False, p=local_cloud.weights)
        x_a = local_cloud.particles[i]
        x_b = local_cloud.particles[j]
        if not np.array_equal(x_a, x_b):
            break
    else:
        x_b = x_b + PERTURB_EPS
    t = 1.0 / float(np.abs(x_a - x_b).sum())
    if cap is not None:
        t = min(t, cap)
    return ExperimentDesign(win=win, x_inv=x_a.copy(), t=t)


def truncation_time_cap(
    win: Window,
    decay: tuple[float, float],
    delta_trunc: float = 0.01,
    a_norm: float = 1.0,
) -> float:
    """Longest evolution time keeping the window-truncation error below
    delta_trunc, using the exponential-decay envelope of the neglected
    support-to-outside interaction norm.  Infinite when that norm vanishes
    (nearest-neighbor-only models)."""
    if delta_trunc <= 0:
        raise ValueError("truncation budget must be positive")
    b, alpha = decay
    h_int_a = bounds.window_interaction_norm_exp(win.a_width, win.width, b, alpha)
    return bounds.max_time_commuting(delta_trunc, a_norm, h_int_a)


def place_window(n: int, a: int, w: int, position: int) -> Window:
    """Window of width min(w, n) centered on the observable support at
    `position`, clamped to the chain."""
    if not (1 <= a <= w):
        raise ValueError("need w >= a >= 1")
    if not 0 <= position <= n - a:
        raise ValueError(f"position {position} out of range for n={n}, a={a}")
    width = min(w, n)
    lo = position - (width - a) // 2
    lo = max(0, min(lo, n - width))
    return Window(lo, lo + width, position, position + a)
