"""Closed-form error and resource bounds.

Pure arithmetic evaluators: truncation error of a window-compressed
simulation (commuting and non-commuting), envelope bounds on the neglected
interaction norm, Fisher-information ceilings, calibration-chain error
growth, and the swap-miscalibration limit.  Norms and commutator norms are
supplied by callers; small systems get exact values from `densesim`,
larger ones get the envelope evaluators here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple


@dataclass
class BoundReport:
    """One evaluated bound with its inputs echoed for auditability."""

    name: str
    inputs: dict[str, float]
    value: float
    formula: str

    def __post_init__(self) -> None:
        if math.isnan(self.value):
            raise ValueError("bound value must be a number or +inf")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "inputs": {k: float(v) for k, v in self.inputs.items()},
            "value": self.value,
            "formula": self.formula,
        }


def commuting_truncation_bound(a_norm: float, h_int_a: float, t: float) -> float:
    """Truncation error ceiling ||A|| (exp(2 ||H_x|| t) - 1) for commuting
    models, H_x the neglected support-to-outside interaction."""
    _require_nonneg(a_norm=a_norm, h_int_a=h_int_a, t=t)
    return a_norm * math.expm1(2.0 * h_int_a * t)


def max_time_commuting(delta: float, a_norm: float, h_int_a: float) -> float:
    """Longest time with commuting truncation error at most delta;
    infinite when the neglected interaction vanishes."""
    _require_nonneg(delta=delta, a_norm=a_norm, h_int_a=h_int_a)
    if h_int_a == 0.0:
        return math.inf
    return math.log1p(delta / a_norm) / (2.0 * h_int_a)


def window_interaction_norm_exp(a: int, w: int, b: float, alpha: float) -> float:
    """Envelope bound on the neglected interaction norm for couplings
    decaying as b e^(-alpha (d-1)): a b e^(-floor((w-a)/2) alpha) / (1 - e^-alpha)."""
    _check_window(a, w)
    if alpha <= 0:
        raise ValueError("exponential decay rate must be positive")
    gap = (w - a) // 2
    return a * b * math.exp(-gap * alpha) / (1.0 - math.exp(-alpha))


def window_interaction_norm_poly(a: int, w: int, b: float, alpha: float) -> float:
    """Envelope bound for couplings decaying as b / d^alpha (alpha > 1).

    Integral test on the tail starting at m = floor((w-a)/2) + 1:
    sum_{j>=m} 1/j^alpha <= (1 + m/(alpha-1)) / m^alpha, so the neglected
    interaction norm is at most a b (m + alpha - 1) / (m^alpha (alpha - 1)).
    """
    _check_window(a, w)
    if alpha <= 1:
        raise ValueError("polynomial decay exponent must exceed 1")
    m = (w - a) // 2 + 1
    return a * b * (m + alpha - 1.0) / (m**alpha * (alpha - 1.0))


def noncommuting_truncation_bound(
    comm_in_lambda: float,
    comm_int_in: float,
    h_int_a: float,
    h_int_rest: float,
    h_out: float,
    a_norm: float,
    a_sites: int,
    s: float,
    mu: float,
    dist: float,
    t: float,
    r: int,
) -> float:
    """Truncation error ceiling of the r-swap protocol for non-commuting
    chains with (at least) exponentially decaying interactions.

    Terms: Trotter commutator cost t^2/r, direct support-to-outside
    leakage, and the locality ("light-cone") tail of the rest interaction.
    """
    _require_nonneg(
        comm_in_lambda=comm_in_lambda,
        comm_int_in=comm_int_in,
        h_int_a=h_int_a,
        h_int_rest=h_int_rest,
        h_out=h_out,
        a_norm=a_norm,
        s=s,
        mu=mu,
        dist=dist,
        t=t,
    )
    if r < 1:
        raise ValueError("swap count must be >= 1")
    trotter = (comm_in_lambda + comm_int_in) * a_norm * t * t / r
    direct = 2.0 * h_int_a * a_norm * t
    tail = (
        2.0
        * h_int_rest
        * a_norm
        * a_sites
        * t
        * math.exp(-mu * dist)
        * math.expm1(2.0 * s * abs(t))
        * math.exp(2.0 * (h_out + h_int_rest) * t / r)
    )
    return trotter + direct + tail


def lr_time_bound(
    delta: float,
    a_norm: float,
    h_int_a: float,
    h_int_rest: float,
    a_sites: int,
    mu: float,
    w: int,
    a: int,
) -> float:
    """Sufficient evolution time for error delta in the large-swap-count
    limit on a line, assuming the light cone stays well inside the window
    margin: delta / (2 ||A|| (h_x + 2 h_rest |A| e^(-mu (w-a)/4)))."""
    _require_nonneg(delta=delta, a_norm=a_norm, h_int_a=h_int_a, h_int_rest=h_int_rest, mu=mu)
    _check_window(a, w)
    denom = 2.0 * a_norm * (h_int_a + 2.0 * h_int_rest * a_sites * math.exp(-mu * (w - a) / 4.0))
    if denom == 0.0:
        return math.inf
    return delta / denom


def fisher_bound(grad_norm_i: float, grad_norm_j: float, t: float) -> float:
    """Ceiling 4 ||dH_i|| ||dH_j|| t^2 on a Fisher-information entry."""
    _require_nonneg(grad_norm_i=grad_norm_i, grad_norm_j=grad_norm_j, t=t)
    return 4.0 * grad_norm_i * grad_norm_j * t * t


def bootstrap_error_bound(
    chain_length: int,
    gamma_max: float,
    kappa_max: float,
    e_max: float,
    gplus_max: float,
    h_max: float,
) -> float:
    """Worst-case calibration error after an L-step chain of devices:
    L Gamma_max exp((L-1)(kappa_max - 1 + ||E|| ||G+||)) max_k ||H_k||."""
    if chain_length < 1:
        raise ValueError("chain length must be >= 1")
    _require_nonneg(gamma_max=gamma_max, kappa_max=kappa_max, e_max=e_max, gplus_max=gplus_max, h_max=h_max)
    exponent = (chain_length - 1) * (kappa_max - 1.0 + e_max * gplus_max)
    return chain_length * gamma_max * math.exp(exponent) * h_max


def bootstrap_nexp_bound(
    chain_length: int,
    kappa_max: float,
    gplus_max: float,
    h_max: float,
    delta: float,
    gamma: float,
) -> float:
    """Experiments per chain step sufficient for end-to-end error delta
    when per-step error decays as e^(-gamma N):
    ((L-1) kappa_max + ln(L ||G+|| max(||H||, 1) / delta)) / gamma."""
    if chain_length < 1:
        raise ValueError("chain length must be >= 1")
    if gamma <= 0 or delta <= 0:
        raise ValueError("decay rate and error budget must be positive")
    _require_nonneg(kappa_max=kappa_max, gplus_max=gplus_max, h_max=h_max)
    return (
        (chain_length - 1) * kappa_max
        + math.log(chain_length * gplus_max * max(h_max, 1.0) / delta)
    ) / gamma


class SwapCount(NamedTuple):
    r: int
    capped: bool


def swap_error_r_max(delta: float, delta_swap: float, r_cap: int = 2**31 - 1) -> SwapCount:
    """Largest swap count keeping accumulated per-swap miscalibration below
    delta: floor((delta/Delta + 1)/2), at least 1; capped (and flagged)
    when the per-swap error vanishes."""
    if delta <= 0:
        raise ValueError("error budget must be positive")
    if delta_swap < 0:
        raise ValueError("swap miscalibration must be non-negative")
    if delta_swap == 0.0:
        return SwapCount(r_cap, capped=True)
    r = int(math.floor((delta / delta_swap + 1.0) / 2.0))
    r = max(r, 1)
    if r >= r_cap:
        return SwapCount(r_cap, capped=True)
    return SwapCount(r, capped=False)


def _require_nonneg(**kwargs: float) -> None:
    for name, value in kwargs.items():
        if not (value >= 0.0):  # also rejects NaN
            raise ValueError(f"{name} must be non-negative, got {value}")


def _check_window(a: int, w: int) -> None:
    if not (1 <= a <= w):
        raise ValueError("need w >= a >= 1")
