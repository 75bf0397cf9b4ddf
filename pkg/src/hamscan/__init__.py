"""Windowed Bayesian learning and control calibration for Ising chains."""

from .model import (
    CouplingVector,
    OpNormResult,
    PriorSpec,
    Window,
    all_pairs,
    local_pairs,
    num_pairs,
    op_norm_diag,
    pair_index,
    param_error_l2,
)
from .likelihood import (
    WindowLikelihood,
    likelihood_full,
    likelihood_windowed,
    sample_datum,
)

__all__ = [
    "CouplingVector",
    "OpNormResult",
    "PriorSpec",
    "Window",
    "WindowLikelihood",
    "all_pairs",
    "likelihood_full",
    "likelihood_windowed",
    "local_pairs",
    "num_pairs",
    "op_norm_diag",
    "pair_index",
    "param_error_l2",
    "sample_datum",
]

__version__ = "0.1.0"
