"""Dual-cloud scanning: slide the observable along the chain, learn the
local couplings with interactive experiments, and merge the resampled
local cloud back into the uniform-weight global cloud.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .design import pgh_design, place_window, truncation_time_cap
from .errors import AllWeightsZero, NonUniformLocal
from .likelihood import WindowLikelihood, sample_datum
from .model import (
    DEFAULT_ALPHA,
    CouplingVector,
    PriorSpec,
    Window,
    local_pairs,
    num_pairs,
    pair_index,
)
from .smc import (
    ParticleCloud,
    ResampleConfig,
    bayes_update,
    effective_sample_size,
    liu_west_resample,
)

log = logging.getLogger(__name__)

UNIFORM_TOL = 1e-9
MAX_EXPERIMENT_RETRIES = 10


@dataclass
class ScanSchedule:
    """Ordered observable positions plus geometry and per-position budget.

    The default schedule sweeps left to right over every position and then
    re-scans the first 2a sites in reverse, which counters the extra
    uncertainty carried by couplings learned early.
    """

    n: int
    a: int
    w: int
    experiments_per_scan: int
    positions: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.positions:
            self.positions = list(range(self.n - self.a + 1)) + list(
                range(self.a, -1, -1)
            )
        for p in self.positions:
            if not 0 <= p <= self.n - self.a:
                raise ValueError(f"position {p} out of range")
        if self.experiments_per_scan < 0:
            raise ValueError("experiment budget must be non-negative")


@dataclass
class GlobalCloud:
    """Uniform-weight cloud over full coupling vectors; density is carried
    by particle placement, never by weights."""

    n: int
    particles: np.ndarray  # (N, n(n-1)/2)

    def __post_init__(self) -> None:
        self.particles = np.atleast_2d(np.asarray(self.particles, dtype=float))
        if self.particles.shape[1] != num_pairs(self.n):
            raise ValueError("particle dimension must match the pair count")

    @classmethod
    def from_prior(
        cls, rng: np.random.Generator, prior: PriorSpec, n: int, count: int
    ) -> "GlobalCloud":
        return cls(n, prior.sample_matrix(rng, n, count))

    @property
    def size(self) -> int:
        return self.particles.shape[0]

    def mean(self) -> np.ndarray:
        return self.particles.mean(axis=0)


def extract_local(global_cloud: GlobalCloud, win: Window) -> ParticleCloud:
    """Copy the window-local coordinates of every global particle into a
    uniform-weight local cloud (the product-distribution approximation)."""
    idx = _local_indices(global_cloud.n, win)
    return ParticleCloud.uniform(global_cloud.particles[:, idx].copy())


def merge_local(
    global_cloud: GlobalCloud,
    local: ParticleCloud,
    win: Window,
    rng: np.random.Generator,
    permutation: np.ndarray | None = None,
) -> GlobalCloud:
    """Overwrite the local coordinates of the global particles with the
    local cloud under a fresh random particle alignment.

    A random permutation avoids manufacturing correlations between windows;
    the local cloud must already be uniform (resample first if not).  An
    explicit permutation can be supplied for deterministic merging.
    """
    if local.size != global_cloud.size:
        raise ValueError("local and global particle counts must match")
    if np.max(np.abs(local.weights - 1.0 / local.size)) > UNIFORM_TOL:
        raise NonUniformLocal("merge requires uniform local weights")
    idx = _local_indices(global_cloud.n, win)
    perm = rng.permutation(local.size) if permutation is None else np.asarray(permutation)
    particles = global_cloud.particles.copy()
    particles[:, idx] = local.particles[perm]
    return GlobalCloud(global_cloud.n, particles)


def _local_indices(n: int, win: Window) -> list[int]:
    return [pair_index(n, i, j) for i, j in local_pairs(win)]


class DatumSource:
    """Anything that can run one interactive experiment and return a bit."""

    def sample(self, rng: np.random.Generator, x_inv, win: Window, t: float) -> int:
        raise NotImplementedError


class SimulatedIsingSource(DatumSource):
    """Synthetic system with hidden couplings; draws outcomes from the
    exact un-truncated likelihood."""

    def __init__(self, x_true: CouplingVector):
        self._x_true = x_true

    def sample(self, rng: np.random.Generator, x_inv, win: Window, t: float) -> int:
        return sample_datum(rng, self._x_true, x_inv, win, t)

    def benchmark_truth(self) -> CouplingVector:
        """Hidden parameters, exposed for error reporting only."""
        return self._x_true


@dataclass
class ScanConfig:
    resample: ResampleConfig = field(default_factory=ResampleConfig)
    delta_trunc: float = 0.01
    decay: tuple[float, float] = (1.0, DEFAULT_ALPHA)
    likelihood_mode: str = "exact"  # or "sampled"
    n_samp: int = 100
    max_retries: int = MAX_EXPERIMENT_RETRIES

    def __post_init__(self) -> None:
        if self.likelihood_mode not in ("exact", "sampled"):
            raise ValueError(f"unknown likelihood mode {self.likelihood_mode!r}")
        if self.n_samp < 1:
            raise ValueError("sampled mode needs at least one draw")


@dataclass
class TraceRow:
    position: int
    experiment_index: int
    t: float
    ess: float
    l2_error: float
    l1_opnorm_bound: float


TRACE_COLUMNS = ("position", "experiment_index", "t", "ess", "l2_error", "l1_opnorm_bound")


class ScanTrace(list):
    """Per-experiment trace rows plus the positions that had to abort."""

    def __init__(self, rows=()):
        super().__init__(rows)
        self.aborted_positions: list[int] = []


def run_scan(
    system: DatumSource,
    global_cloud: GlobalCloud,
    schedule: ScanSchedule,
    cfg: ScanConfig,
    rng: np.random.Generator,
    truth: CouplingVector | None = None,
) -> tuple[GlobalCloud, ScanTrace]:
    """Run the full scanning protocol and return the updated global cloud
    plus a per-experiment trace (with any aborted positions recorded).

    `truth` is used only to fill the error columns of the trace for
    benchmarking; the inference path sees the hidden system exclusively
    through sampled outcomes.
    """
    trace = ScanTrace()
    for position in schedule.positions:
        win = place_window(schedule.n, schedule.a, schedule.w, position)
        idx = _local_indices(schedule.n, win)
        pristine = extract_local(global_cloud, win)
        local = pristine
        evaluator = WindowLikelihood(win)
        cap = truncation_time_cap(win, cfg.decay, cfg.delta_trunc)
        if not np.isfinite(cap):
            cap = None
        global_mean = global_cloud.mean()
        for k in range(schedule.experiments_per_scan):
            design = None
            for _ in range(cfg.max_retries):
                candidate = pgh_design(rng, local, win, cap=cap)
                datum = system.sample(rng, candidate.x_inv, win, candidate.t)
                probs = evaluator.prob(local.particles, candidate.x_inv, candidate.t)
                if cfg.likelihood_mode == "sampled":
                    probs = rng.binomial(cfg.n_samp, probs) / cfg.n_samp
                try:
                    local = bayes_update(local, datum, probs)
                    design = candidate
                    break
                except AllWeightsZero:
                    continue
            if design is None:
                log.warning(
                    "position %d: update failed %d times, keeping pre-scan cloud",
                    position,
                    cfg.max_retries,
                )
                local = pristine
                trace.aborted_positions.append(position)
                break
            ess = effective_sample_size(local)
            if ess < cfg.resample.ess_threshold * local.size:
                local = liu_west_resample(rng, local, cfg.resample)
            l2_err, l1_bound = _benchmark_errors(global_mean, local, idx, truth)
            trace.append(TraceRow(position, k, design.t, ess, l2_err, l1_bound))
        # merging requires uniform weights; resample unless already uniform
        # (avoids perturbing a cloud that carries no posterior update)
        if np.max(np.abs(local.weights - 1.0 / local.size)) > UNIFORM_TOL:
            local = liu_west_resample(rng, local, cfg.resample)
        global_cloud = merge_local(global_cloud, local, win, rng)
    return global_cloud, trace


def _benchmark_errors(
    global_mean: np.ndarray,
    local: ParticleCloud,
    idx: list[int],
    truth: CouplingVector | None,
) -> tuple[float, float]:
    if truth is None:
        return (float("nan"), float("nan"))
    estimate = global_mean.copy()
    estimate[idx] = local.weights @ local.particles
    diff = estimate - truth.values
    return float(np.linalg.norm(diff)), float(np.abs(diff).sum())


def scan_estimate(global_cloud: GlobalCloud) -> CouplingVector:
    """Point estimate after scanning: the global-cloud mean."""
    return CouplingVector(global_cloud.n, global_cloud.mean())
