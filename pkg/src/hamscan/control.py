"""Control-map learning and calibration for an uncalibrated device.

The device maps a control vector C to chain couplings through an affine
model x(C) = G C + x0.  Probing each control in turn with the scanning
learner recovers the columns of G; the Moore-Penrose pseudoinverse then
yields control settings for any target Hamiltonian, and the evaluator
quantifies the residual miscalibration against the true map.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .model import (
    CROSSTALK_CONTROL,
    EXP_DECAY_UNIFORM,
    CouplingVector,
    PriorSpec,
    num_pairs,
    pair_index,
)
from .scan import DatumSource, SimulatedIsingSource

log = logging.getLogger(__name__)


@dataclass
class ControlMap:
    """Affine control model: couplings(C) = gains @ C + offset."""

    offset: CouplingVector
    gains: np.ndarray  # (P, M); column k is the coupling vector of control k

    def __post_init__(self) -> None:
        self.gains = np.atleast_2d(np.asarray(self.gains, dtype=float))
        if self.gains.shape[0] != num_pairs(self.offset.n):
            raise ValueError("gain rows must match the pair count")
        if not np.all(np.isfinite(self.gains)):
            raise ValueError("gains must be finite")

    @property
    def n(self) -> int:
        return self.offset.n

    @property
    def num_controls(self) -> int:
        return self.gains.shape[1]

    def couplings_for(self, controls: np.ndarray) -> CouplingVector:
        c = np.asarray(controls, dtype=float)
        if c.shape != (self.num_controls,):
            raise ValueError("one setting per control required")
        return CouplingVector(self.n, self.gains @ c + self.offset.values)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "num_controls": self.num_controls,
            "offset": self.offset.values.tolist(),
            "gains_row_major": self.gains.flatten().tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ControlMap":
        n = int(data["n"])
        m = int(data["num_controls"])
        gains = np.array(data["gains_row_major"], dtype=float).reshape(num_pairs(n), m)
        return cls(CouplingVector(n, np.array(data["offset"])), gains)


class CrosstalkDevice:
    """Synthetic uncalibrated device: each control nominally drives one
    nearest-neighbor coupling but leaks onto every pair with the decaying
    crosstalk profile.  The true map stays hidden from the learner."""

    def __init__(self, rng: np.random.Generator, n: int, num_controls: int | None = None):
        m = n - 1 if num_controls is None else num_controls
        if not 1 <= m <= n - 1:
            raise ValueError("controls must target nearest-neighbor pairs")
        columns = []
        for k in range(m):
            prior = PriorSpec(kind=CROSSTALK_CONTROL, control=k)
            columns.append(prior.sample(rng, n).values)
        self._map = ControlMap(CouplingVector.zeros(n), np.column_stack(columns))

    @property
    def n(self) -> int:
        return self._map.n

    @property
    def num_controls(self) -> int:
        return self._map.num_controls

    def configure(self, controls: np.ndarray) -> DatumSource:
        """Data source behaving as the chain produced by these settings."""
        return SimulatedIsingSource(self._map.couplings_for(controls))

    def true_map(self) -> ControlMap:
        """Hidden ground truth, exposed for evaluation only."""
        return self._map


class MapEstimate(NamedTuple):
    control_map: ControlMap
    column_ok: list[bool]


Learner = Callable[[DatumSource, int | None], CouplingVector]


def learn_control_map(device, learner: Learner) -> MapEstimate:
    """Estimate the affine map by probing the idle device and each control.

    The learner characterizes the configured device; the offset estimate is
    subtracted from each single-control estimate to isolate the control's
    own coupling column.  Failed columns are zeroed and flagged.
    """
    m = device.num_controls
    offset = learner(device.configure(np.zeros(m)), None)
    columns = []
    ok = []
    for k in range(m):
        controls = np.zeros(m)
        controls[k] = 1.0
        try:
            estimate = learner(device.configure(controls), k)
            columns.append(estimate.values - offset.values)
            ok.append(True)
        except Exception:  # noqa: BLE001 - per-column isolation is the contract
            log.exception("learning control column %d failed", k)
            columns.append(np.zeros(num_pairs(device.n)))
            ok.append(False)
    return MapEstimate(ControlMap(offset, np.column_stack(columns)), ok)


def pseudoinverse(matrix: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD; singular values below
    tol * sigma_max are treated as zero."""
    matrix = np.asarray(matrix, dtype=float)
    if not np.all(np.isfinite(matrix)):
        raise ValueError("matrix must be finite")
    return np.linalg.pinv(matrix, rcond=tol)


def calibrate(
    map_est: ControlMap, targets: list[CouplingVector], tol: float = 1e-10
) -> list[np.ndarray]:
    """Least-squares control settings for each target coupling vector."""
    gplus = pseudoinverse(map_est.gains, tol)
    out = []
    for target in targets:
        if target.n != map_est.n:
            raise ValueError("target size mismatch")
        out.append(gplus @ (target.values - map_est.offset.values))
    return out


def nn_targets(n: int, strength: float = 10.0) -> list[CouplingVector]:
    """One target per nearest-neighbor pair: that coupling at the given
    strength, everything else zero."""
    targets = []
    for k in range(n - 1):
        values = np.zeros(num_pairs(n))
        values[pair_index(n, k, k + 1)] = strength
        targets.append(CouplingVector(n, values))
    return targets


def prior_control_map(n: int, num_controls: int) -> ControlMap:
    """Entrywise mean of the crosstalk model: the map an experimenter
    would assume before any learning."""
    columns = [
        PriorSpec(kind=CROSSTALK_CONTROL, control=k).mean(n).values
        for k in range(num_controls)
    ]
    return ControlMap(CouplingVector.zeros(n), np.column_stack(columns))


@dataclass
class CalibrationStats:
    """Per-target calibration errors; `before` uses the baseline controls
    (naive unit settings unless a baseline list is supplied)."""

    before: np.ndarray
    after: np.ndarray
    target_norms: np.ndarray

    @property
    def before_mean(self) -> float:
        return float(self.before.mean())

    @property
    def before_std(self) -> float:
        return float(self.before.std())

    @property
    def after_mean(self) -> float:
        return float(self.after.mean())

    @property
    def after_std(self) -> float:
        return float(self.after.std())


def evaluate_calibration(
    map_true: ControlMap,
    controls: list[np.ndarray],
    targets: list[CouplingVector],
    baseline_controls: list[np.ndarray] | None = None,
) -> CalibrationStats:
    """Errors actually realized by the true map, per target.

    after[k]  = || gains C_k + offset - target_k ||_2
    before[k] = the same with the baseline controls; the default baseline
    is the naive unit vector e_k (control k at 1, others off).
    """
    if len(controls) != len(targets):
        raise ValueError("one control vector per target required")
    m = map_true.num_controls
    if baseline_controls is None:
        baseline_controls = []
        for k in range(len(targets)):
            e = np.zeros(m)
            e[k % m] = 1.0
            baseline_controls.append(e)
    after = np.empty(len(targets))
    before = np.empty(len(targets))
    norms = np.empty(len(targets))
    for k, target in enumerate(targets):
        after[k] = np.linalg.norm(
            map_true.couplings_for(controls[k]).values - target.values
        )
        before[k] = np.linalg.norm(
            map_true.couplings_for(baseline_controls[k]).values - target.values
        )
        norms[k] = np.linalg.norm(target.values)
    return CalibrationStats(before, after, norms)


def trotter_schedule(
    c1: np.ndarray,
    c2: np.ndarray,
    a: float,
    b: float,
    dt: float,
    repetitions: int,
) -> list[tuple[np.ndarray, float]]:
    """Alternating control segments approximating evolution under
    a*H(C1) + b*H(C2) for time dt, first-order splitting with R slices."""
    if repetitions < 1:
        raise ValueError("need at least one repetition")
    c1 = np.asarray(c1, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    segment = [(c1, a * dt / repetitions), (c2, b * dt / repetitions)]
    return segment * repetitions


class GadgetPulse(NamedTuple):
    """One pulse exp(-i angle P) with P the labelled Pauli word."""

    word: str
    angle: float


def nnn_gadget(dt: float) -> list[GadgetPulse]:
    """Group-commutator pulse sequence engineering a next-nearest-neighbor
    ZZ interaction from two-body terms and single-qubit control.

    With the middle qubit prepared in |0>, applying the four pulses in
    order approximates exp(-2i Z(x)1(x)Z dt^2) up to O(dt^3).  Segment
    durations sum to 4 dt.
    """
    if dt < 0:
        raise ValueError("pulse duration must be non-negative")
    return [
        GadgetPulse("IYZ", -dt),
        GadgetPulse("ZXI", -dt),
        GadgetPulse("IYZ", dt),
        GadgetPulse("ZXI", dt),
    ]
