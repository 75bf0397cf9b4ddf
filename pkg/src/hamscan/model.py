"""Ising-chain parameterization: coupling vectors, windows, priors, metrics.

The model Hamiltonian is a sum of pairwise ZZ terms on a line of n sites,
one real coefficient per unordered site pair (i, j), i < j.  Couplings are
stored in a flat array in lexicographic pair order; `pair_index` maps a
pair to its slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

EXP_DECAY_UNIFORM = "exponential-decay-uniform"
CROSSTALK_CONTROL = "crosstalk-control"

# Decay envelope of the default prior, 10^(-2(d-1)) == exp(-alpha (d-1)).
DEFAULT_ALPHA = 2.0 * math.log(10.0)


def num_pairs(n: int) -> int:
    return n * (n - 1) // 2


def all_pairs(n: int) -> list[tuple[int, int]]:
    """Unordered site pairs of an n-site chain in lexicographic order."""
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def pair_index(n: int, i: int, j: int) -> int:
    """Flat index of pair (i, j), i < j, under lexicographic ordering."""
    if not 0 <= i < j < n:
        raise ValueError(f"pair ({i}, {j}) out of range for n={n}")
    return i * (2 * n - i - 1) // 2 + (j - i - 1)


@dataclass
class CouplingVector:
    """Pairwise ZZ coupling strengths of an n-site chain.

    values[k] is the coefficient of the k-th pair in lexicographic order.
    """

    n: int
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.n < 2:
            raise ValueError("need at least two sites")
        if self.values.shape != (num_pairs(self.n),):
            raise ValueError(
                f"expected {num_pairs(self.n)} couplings, got {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("couplings must be finite")

    @classmethod
    def zeros(cls, n: int) -> "CouplingVector":
        return cls(n, np.zeros(num_pairs(n)))

    @classmethod
    def from_pairs(cls, n: int, entries: dict[tuple[int, int], float]) -> "CouplingVector":
        values = np.zeros(num_pairs(n))
        for (i, j), v in entries.items():
            values[pair_index(n, i, j)] = v
        return cls(n, values)

    def get(self, i: int, j: int) -> float:
        if i > j:
            i, j = j, i
        return float(self.values[pair_index(self.n, i, j)])

    def copy(self) -> "CouplingVector":
        return CouplingVector(self.n, self.values.copy())

    def add(self, other: "CouplingVector") -> "CouplingVector":
        self._check_same(other)
        return CouplingVector(self.n, self.values + other.values)

    def subtract(self, other: "CouplingVector") -> "CouplingVector":
        self._check_same(other)
        return CouplingVector(self.n, self.values - other.values)

    def scale(self, factor: float) -> "CouplingVector":
        return CouplingVector(self.n, self.values * factor)

    def restrict(self, pairs: list[tuple[int, int]]) -> np.ndarray:
        """Values of the given pairs, in the order requested."""
        idx = [pair_index(self.n, i, j) for i, j in pairs]
        return self.values[idx].copy()

    def _check_same(self, other: "CouplingVector") -> None:
        if other.n != self.n:
            raise ValueError(f"site count mismatch: {self.n} vs {other.n}")


@dataclass(frozen=True)
class Window:
    """Contiguous simulator window [lo, hi) with observable support [a_lo, a_hi)."""

    lo: int
    hi: int
    a_lo: int
    a_hi: int

    def __post_init__(self) -> None:
        if not (0 <= self.lo <= self.a_lo < self.a_hi <= self.hi):
            raise ValueError(f"invalid window geometry {self}")

    @property
    def width(self) -> int:
        return self.hi - self.lo

    @property
    def a_width(self) -> int:
        return self.a_hi - self.a_lo

    @property
    def sites(self) -> range:
        return range(self.lo, self.hi)

    @property
    def a_sites(self) -> range:
        return range(self.a_lo, self.a_hi)

    def contains_site(self, s: int) -> bool:
        return self.lo <= s < self.hi

    def in_a(self, s: int) -> bool:
        return self.a_lo <= s < self.a_hi


def local_pairs(win: Window) -> list[tuple[int, int]]:
    """Pairs inside the window with at least one endpoint in the observable
    support, in lexicographic order.

    These are exactly the couplings the windowed likelihood depends on, and
    hence the parameter set of a local particle cloud.
    """
    out = []
    for i in win.sites:
        for j in range(i + 1, win.hi):
            if win.in_a(i) or win.in_a(j):
                out.append((i, j))
    return out


@dataclass
class PriorSpec:
    """Distribution of coupling vectors.

    exponential-decay-uniform:
        x_{i,j} ~ unif(0,1) * b * exp(-alpha * (|i-j| - 1)); the default
        (b=1, alpha=2 ln 10) gives the 10^(-2(|i-j|-1)) envelope.
    crosstalk-control:
        the same draw plus a deterministic 10 on the nearest-neighbor pair
        (p, p+1) selected by the control index.
    """

    kind: str = EXP_DECAY_UNIFORM
    b: float = 1.0
    alpha: float = DEFAULT_ALPHA
    control: int | None = None
    nn_strength: float = 10.0

    def __post_init__(self) -> None:
        if self.kind not in (EXP_DECAY_UNIFORM, CROSSTALK_CONTROL):
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if self.kind == CROSSTALK_CONTROL and self.control is None:
            raise ValueError("crosstalk-control prior needs a control index")
        if self.b <= 0 or self.alpha <= 0:
            raise ValueError("decay parameters must be positive")

    def envelope(self, distance: int) -> float:
        """Upper bound on |x_{i,j}| at site distance |i-j| = distance."""
        return self.b * math.exp(-self.alpha * (distance - 1))

    def _envelopes(self, n: int) -> np.ndarray:
        return np.array([self.envelope(j - i) for i, j in all_pairs(n)])

    def sample(self, rng: np.random.Generator, n: int) -> CouplingVector:
        values = rng.random(num_pairs(n)) * self._envelopes(n)
        if self.kind == CROSSTALK_CONTROL:
            p = self.control
            if not 0 <= p < n - 1:
                raise ValueError(f"control index {p} out of range for n={n}")
            values[pair_index(n, p, p + 1)] += self.nn_strength
        return CouplingVector(n, values)

    def sample_matrix(self, rng: np.random.Generator, n: int, count: int) -> np.ndarray:
        """count independent draws as a (count, P) matrix."""
        values = rng.random((count, num_pairs(n))) * self._envelopes(n)
        if self.kind == CROSSTALK_CONTROL:
            values[:, pair_index(n, self.control, self.control + 1)] += self.nn_strength
        return values

    def mean(self, n: int) -> CouplingVector:
        values = 0.5 * self._envelopes(n)
        if self.kind == CROSSTALK_CONTROL:
            values[pair_index(n, self.control, self.control + 1)] += self.nn_strength
        return CouplingVector(n, values)


def param_error_l2(x: CouplingVector, y: CouplingVector) -> float:
    """Euclidean distance between two coupling vectors."""
    x._check_same(y)
    return float(np.linalg.norm(x.values - y.values))


class OpNormResult(NamedTuple):
    value: float
    exact: bool


OP_NORM_ENUM_CUTOFF = 24


def op_norm_diag(x: CouplingVector, y: CouplingVector) -> OpNormResult:
    """Operator norm of the difference Hamiltonian H(x) - H(y).

    Both Hamiltonians are diagonal, so the norm is the maximum over spin
    assignments z in {+-1}^n of |sum_{i<j} (x-y)_{ij} z_i z_j|.  Global spin
    flip leaves every product unchanged, so fixing z_0 = +1 halves the
    enumeration.  Above the cutoff the L1 norm is returned instead and
    flagged as a bound.
    """
    x._check_same(y)
    d = x.values - y.values
    n = x.n
    if n > OP_NORM_ENUM_CUTOFF:
        return OpNormResult(float(np.abs(d).sum()), exact=False)
    states = np.arange(1 << (n - 1), dtype=np.int64)

    def spin(site: int) -> np.ndarray:
        if site == 0:
            return np.ones_like(states, dtype=np.int8)
        return (1 - 2 * ((states >> (site - 1)) & 1)).astype(np.int8)

    energy = np.zeros(states.shape[0])
    for k, (i, j) in enumerate(all_pairs(n)):
        if d[k] != 0.0:
            energy += d[k] * (spin(i) * spin(j))
    return OpNormResult(float(np.abs(energy).max()), exact=True)
