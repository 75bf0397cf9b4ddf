"""Exact small-system verification harness.

Dense statevector and operator simulation used to check the analytic
likelihoods, the repeated-swap truncation recursion, truncation bounds,
Trotter compositions, and numerical Fisher information.  Everything here
is an oracle: independent of the production evaluation paths and capped
at sizes where dense linear algebra is exact and fast.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import CouplingVector, Window, all_pairs, num_pairs
from . import likelihood as lk

STATEVECTOR_CAP = 12
OPERATOR_CAP = 10

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass
class PauliTermList:
    """Hermitian Hamiltonian as a real combination of Pauli words."""

    n: int
    terms: list[tuple[float, str]]

    def __post_init__(self) -> None:
        for coeff, word in self.terms:
            if not np.isfinite(coeff):
                raise ValueError("coefficients must be finite reals")
            if len(word) != self.n or any(c not in PAULI for c in word):
                raise ValueError(f"bad Pauli word {word!r} for n={self.n}")

    def support(self, word: str) -> frozenset[int]:
        return frozenset(i for i, c in enumerate(word) if c != "I")

    def coefficient_norm(self) -> float:
        """Triangle-inequality bound sum |c_k| on the operator norm."""
        return float(sum(abs(c) for c, _ in self.terms))

    def __add__(self, other: "PauliTermList") -> "PauliTermList":
        if other.n != self.n:
            raise ValueError("qubit count mismatch")
        return PauliTermList(self.n, self.terms + other.terms)

    def scaled(self, factor: float) -> "PauliTermList":
        return PauliTermList(self.n, [(factor * c, w) for c, w in self.terms])


def ising_terms(x: CouplingVector) -> PauliTermList:
    """ZZ term list of a coupling vector, dropping exact zeros."""
    terms = []
    for k, (i, j) in enumerate(all_pairs(x.n)):
        c = x.values[k]
        if c != 0.0:
            word = "".join("Z" if s in (i, j) else "I" for s in range(x.n))
            terms.append((float(c), word))
    return PauliTermList(x.n, terms)


def transverse_field_terms(n: int, fields: np.ndarray) -> PauliTermList:
    terms = []
    for i, h in enumerate(fields):
        if h != 0.0:
            terms.append((float(h), "".join("X" if s == i else "I" for s in range(n))))
    return PauliTermList(n, terms)


def embedded_window_terms(win: Window, x_local: np.ndarray, n: int) -> PauliTermList:
    """Local-pair hypothesis embedded as ZZ terms on the full chain."""
    from .model import local_pairs

    terms = []
    for (i, j), c in zip(local_pairs(win), x_local):
        if c != 0.0:
            terms.append((float(c), "".join("Z" if s in (i, j) else "I" for s in range(n))))
    return PauliTermList(n, terms)


def to_matrix(h: PauliTermList) -> np.ndarray:
    if h.n > OPERATOR_CAP:
        raise ValueError(f"n={h.n} exceeds the dense-operator cap {OPERATOR_CAP}")
    dim = 1 << h.n
    out = np.zeros((dim, dim), dtype=complex)
    for coeff, word in h.terms:
        m = np.array([[coeff]], dtype=complex)
        for c in word:
            m = np.kron(m, PAULI[c])
        out += m
    return out


def partition_terms(h: PauliTermList, win: Window) -> dict[str, PauliTermList]:
    """Route each term by support: inside the window, fully outside, or
    straddling; straddling terms split by whether they touch the
    observable support.  The partition is exhaustive and disjoint.
    """
    groups: dict[str, list] = {"in": [], "out": [], "int_a": [], "int_rest": []}
    window_sites = set(win.sites)
    a_sites = set(win.a_sites)
    for coeff, word in h.terms:
        supp = h.support(word)
        inside = supp & window_sites
        if not supp:
            groups["in"].append((coeff, word))  # identity terms are harmless
        elif inside == supp:
            groups["in"].append((coeff, word))
        elif not inside:
            groups["out"].append((coeff, word))
        elif supp & a_sites:
            groups["int_a"].append((coeff, word))
        else:
            groups["int_rest"].append((coeff, word))
    return {k: PauliTermList(h.n, v) for k, v in groups.items()}


def expi_herm(h_mat: np.ndarray, t: float) -> np.ndarray:
    """exp(-i t H) of a Hermitian matrix via eigendecomposition."""
    w, v = np.linalg.eigh(h_mat)
    return (v * np.exp(-1j * t * w)[None, :]) @ v.conj().T


_expi_herm = expi_herm


def heisenberg_mat(h_mat: np.ndarray, t: float, a_op: np.ndarray) -> np.ndarray:
    """exp(i H t) A exp(-i H t) from a prebuilt Hamiltonian matrix."""
    u = expi_herm(h_mat, t)
    return u.conj().T @ a_op @ u


def evolve_state(h: PauliTermList, t: float, psi0: np.ndarray) -> np.ndarray:
    """exp(-i H t) psi0 for n within the statevector cap."""
    if h.n > STATEVECTOR_CAP:
        raise ValueError(f"n={h.n} exceeds the statevector cap {STATEVECTOR_CAP}")
    if all(set(word) <= {"I", "Z"} for _, word in h.terms):
        return np.exp(-1j * t * _diagonal_energies(h)) * psi0
    return _expi_herm(to_matrix(h), t) @ psi0


def _diagonal_energies(h: PauliTermList) -> np.ndarray:
    """Diagonal of a Z-only term list, computed per basis state."""
    dim = 1 << h.n
    states = np.arange(dim)
    energies = np.zeros(dim)
    for coeff, word in h.terms:
        sign = np.ones(dim)
        for site, c in enumerate(word):
            if c == "Z":
                # qubit 0 = most significant axis, matching kron ordering
                bit = (states >> (h.n - 1 - site)) & 1
                sign *= 1 - 2 * bit
        energies += coeff * sign
    return energies


def heisenberg(h: PauliTermList, t: float, a_op: np.ndarray) -> np.ndarray:
    """exp(i H t) A exp(-i H t)."""
    if h.n > OPERATOR_CAP:
        raise ValueError(f"n={h.n} exceeds the dense-operator cap {OPERATOR_CAP}")
    u = _expi_herm(to_matrix(h), t)
    return u.conj().T @ a_op @ u


def plus_projector(n: int, sites: range) -> np.ndarray:
    """(|+><+|) on the given sites, identity elsewhere."""
    if n > OPERATOR_CAP:
        raise ValueError(f"n={n} exceeds the dense-operator cap {OPERATOR_CAP}")
    m = np.array([[1.0]], dtype=complex)
    plus = 0.5 * (PAULI["I"] + PAULI["X"])
    for s in range(n):
        m = np.kron(m, plus if s in sites else PAULI["I"])
    return m


def iqle_outcome_prob_dense(
    x_true: CouplingVector, x_inv, win: Window, t: float
) -> float:
    """Dense statevector oracle for the un-truncated pass probability.

    Builds the full 2^n state, applies the diagonal forward and inverse
    phases exactly, and projects the support onto |+>^a.
    """
    n = x_true.n
    if n > STATEVECTOR_CAP:
        raise ValueError(f"n={n} exceeds the statevector cap {STATEVECTOR_CAP}")
    x_inv_local = lk.resolve_hypothesis(x_inv, win)
    h_true = ising_terms(x_true)
    h_minus = embedded_window_terms(win, x_inv_local, n)
    dim = 1 << n
    psi = np.full(dim, 1.0 / np.sqrt(dim), dtype=complex)
    psi = np.exp(-1j * t * _diagonal_energies(h_true)) * psi
    psi = np.exp(1j * t * _diagonal_energies(h_minus)) * psi
    # project the support onto |+>^a: group amplitudes by outside bits
    tensor = psi.reshape((2,) * n)
    a_axes = list(win.a_sites)
    tensor = np.moveaxis(tensor, a_axes, range(len(a_axes)))
    collapsed = tensor.reshape(1 << len(a_axes), -1).sum(axis=0)
    collapsed *= 2.0 ** (-len(a_axes) / 2.0)
    return float(np.real((np.abs(collapsed) ** 2).sum()))


class RSwapResult(NamedTuple):
    a_full: np.ndarray
    a_sim: np.ndarray
    error: float


def r_swap_observable(
    h: PauliTermList,
    h_minus: PauliTermList,
    win: Window,
    t: float,
    r: int,
    a_op: np.ndarray,
) -> RSwapResult:
    """Iterate the swapped-evolution recursion and its trusted-simulator twin.

    The physical observable is conjugated r times by
    exp(iHt/r) exp(-iH_minus t/r); the simulated observable is conjugated
    by exp(i Lambda t/r) with Lambda the in-window discrepancy.  Returns
    both operators and the spectral norm of their difference.
    """
    if h.n > OPERATOR_CAP:
        raise ValueError(f"n={h.n} exceeds the dense-operator cap {OPERATOR_CAP}")
    if r < 1:
        raise ValueError("swap count must be >= 1")
    parts = partition_terms(h, win)
    lam = parts["in"] + h_minus.scaled(-1.0)
    u_h = _expi_herm(to_matrix(h), t / r)
    u_minus = _expi_herm(to_matrix(h_minus), t / r)
    u_lam = _expi_herm(to_matrix(lam), t / r)
    step = u_h.conj().T @ u_minus  # exp(iHt/r) exp(-iH_minus t/r)
    a_full = a_op.copy()
    a_sim = a_op.copy()
    for _ in range(r):
        a_full = step @ a_full @ step.conj().T
        a_sim = u_lam.conj().T @ a_sim @ u_lam
    return RSwapResult(a_full, a_sim, float(np.linalg.norm(a_full - a_sim, 2)))


def discrepancy_terms(h: PauliTermList, h_minus: PauliTermList, win: Window) -> PauliTermList:
    """Lambda = (in-window part of H) - H_minus."""
    return partition_terms(h, win)["in"] + h_minus.scaled(-1.0)


class FisherResult(NamedTuple):
    matrix: np.ndarray
    defined: np.ndarray


def fisher_numeric(
    x: CouplingVector, x_inv, win: Window, t: float, h_step: float = 1e-4
) -> FisherResult:
    """Fisher information of the two-outcome experiment by central
    finite differences of the analytic likelihood over all couplings.

    With outcomes {pass, fail}, I_ij = dL_i dL_j / (L (1 - L)).  Entries
    are undefined when either outcome probability falls below 1e-9.
    """
    p = num_pairs(x.n)
    center = lk.likelihood_full(x, x_inv, win, t)
    grad = np.zeros(p)
    for k in range(p):
        bumped = x.values.copy()
        bumped[k] += h_step
        up = lk.likelihood_full(CouplingVector(x.n, bumped), x_inv, win, t)
        bumped[k] -= 2 * h_step
        dn = lk.likelihood_full(CouplingVector(x.n, bumped), x_inv, win, t)
        grad[k] = (up - dn) / (2 * h_step)
    if center < 1e-9 or 1.0 - center < 1e-9:
        return FisherResult(np.full((p, p), np.nan), np.zeros((p, p), dtype=bool))
    matrix = np.outer(grad, grad) / (center * (1.0 - center))
    return FisherResult(matrix, np.ones((p, p), dtype=bool))


def fit_propagation_constants(
    t_grid: np.ndarray, dist_grid: np.ndarray, comm_norms: np.ndarray, prefactor: float
) -> tuple[float, float]:
    """Fit (velocity, decay rate) to measured commutator norms.

    Model: norm ~ prefactor * exp(-mu * dist) * (exp(2 s t) - 1).  A coarse
    grid over s with a per-s linear fit of mu keeps this robust; the fit is
    diagnostic only.
    """
    mask = comm_norms > 0
    if mask.sum() < 3:
        return (0.0, 0.0)
    log_norm = np.log(comm_norms[mask])
    ts = np.asarray(t_grid)[mask]
    ds = np.asarray(dist_grid)[mask]
    best = (np.inf, 0.0, 0.0)
    for s in np.linspace(0.01, 20.0, 400):
        rhs = log_norm - np.log(np.expm1(2.0 * s * ts)) - np.log(prefactor)
        # rhs ~ -mu * dist; least squares for mu
        denom = float(ds @ ds)
        mu = -float(ds @ rhs) / denom if denom > 0 else 0.0
        resid = float(np.sum((rhs + mu * ds) ** 2))
        if resid < best[0]:
            best = (resid, s, mu)
    return best[1], best[2]
