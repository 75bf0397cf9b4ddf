"""Measured-versus-bound verification suites.

Each verifier builds small random instances, measures the quantity of
interest with the dense harness, evaluates the matching closed-form
ceiling, and reports per-case margins.  A case is a violation when the
measurement exceeds its ceiling beyond numerical slack.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import bounds, densesim
from .design import place_window
from .likelihood import likelihood_full
from .model import CouplingVector, PriorSpec, local_pairs, num_pairs, pair_index

NUMERICAL_SLACK = 1e-9


@dataclass
class BoundCheck:
    label: str
    measured: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.measured <= self.bound * (1.0 + 1e-12) + NUMERICAL_SLACK

    @property
    def margin(self) -> float:
        return self.bound - self.measured


def _spectral(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, 2))


def _commutator_norm(a: np.ndarray, b: np.ndarray) -> float:
    return _spectral(a @ b - b @ a)


def random_decay_instance(
    rng: np.random.Generator, n: int, scale: float = 1.0
) -> CouplingVector:
    """Couplings with the decaying-envelope profile, scaled."""
    return PriorSpec().sample(rng, n).scale(scale)


def commuting_truncation_checks(
    rng: np.random.Generator,
    n: int = 8,
    a: int = 2,
    w: int = 4,
    t_grid: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0),
    instances: int = 50,
) -> list[BoundCheck]:
    """Measured windowed-simulation error of diagonal chains against the
    commuting truncation ceiling, on instances with a nonzero neglected
    support-to-outside interaction."""
    out: list[BoundCheck] = []
    for k in range(instances):
        pos = int(rng.integers(0, n - a + 1))
        win = place_window(n, a, w, pos)
        x = random_decay_instance(rng, n)
        h = densesim.ising_terms(x)
        parts = densesim.partition_terms(h, win)
        if not parts["int_a"].terms:  # ensure the bound is exercised
            i = win.a_lo
            j = win.hi if win.hi < n else win.lo - 1
            lo, hi = min(i, j), max(i, j)
            x.values[pair_index(x.n, lo, hi)] += 0.02
            h = densesim.ising_terms(x)
            parts = densesim.partition_terms(h, win)
        a_op = densesim.plus_projector(n, win.a_sites)
        h_int_a = _spectral(densesim.to_matrix(parts["int_a"]))
        h_in_mat = densesim.to_matrix(parts["in"])
        h_mat = densesim.to_matrix(h)
        for t in t_grid:
            full = densesim.heisenberg_mat(h_mat, t, a_op)
            sim = densesim.heisenberg_mat(h_in_mat, t, a_op)
            measured = _spectral(full - sim)
            ceiling = bounds.commuting_truncation_bound(1.0, h_int_a, t)
            out.append(BoundCheck(f"inst{k}/t={t}", measured, ceiling))
    return out


def swap_recursion_checks(
    rng: np.random.Generator,
    n: int = 8,
    a: int = 2,
    w: int = 4,
    t_grid: tuple[float, ...] = (0.1, 0.25, 0.5, 1.0),
    r_grid: tuple[int, ...] = (1, 2, 4, 8),
    instances: int = 3,
    field_scale: float = 0.5,
    hypothesis_jitter: float = 0.1,
) -> list[BoundCheck]:
    """Per-step verification of the swapped-evolution error recursion with
    exact commutator norms on transverse-field chains.

    At every step the accumulated right-hand side uses the exact spectral
    norm of the commutator with the current simulated observable, so the
    check is free of propagation-speed constants.
    """
    out: list[BoundCheck] = []
    for k in range(instances):
        pos = int(rng.integers(0, n - a + 1))
        win = place_window(n, a, w, pos)
        x = random_decay_instance(rng, n)
        fields = rng.uniform(0.0, field_scale, n)
        h = densesim.ising_terms(x) + densesim.transverse_field_terms(n, fields)
        parts = densesim.partition_terms(h, win)
        h_minus_terms = [
            (c * (1.0 + rng.uniform(-hypothesis_jitter, hypothesis_jitter)), word)
            for c, word in parts["in"].terms
        ]
        h_minus = densesim.PauliTermList(n, h_minus_terms)
        lam = parts["in"] + h_minus.scaled(-1.0)
        a_op = densesim.plus_projector(n, win.a_sites)

        h_mat = densesim.to_matrix(h)
        h_minus_mat = densesim.to_matrix(h_minus)
        lam_mat = densesim.to_matrix(lam)
        h_in_mat = densesim.to_matrix(parts["in"])
        h_int_mat = densesim.to_matrix(parts["int_a"] + parts["int_rest"])
        out_rest = parts["out"] + parts["int_rest"]
        out_rest_mat = densesim.to_matrix(out_rest)
        comm_in_lam = _commutator_norm(h_in_mat, lam_mat)
        comm_int_in = _commutator_norm(h_int_mat, h_in_mat)
        h_int_a_norm = _spectral(densesim.to_matrix(parts["int_a"]))
        out_rest_norm = _spectral(out_rest_mat)
        a_norm = _spectral(a_op)

        for t in t_grid:
            for r in r_grid:
                u_step = densesim.expi_herm(h_mat, -t / r) @ densesim.expi_herm(
                    h_minus_mat, t / r
                )
                u_lam = densesim.expi_herm(lam_mat, -t / r)
                a_full = a_op.copy()
                a_sim = a_op.copy()
                rhs = 0.0
                for step in range(1, r + 1):
                    a_full = u_step @ a_full @ u_step.conj().T
                    a_sim = u_lam @ a_sim @ u_lam.conj().T
                    rhs += (comm_in_lam + comm_int_in) * a_norm * t * t / (r * r)
                    rhs += 2.0 * h_int_a_norm * a_norm * t / r
                    comm_now = _commutator_norm(out_rest_mat, a_sim)
                    rhs += comm_now * np.exp(2.0 * out_rest_norm * t / r) * t / r
                    measured = _spectral(a_full - a_sim)
                    out.append(
                        BoundCheck(f"inst{k}/t={t}/r={r}/step={step}", measured, rhs)
                    )
    return out


def fisher_checks(
    rng: np.random.Generator,
    n: int = 6,
    a: int = 2,
    w: int = 4,
    t_grid: tuple[float, ...] = (0.3, 0.7, 1.3, 2.1),
    instances: int = 8,
    fd_tol: float = 1e-6,
) -> list[BoundCheck]:
    """Finite-difference Fisher entries against the 4 t^2 ceiling (unit
    term-gradient norms).  The ceiling is widened by the finite-difference
    tolerance because single-coupling experiments saturate it exactly."""
    out: list[BoundCheck] = []
    for k in range(instances):
        pos = int(rng.integers(0, n - a + 1))
        win = place_window(n, a, w, pos)
        x = random_decay_instance(rng, n)
        x_inv = x.restrict(local_pairs(win))
        x_inv = x_inv + rng.normal(0, 0.05, x_inv.shape)
        for t in t_grid:
            result = densesim.fisher_numeric(x, x_inv, win, t)
            if not result.defined.any():
                continue
            measured = float(np.abs(result.matrix[result.defined]).max())
            ceiling = bounds.fisher_bound(1.0, 1.0, t) * (1.0 + fd_tol)
            out.append(BoundCheck(f"inst{k}/t={t}", measured, ceiling))
    return out


def propagation_diagnostic(
    rng: np.random.Generator,
    n: int = 8,
    a: int = 2,
    w: int = 4,
    t_grid: tuple[float, ...] = (0.2, 0.4, 0.8),
) -> dict:
    """Fit effective propagation constants on a reference family.

    Measures the exact commutator norm of the outside interaction with the
    simulated observable across times and window margins, fits the
    (velocity, decay-rate) pair, and evaluates the closed-form ceiling with
    them.  Diagnostic only: the hard gate is the per-step recursion check
    with exact norms.
    """
    pos = 1
    x = random_decay_instance(rng, n)
    fields = rng.uniform(0.0, 0.5, n)
    h = densesim.ising_terms(x) + densesim.transverse_field_terms(n, fields)
    ts, dists, norms = [], [], []
    prefactor = None
    for width in (w, w + 2):
        win = place_window(n, a, min(width, n), pos)
        parts = densesim.partition_terms(h, win)
        h_minus_terms = [(c * 1.05, word) for c, word in parts["in"].terms]
        lam = parts["in"] + densesim.PauliTermList(n, h_minus_terms).scaled(-1.0)
        out_rest = parts["out"] + parts["int_rest"]
        if not out_rest.terms:
            continue
        out_rest_mat = densesim.to_matrix(out_rest)
        lam_mat = densesim.to_matrix(lam)
        a_op = densesim.plus_projector(n, win.a_sites)
        # distance from the support to the nearest site outside the window
        gaps = [win.a_lo - win.lo + 1, win.hi - win.a_hi + 1]
        dist = float(min(g for g in gaps if g > 0)) if win.width < n else float(n)
        if prefactor is None:
            prefactor = (
                2.0 * _spectral(out_rest_mat) * _spectral(a_op) * win.a_width
            )
        for t in t_grid:
            u = densesim.expi_herm(lam_mat, -t)
            a_sim = u @ a_op @ u.conj().T
            ts.append(t)
            dists.append(dist)
            norms.append(_commutator_norm(out_rest_mat, a_sim))
    s_fit, mu_fit = densesim.fit_propagation_constants(
        np.array(ts), np.array(dists), np.array(norms), prefactor or 1.0
    )
    return {
        "velocity": s_fit,
        "decay_rate": mu_fit,
        "samples": len(norms),
        "max_commutator_norm": max(norms) if norms else 0.0,
    }


def oracle_checks(
    rng: np.random.Generator,
    instances: int = 100,
    n_max: int = 10,
    a_max: int = 3,
    t_max: float = 5.0,
) -> list[BoundCheck]:
    """Analytic likelihood against the dense statevector oracle; the
    'bound' is the agreement tolerance 1e-10."""
    out: list[BoundCheck] = []
    for k in range(instances):
        n = int(rng.integers(3, n_max + 1))
        a = int(rng.integers(1, min(a_max, n) + 1))
        w = int(rng.integers(a, n + 1))
        pos = int(rng.integers(0, n - a + 1))
        win = place_window(n, a, w, pos)
        x_true = CouplingVector(n, rng.normal(0.0, 0.8, num_pairs(n)))
        x_inv = rng.normal(0.0, 0.8, len(local_pairs(win)))
        t = float(rng.uniform(1e-3, t_max))
        analytic = likelihood_full(x_true, x_inv, win, t)
        dense = densesim.iqle_outcome_prob_dense(x_true, x_inv, win, t)
        out.append(BoundCheck(f"inst{k}", abs(analytic - dense), 1e-10))
    return out
