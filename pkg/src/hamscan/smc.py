"""Sequential Monte Carlo engine: weighted particle clouds, Bayes updates,
effective sample size, and shrinkage (Liu-West style) resampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AllWeightsZero, DegenerateCovariance

WEIGHT_TOL = 1e-12


@dataclass
class ResampleConfig:
    """Shrinkage factor and the ESS fraction that triggers a resample."""

    a: float = 0.98
    ess_threshold: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 < self.a <= 1.0:
            raise ValueError("shrinkage factor must be in (0, 1]")
        if not 0.0 < self.ess_threshold <= 1.0:
            raise ValueError("ESS threshold must be in (0, 1]")


@dataclass
class ParticleCloud:
    """N parameter vectors with normalized non-negative weights."""

    particles: np.ndarray  # (N, P)
    weights: np.ndarray  # (N,)

    def __post_init__(self) -> None:
        self.particles = np.atleast_2d(np.asarray(self.particles, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (self.particles.shape[0],):
            raise ValueError("one weight per particle required")
        if np.any(self.weights < 0):
            raise ValueError("weights must be non-negative")
        total = self.weights.sum()
        if not (np.isfinite(total) and total > 0.0):
            raise ValueError("weights must have positive finite sum")
        self.weights = self.weights / total

    @classmethod
    def uniform(cls, particles: np.ndarray) -> "ParticleCloud":
        particles = np.atleast_2d(np.asarray(particles, dtype=float))
        n = particles.shape[0]
        return cls(particles, np.full(n, 1.0 / n))

    @property
    def size(self) -> int:
        return self.particles.shape[0]

    @property
    def dim(self) -> int:
        return self.particles.shape[1]


def bayes_update(cloud: ParticleCloud, datum: int, likelihood) -> ParticleCloud:
    """Multiply each weight by Pr(datum | particle) and renormalize.

    `likelihood` is either an array of per-particle pass probabilities or a
    callable mapping the (N, P) particle matrix to one.
    """
    probs = likelihood(cloud.particles) if callable(likelihood) else np.asarray(likelihood)
    probs = np.asarray(probs, dtype=float)
    if probs.shape != (cloud.size,):
        raise ValueError("need one likelihood per particle")
    factor = probs if datum else 1.0 - probs
    new = cloud.weights * factor
    total = new.sum()
    if total <= 0.0 or not np.isfinite(total):
        raise AllWeightsZero("posterior weight underflowed to zero")
    return ParticleCloud(cloud.particles, new / total)


def effective_sample_size(cloud: ParticleCloud) -> float:
    return float(1.0 / np.sum(cloud.weights**2))


def posterior_mean(cloud: ParticleCloud) -> np.ndarray:
    return cloud.weights @ cloud.particles


def posterior_cov(cloud: ParticleCloud) -> np.ndarray:
    centered = cloud.particles - posterior_mean(cloud)[None, :]
    return (centered * cloud.weights[:, None]).T @ centered


def liu_west_resample(
    rng: np.random.Generator, cloud: ParticleCloud, cfg: ResampleConfig
) -> ParticleCloud:
    """Draw a fresh uniformly weighted cloud that keeps the posterior mean
    and covariance in expectation.

    Ancestors are drawn by weight; each new particle is contracted toward
    the mean by the shrinkage factor and perturbed with covariance
    (1 - a^2) Sigma, factorized symmetrically with negative round-off
    eigenvalues floored at zero.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        mu = posterior_mean(cloud)
        cov = posterior_cov(cloud)
    if not np.all(np.isfinite(cov)):
        raise DegenerateCovariance("posterior covariance has non-finite entries")
    n = cloud.size
    idx = rng.choice(n, size=n, p=cloud.weights)
    new = cfg.a * cloud.particles[idx] + (1.0 - cfg.a) * mu[None, :]
    if cfg.a < 1.0:
        eigvals, eigvecs = np.linalg.eigh(cov)
        eigvals = np.clip(eigvals, 0.0, None)
        root = eigvecs * np.sqrt((1.0 - cfg.a**2) * eigvals)[None, :]
        new = new + rng.standard_normal((n, cloud.dim)) @ root.T
    return ParticleCloud.uniform(new)
