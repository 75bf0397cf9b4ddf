"""Run configuration: JSON file plus flag overrides, validated up front."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .model import CROSSTALK_CONTROL, DEFAULT_ALPHA, EXP_DECAY_UNIFORM, PriorSpec
from .smc import ResampleConfig

TIERS = ("desk", "full")


@dataclass
class RunConfig:
    """Everything a batch command needs, with provenance-friendly dumping.

    Numeric defaults follow the headline experiments: a 50-site chain
    scanned with a 4-site observable in an 8-site window and 20000
    particles; desk runs override these downward.
    """

    n: int = 50
    a: int = 4
    w: int = 8
    particles: int = 20000
    experiments_per_scan: int = 100
    seed: int = 0
    likelihood_mode: str = "exact"
    n_samp: int = 100
    resample_a: float = 0.98
    ess_threshold: float = 0.5
    prior_kind: str = EXP_DECAY_UNIFORM
    prior_b: float = 1.0
    prior_alpha: float = DEFAULT_ALPHA
    prior_control: int | None = None
    delta_trunc: float = 0.01
    positions: list[int] | None = None
    num_controls: int | None = None
    target_strength: float = 10.0
    n_list: list[int] = field(default_factory=list)
    repetitions: int = 3
    instances: int = 100
    tier: str = "desk"
    threads: int = 1
    output_dir: str = "out"

    def validate(self) -> None:
        checks = [
            (self.n >= 2, "n must be at least 2"),
            (1 <= self.a <= self.w, "need w >= a >= 1"),
            (self.a <= self.n, "observable cannot exceed the chain"),
            (self.particles >= 2, "need at least two particles"),
            (self.experiments_per_scan >= 0, "experiment budget must be >= 0"),
            (0 <= self.seed < 2**64, "seed must fit in 64 bits"),
            (self.likelihood_mode in ("exact", "sampled"), "unknown likelihood mode"),
            (self.n_samp >= 1, "n_samp must be >= 1"),
            (0.0 < self.resample_a <= 1.0, "resample_a must be in (0, 1]"),
            (0.0 < self.ess_threshold <= 1.0, "ess_threshold must be in (0, 1]"),
            (self.prior_kind in (EXP_DECAY_UNIFORM, CROSSTALK_CONTROL), "unknown prior"),
            (self.prior_b > 0, "prior_b must be positive"),
            (self.prior_alpha > 0, "prior_alpha must be positive"),
            (self.delta_trunc > 0, "delta_trunc must be positive"),
            (self.target_strength > 0, "target_strength must be positive"),
            (self.repetitions >= 1, "repetitions must be >= 1"),
            (self.instances >= 1, "instances must be >= 1"),
            (self.tier in TIERS, f"tier must be one of {TIERS}"),
            (self.threads == 1, "only single-threaded runs are supported"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        if self.positions is not None:
            for p in self.positions:
                if not 0 <= p <= self.n - self.a:
                    raise ConfigError(f"schedule position {p} out of range")
        if self.num_controls is not None and not 1 <= self.num_controls <= self.n - 1:
            raise ConfigError("num_controls must be in [1, n-1]")
        if self.prior_kind == CROSSTALK_CONTROL:
            if self.prior_control is None or not 0 <= self.prior_control < self.n - 1:
                raise ConfigError("crosstalk prior needs prior_control in [0, n-2]")
        for v in self.n_list:
            if v < max(2, self.a):
                raise ConfigError(f"scaling size {v} too small for a={self.a}")

    def prior(self) -> PriorSpec:
        return PriorSpec(
            kind=self.prior_kind,
            b=self.prior_b,
            alpha=self.prior_alpha,
            control=self.prior_control,
        )

    def control_prior(self, control: int) -> PriorSpec:
        """Prior for learning one control column of a crosstalk device."""
        return PriorSpec(
            kind=CROSSTALK_CONTROL, b=self.prior_b, alpha=self.prior_alpha, control=control
        )

    def offset_prior(self) -> PriorSpec:
        """Prior for learning the idle-device couplings."""
        return PriorSpec(kind=EXP_DECAY_UNIFORM, b=self.prior_b, alpha=self.prior_alpha)

    def resample(self) -> ResampleConfig:
        return ResampleConfig(a=self.resample_a, ess_threshold=self.ess_threshold)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        return out

    def content_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()


def load_config(path: str | None, overrides: dict) -> RunConfig:
    """Build a config from an optional JSON file and non-None overrides."""
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        cfg = RunConfig(**{k: v for k, v in data.items() if k in known})
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    _coerce_types(cfg)
    cfg.validate()
    return cfg


def _coerce_types(cfg: RunConfig) -> None:
    for name in ("n", "a", "w", "particles", "experiments_per_scan", "n_samp",
                 "repetitions", "instances", "threads"):
        setattr(cfg, name, int(getattr(cfg, name)))
    cfg.seed = int(cfg.seed)
    for name in ("resample_a", "ess_threshold", "prior_b", "prior_alpha",
                 "delta_trunc", "target_strength"):
        value = float(getattr(cfg, name))
        if math.isnan(value):
            raise ConfigError(f"{name} must be a number")
        setattr(cfg, name, value)
    if cfg.positions is not None:
        cfg.positions = [int(p) for p in cfg.positions]
    cfg.n_list = [int(v) for v in cfg.n_list]
    if cfg.num_controls is not None:
        cfg.num_controls = int(cfg.num_controls)
    if cfg.prior_control is not None:
        cfg.prior_control = int(cfg.prior_control)
