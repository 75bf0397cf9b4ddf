"""Batch command-line interface.

Subcommands: learn, bootstrap, bounds, fisher, verify-lr, oracle-check,
scaling.  Every command takes an optional JSON config plus flag overrides
mirroring the config keys, runs deterministically from the seed, and
writes machine-readable outputs (CSV traces/reports plus JSON summaries
that embed the resolved config and a content hash).

Exit codes: 0 success, 1 run failure, 2 config error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bounds, verify
from .config import RunConfig, load_config
from .control import (
    CrosstalkDevice,
    calibrate,
    evaluate_calibration,
    learn_control_map,
    nn_targets,
    prior_control_map,
    pseudoinverse,
)
from .errors import ConfigError, HamscanError
from .model import CouplingVector, PriorSpec, param_error_l2
from .rng import stream
from .scan import (
    GlobalCloud,
    ScanConfig,
    ScanSchedule,
    SimulatedIsingSource,
    TRACE_COLUMNS,
    run_scan,
    scan_estimate,
)

log = logging.getLogger("hamscan")


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, _overrides(args))
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2
    try:
        handler = _HANDLERS[args.command]
        return handler(cfg)
    except HamscanError as exc:
        log.error("run failed: %s", exc)
        return 1
    except Exception:  # noqa: BLE001 - CLI boundary
        log.exception("run failed")
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hamscan",
        description="Windowed Bayesian learning and control calibration for Ising chains",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "learn": "scan a hidden chain and write the error trace",
        "bootstrap": "learn a crosstalk device's control map and calibrate it",
        "bounds": "evaluate the closed-form bound set for the configured geometry",
        "fisher": "check numerical Fisher information against its ceiling",
        "verify-lr": "check the swap-recursion truncation bound on dense instances",
        "oracle-check": "compare analytic likelihoods with the dense oracle",
        "scaling": "median learning error across chain sizes",
    }
    for name, desc in descriptions.items():
        p = sub.add_parser(name, help=desc)
        _add_common_flags(p)
    return parser


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--a", type=int, default=None)
    p.add_argument("--w", type=int, default=None)
    p.add_argument("--particles", type=int, default=None)
    p.add_argument("--experiments-per-scan", dest="experiments_per_scan", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--likelihood-mode", dest="likelihood_mode", default=None,
                   choices=["exact", "sampled"])
    p.add_argument("--n-samp", dest="n_samp", type=int, default=None)
    p.add_argument("--resample-a", dest="resample_a", type=float, default=None)
    p.add_argument("--ess-threshold", dest="ess_threshold", type=float, default=None)
    p.add_argument("--prior-kind", dest="prior_kind", default=None)
    p.add_argument("--prior-b", dest="prior_b", type=float, default=None)
    p.add_argument("--prior-alpha", dest="prior_alpha", type=float, default=None)
    p.add_argument("--prior-control", dest="prior_control", type=int, default=None)
    p.add_argument("--delta-trunc", dest="delta_trunc", type=float, default=None)
    p.add_argument("--positions", default=None,
                   help="comma-separated schedule override")
    p.add_argument("--num-controls", dest="num_controls", type=int, default=None)
    p.add_argument("--target-strength", dest="target_strength", type=float, default=None)
    p.add_argument("--n-list", dest="n_list", default=None,
                   help="comma-separated chain sizes for scaling sweeps")
    p.add_argument("--repetitions", type=int, default=None)
    p.add_argument("--instances", type=int, default=None)
    p.add_argument("--tier", default=None, choices=["desk", "full"])
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--output-dir", dest="output_dir", default=None)


def _overrides(args: argparse.Namespace) -> dict:
    skip = {"command", "config"}
    out = {}
    for key, value in vars(args).items():
        if key in skip or value is None:
            continue
        if key in ("positions", "n_list") and isinstance(value, str):
            value = [int(v) for v in value.split(",") if v.strip()]
        out[key] = value
    return out


def _outdir(cfg: RunConfig) -> Path:
    path = Path(cfg.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, payload: dict, cfg: RunConfig) -> None:
    body = dict(payload)
    body["config"] = cfg.to_dict()
    blob = json.dumps(body, indent=2, sort_keys=True, default=float)
    body["content_sha256"] = hashlib.sha256(blob.encode()).hexdigest()
    path.write_text(json.dumps(body, indent=2, sort_keys=True, default=float))
    log.info("wrote %s", path)


def _write_csv(path: Path, header: tuple[str, ...], rows: list[tuple], cfg: RunConfig) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    meta = {
        "file": path.name,
        "sha256": hashlib.sha256(path.read_bytes()).hexdigest(),
        "columns": list(header),
    }
    _write_json(path.with_suffix(path.suffix + ".meta.json"), meta, cfg)


def fit_decay_rate(errors: np.ndarray) -> tuple[float, int]:
    """Least-squares exponential decay rate of an error sequence.

    Fits log(error) against the experiment index; non-positive entries are
    dropped (their count is returned).  The rate is the negated slope.
    """
    errors = np.asarray(errors, dtype=float)
    idx = np.arange(errors.size)
    keep = errors > 0
    dropped = int((~keep).sum())
    if keep.sum() < 2:
        return float("nan"), dropped
    slope, _ = np.polyfit(idx[keep], np.log(errors[keep]), 1)
    return float(-slope), dropped


def cmd_learn(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    prior = cfg.prior()
    x_true = prior.sample(stream(cfg.seed, "truth"), cfg.n)
    cloud = GlobalCloud.from_prior(stream(cfg.seed, "prior-cloud"), prior, cfg.n, cfg.particles)
    prior_error = param_error_l2(scan_estimate(cloud), x_true)
    schedule = ScanSchedule(
        n=cfg.n, a=cfg.a, w=cfg.w,
        experiments_per_scan=cfg.experiments_per_scan,
        positions=list(cfg.positions) if cfg.positions else [],
    )
    scan_cfg = ScanConfig(
        resample=cfg.resample(),
        delta_trunc=cfg.delta_trunc,
        decay=(cfg.prior_b, cfg.prior_alpha),
        likelihood_mode=cfg.likelihood_mode,
        n_samp=cfg.n_samp,
    )
    final, trace = run_scan(
        SimulatedIsingSource(x_true), cloud, schedule, scan_cfg,
        stream(cfg.seed, "scan"), truth=x_true,
    )
    estimate = scan_estimate(final)
    rows = [
        (r.position, r.experiment_index, repr(r.t), repr(r.ess),
         repr(r.l2_error), repr(r.l1_opnorm_bound))
        for r in trace
    ]
    _write_csv(out / "trace.csv", TRACE_COLUMNS, rows, cfg)
    rate, dropped = fit_decay_rate(np.array([r.l2_error for r in trace]))
    summary = {
        "final_l2_error": param_error_l2(estimate, x_true),
        "final_l1_opnorm_bound": float(np.abs(estimate.values - x_true.values).sum()),
        "prior_mean_l2_error": prior_error,
        "improvement_factor": prior_error / max(param_error_l2(estimate, x_true), 1e-300),
        "fitted_decay_rate": rate,
        "dropped_log_points": dropped,
        "positions": schedule.positions,
        "experiments_total": len(trace),
        "aborted_positions": trace.aborted_positions,
    }
    _write_json(out / "summary.json", summary, cfg)
    if trace.aborted_positions:
        log.error("learning aborted at positions %s", trace.aborted_positions)
        return 1
    return 0


def _scan_learner(cfg: RunConfig):
    """cQHL learner for one configured device: scan with the appropriate
    column prior and return the cloud-mean estimate."""

    def learner(source, column: int | None) -> CouplingVector:
        label = "learn-offset" if column is None else f"learn-column-{column}"
        rng = stream(cfg.seed, label)
        prior = cfg.offset_prior() if column is None else cfg.control_prior(column)
        cloud = GlobalCloud.from_prior(rng, prior, cfg.n, cfg.particles)
        schedule = ScanSchedule(
            n=cfg.n, a=cfg.a, w=cfg.w, experiments_per_scan=cfg.experiments_per_scan
        )
        scan_cfg = ScanConfig(
            resample=cfg.resample(),
            delta_trunc=cfg.delta_trunc,
            decay=(cfg.prior_b, cfg.prior_alpha),
            likelihood_mode=cfg.likelihood_mode,
            n_samp=cfg.n_samp,
        )
        final, _ = run_scan(source, cloud, schedule, scan_cfg, rng)
        return scan_estimate(final)

    return learner


def cmd_bootstrap(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    m = cfg.num_controls if cfg.num_controls is not None else cfg.n - 1
    device = CrosstalkDevice(stream(cfg.seed, "device"), cfg.n, m)
    estimate, column_ok = learn_control_map(device, _scan_learner(cfg))
    true_map = device.true_map()

    targets = nn_targets(cfg.n, cfg.target_strength)[:m]
    controls = calibrate(estimate, targets)
    naive_stats = evaluate_calibration(true_map, controls, targets)
    prior_map = prior_control_map(cfg.n, m)
    prior_controls = calibrate(prior_map, targets)
    prior_stats = evaluate_calibration(
        true_map, controls, targets, baseline_controls=prior_controls
    )

    rows = [
        (k, repr(float(naive_stats.before[k])), repr(float(naive_stats.after[k])))
        for k in range(len(targets))
    ]
    _write_csv(out / "calibration_report.csv", ("target_index", "before", "after"), rows, cfg)
    _write_json(out / "control_map.json", {"estimate": estimate.to_dict()}, cfg)

    gains_err = float(np.linalg.norm(true_map.gains - estimate.gains, 2))
    gains_prior_err = float(np.linalg.norm(true_map.gains - prior_map.gains, 2))
    target_norm = float(np.mean(naive_stats.target_norms))
    summary = {
        "columns_ok": column_ok,
        "before_naive_mean": naive_stats.before_mean,
        "before_naive_std": naive_stats.before_std,
        "before_prior_calibrated_mean": prior_stats.before_mean,
        "before_prior_calibrated_std": prior_stats.before_std,
        "after_mean": naive_stats.after_mean,
        "after_std": naive_stats.after_std,
        "after_median": float(np.median(naive_stats.after)),
        "before_naive_median": float(np.median(naive_stats.before)),
        "relative_before_prior_calibrated_mean": prior_stats.before_mean / target_norm,
        "relative_before_prior_calibrated_std": prior_stats.before_std / target_norm,
        "relative_after_mean": naive_stats.after_mean / target_norm,
        "relative_after_std": naive_stats.after_std / target_norm,
        "gains_spectral_error": gains_err,
        "gains_prior_spectral_error": gains_prior_err,
        "offset_l2_error": param_error_l2(estimate.offset, true_map.offset),
    }
    _write_json(out / "bootstrap_summary.json", summary, cfg)
    return 0


def cmd_bounds(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    h_exp = bounds.window_interaction_norm_exp(cfg.a, cfg.w, cfg.prior_b, cfg.prior_alpha)
    reports = [
        bounds.BoundReport(
            "window-interaction-norm-exp",
            {"a": cfg.a, "w": cfg.w, "b": cfg.prior_b, "alpha": cfg.prior_alpha},
            h_exp,
            "a b exp(-floor((w-a)/2) alpha) / (1 - exp(-alpha))",
        ),
        bounds.BoundReport(
            "max-time-commuting",
            {"delta": cfg.delta_trunc, "a_norm": 1.0, "h_int_a": h_exp},
            bounds.max_time_commuting(cfg.delta_trunc, 1.0, h_exp),
            "ln(delta/||A|| + 1) / (2 h)",
        ),
        bounds.BoundReport(
            "commuting-truncation",
            {"a_norm": 1.0, "h_int_a": h_exp, "t": 1.0},
            bounds.commuting_truncation_bound(1.0, h_exp, 1.0),
            "||A|| (exp(2 h t) - 1)",
        ),
        bounds.BoundReport(
            "fisher-ceiling",
            {"grad_i": 1.0, "grad_j": 1.0, "t": 1.0},
            bounds.fisher_bound(1.0, 1.0, 1.0),
            "4 ||dH_i|| ||dH_j|| t^2",
        ),
    ]
    if cfg.prior_alpha > 1.0:
        reports.append(
            bounds.BoundReport(
                "window-interaction-norm-poly",
                {"a": cfg.a, "w": cfg.w, "b": cfg.prior_b, "alpha": cfg.prior_alpha},
                bounds.window_interaction_norm_poly(cfg.a, cfg.w, cfg.prior_b, cfg.prior_alpha),
                "a b alpha / ((floor((w-a)/2)+1)^alpha (alpha-1))",
            )
        )
    swap = bounds.swap_error_r_max(cfg.delta_trunc, cfg.delta_trunc / 9.0)
    reports.append(
        bounds.BoundReport(
            "swap-miscalibration-r-max",
            {"delta": cfg.delta_trunc, "delta_swap": cfg.delta_trunc / 9.0},
            float(swap.r),
            "floor((delta/Delta + 1)/2)",
        )
    )
    _write_json(out / "bounds.json", {"reports": [r.to_dict() for r in reports]}, cfg)
    return 0


def _verdict_payload(checks: list[verify.BoundCheck]) -> dict:
    violations = [c for c in checks if not c.ok]
    return {
        "checks": len(checks),
        "violations": len(violations),
        "violating_labels": [c.label for c in violations],
        "max_measured": max((c.measured for c in checks), default=0.0),
        "min_margin": min((c.margin for c in checks), default=float("inf")),
        "passed": not violations,
    }


def cmd_fisher(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    rng = stream(cfg.seed, "fisher")
    checks = verify.fisher_checks(rng, n=min(cfg.n, 6), instances=cfg.instances)
    payload = _verdict_payload(checks)
    _write_json(out / "fisher_report.json", payload, cfg)
    return 0 if payload["passed"] else 1


def cmd_verify_lr(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    rng = stream(cfg.seed, "verify-lr")
    checks = verify.swap_recursion_checks(rng, n=min(cfg.n, 8), instances=cfg.instances)
    commuting = verify.commuting_truncation_checks(
        rng, n=min(cfg.n, 8), instances=cfg.instances
    )
    payload = {
        "swap_recursion": _verdict_payload(checks),
        "commuting_truncation": _verdict_payload(commuting),
        "propagation_fit": verify.propagation_diagnostic(rng, n=min(cfg.n, 8)),
    }
    passed = payload["swap_recursion"]["passed"] and payload["commuting_truncation"]["passed"]
    payload["passed"] = passed
    _write_json(out / "lr_report.json", payload, cfg)
    return 0 if passed else 1


def cmd_oracle_check(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    rng = stream(cfg.seed, "oracle-check")
    checks = verify.oracle_checks(rng, instances=cfg.instances)
    payload = _verdict_payload(checks)
    payload["max_deviation"] = payload.pop("max_measured")
    _write_json(out / "oracle_report.json", payload, cfg)
    return 0 if payload["passed"] else 1


def cmd_scaling(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    rows = []
    results = {}
    for n in cfg.n_list:
        errors = []
        priors = []
        for rep in range(cfg.repetitions):
            rng = stream(cfg.seed, f"scaling-{n}", rep)
            prior = PriorSpec(b=cfg.prior_b, alpha=cfg.prior_alpha)
            x_true = prior.sample(rng, n)
            cloud = GlobalCloud.from_prior(rng, prior, n, cfg.particles)
            priors.append(param_error_l2(scan_estimate(cloud), x_true))
            schedule = ScanSchedule(
                n=n, a=cfg.a, w=cfg.w, experiments_per_scan=cfg.experiments_per_scan
            )
            scan_cfg = ScanConfig(
                resample=cfg.resample(),
                delta_trunc=cfg.delta_trunc,
                decay=(cfg.prior_b, cfg.prior_alpha),
                likelihood_mode=cfg.likelihood_mode,
                n_samp=cfg.n_samp,
            )
            final, _ = run_scan(SimulatedIsingSource(x_true), cloud, schedule, scan_cfg, rng)
            errors.append(param_error_l2(scan_estimate(final), x_true))
        median = float(np.median(errors))
        results[n] = {"median_l2_error": median, "errors": errors, "prior_median": float(np.median(priors))}
        rows.append((n, repr(median), repr(float(np.median(priors))), cfg.repetitions))
    _write_csv(out / "scaling.csv", ("n", "median_l2_error", "prior_median_l2_error", "repetitions"), rows, cfg)
    _write_json(out / "scaling_summary.json", {"results": {str(k): v for k, v in results.items()}}, cfg)
    return 0


_HANDLERS = {
    "learn": cmd_learn,
    "bootstrap": cmd_bootstrap,
    "bounds": cmd_bounds,
    "fisher": cmd_fisher,
    "verify-lr": cmd_verify_lr,
    "oracle-check": cmd_oracle_check,
    "scaling": cmd_scaling,
}


if __name__ == "__main__":
    sys.exit(main())
