"""Figure rendering from hamscan's delimited outputs.

Consumed schemas (documented in the hamscan README):
  trace CSV    position,experiment_index,t,ess,l2_error,l1_opnorm_bound
  report CSV   target_index,before,after
  scaling CSV  n,median_l2_error,prior_median_l2_error,repetitions
  summary JSON {"final_l2_error": ..., "config": {"experiments_per_scan": ...}}

Rendering is a pure function of the input files and the spec: no RNG, no
timestamps, fixed style.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

log = logging.getLogger("hamscan_figures")

KINDS = ("decay", "histogram", "scaling")


class SchemaError(ValueError):
    """An input file does not match its documented schema."""


@dataclass
class FigureSpec:
    kind: str
    inputs: list[str]
    output: str
    log_y: bool = True  # decay curves default to a log error axis
    title: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise SchemaError("at least one input file is required")
        missing = [p for p in self.inputs if not Path(p).exists()]
        if missing:
            raise SchemaError(f"missing input files: {missing}")

    @classmethod
    def from_json(cls, path: str) -> "FigureSpec":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"cannot read spec {path}: {exc}") from exc
        known = {"kind", "inputs", "output", "log_y", "title"}
        unknown = set(data) - known
        if unknown:
            raise SchemaError(f"unknown spec keys: {sorted(unknown)}")
        return cls(**data)


def _read_csv(path: str, required: tuple[str, ...]) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header {required}")
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(
                f"{path}: header {header} is missing columns {missing}"
            )
        columns: dict[str, list[float]] = {c: [] for c in required}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise SchemaError(
                    f"{path}: row {lineno} has {len(row)} fields, header has {len(header)}"
                )
            for c in required:
                cell = row[header.index(c)]
                try:
                    columns[c].append(float(cell))
                except ValueError:
                    raise SchemaError(
                        f"{path}: row {lineno}, column {c!r}: {cell!r} is not a number"
                    ) from None
    return {c: np.array(v) for c, v in columns.items()}


def fit_exponential_rate(x: np.ndarray, errors: np.ndarray) -> tuple[float, float, int]:
    """Least-squares fit errors ~ A exp(-rate x).

    Returns (rate, log-amplitude, dropped) with non-positive errors dropped.
    """
    keep = errors > 0
    dropped = int((~keep).sum())
    if dropped:
        log.info("dropped %d non-positive error values before the log fit", dropped)
    if keep.sum() < 2:
        raise SchemaError("need at least two positive error values to fit a rate")
    slope, intercept = np.polyfit(x[keep], np.log(errors[keep]), 1)
    return float(-slope), float(intercept), dropped


def _decay_points(inputs: list[str]) -> tuple[np.ndarray, np.ndarray, str]:
    """Error-versus-experiments points for the decay figure.

    A single trace CSV yields the within-run error sequence against the
    cumulative experiment count.  A set of summary JSONs yields one point
    per run: the final error against the per-scan experiment budget.
    """
    if all(p.endswith(".json") for p in inputs):
        xs, ys = [], []
        for path in inputs:
            try:
                data = json.loads(Path(path).read_text())
                xs.append(float(data["config"]["experiments_per_scan"]))
                ys.append(float(data["final_l2_error"]))
            except (OSError, KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise SchemaError(f"{path}: not a run summary ({exc})") from exc
        if len(xs) < 2:
            raise SchemaError("decay fits across summaries need at least two runs")
        order = np.argsort(xs)
        return np.array(xs)[order], np.array(ys)[order], "experiments per scan"
    if len(inputs) != 1:
        raise SchemaError("decay accepts one trace CSV or several summary JSONs")
    data = _read_csv(inputs[0], ("position", "experiment_index", "l2_error"))
    count = data["l2_error"].size
    if count == 0:
        raise SchemaError(f"{inputs[0]}: no data rows")
    return np.arange(1, count + 1, dtype=float), data["l2_error"], "experiments"


def _render_decay(spec: FigureSpec, ax) -> None:
    x, errors, x_label = _decay_points(spec.inputs)
    rate, intercept, _ = fit_exponential_rate(x, errors)
    ax.plot(x, errors, ".", markersize=4, color="#1f77b4", label="measured error")
    grid = np.linspace(x.min(), x.max(), 200)
    ax.plot(
        grid,
        np.exp(intercept - rate * grid),
        "-",
        color="#d62728",
        label=f"fit: rate {rate:.2e} per experiment",
    )
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_xlabel(x_label)
    ax.set_ylabel("coupling error (L2)")
    ax.legend(frameon=False)


def _render_histogram(spec: FigureSpec, ax) -> None:
    before, after = [], []
    for path in spec.inputs:
        data = _read_csv(path, ("target_index", "before", "after"))
        before.append(data["before"])
        after.append(data["after"])
    before = np.concatenate(before)
    after = np.concatenate(after)
    if before.size == 0:
        raise SchemaError(f"{spec.inputs[0]}: no data rows to histogram")
    positive = np.concatenate([before[before > 0], after[after > 0]])
    if positive.size == 0:
        raise SchemaError("all calibration errors are non-positive")
    lo, hi = positive.min(), positive.max()
    bins = np.logspace(np.log10(lo) - 0.05, np.log10(hi) + 0.05, 24)
    ax.hist(before, bins=bins, alpha=0.6, color="#d62728", label="before")
    ax.hist(after, bins=bins, alpha=0.6, color="#1f77b4", label="after")
    ax.set_xscale("log")
    ax.set_xlabel("per-target calibration error (L2)")
    ax.set_ylabel("targets")
    ax.legend(frameon=False)


def _render_scaling(spec: FigureSpec, ax) -> None:
    ns, medians = [], []
    for path in spec.inputs:
        data = _read_csv(path, ("n", "median_l2_error"))
        ns.append(data["n"])
        medians.append(data["median_l2_error"])
    ns = np.concatenate(ns)
    medians = np.concatenate(medians)
    if ns.size == 0:
        raise SchemaError(f"{spec.inputs[0]}: no data rows")
    order = np.argsort(ns)
    ax.plot(ns[order], medians[order], "o-", color="#1f77b4")
    ax.set_xlabel("chain sites")
    ax.set_ylabel("median coupling error (L2)")


_RENDERERS = {
    "decay": _render_decay,
    "histogram": _render_histogram,
    "scaling": _render_scaling,
}


def render(spec: FigureSpec) -> str:
    """Render the figure and return the output path."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=150)
    try:
        _RENDERERS[spec.kind](spec, ax)
        if spec.title:
            ax.set_title(spec.title)
        fig.tight_layout()
        out = Path(spec.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, metadata=_stable_metadata(out.suffix))
    finally:
        plt.close(fig)
    log.info("wrote %s", spec.output)
    return spec.output


def _stable_metadata(suffix: str) -> dict | None:
    # strip the creation timestamp so identical inputs give identical bytes
    if suffix == ".png":
        return {"Software": "hamscan-figures"}
    if suffix == ".svg":
        return {"Date": None}
    return None
