"""Figure rendering over the training runner's CSV schemas.

Inputs are metrics.csv / sweep.csv files exactly as the runner emits them;
nothing here imports the training package. Rendering is deterministic for
identical inputs (fixed figure geometry, Agg backend, constant metadata).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

METRICS_COLUMNS = [
    "run_id", "seed", "epoch", "train_acc", "val_acc", "train_loss", "val_loss",
    "benr", "atd", "zero_act_avg", "effective_alpha", "avg_cos", "prop_lt_half",
    "prop_lt_zero",
]
SWEEP_COLUMNS = ["n_samples", "hidden_width", "seed", "grad_rate"]

FIGURE_KINDS = ("cos_trajectory", "grad_rate_heatmap", "zero_activation", "benr_atd")

_SAVEFIG = {"dpi": 110, "metadata": {"Software": "plotkit"}}


class SchemaError(ValueError):
    """Input CSV does not match the expected runner schema."""


@dataclass
class FigureSpec:
    kind: str
    inputs: list
    output: str
    title: str | None = None

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise SchemaError("at least one input CSV is required")


def _read_rows(path, required):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        names = reader.fieldnames or []
        for column in required:
            if column not in names:
                raise SchemaError(f"{path}: missing column {column!r}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def _epoch_means(rows, column):
    """Seed-mean of a metric per epoch; empty cells are skipped."""
    per_epoch = {}
    for rec in rows:
        if rec[column] == "":
            continue
        per_epoch.setdefault(int(rec["epoch"]), []).append(float(rec[column]))
    epochs = sorted(per_epoch)
    return epochs, [float(np.mean(per_epoch[e])) for e in epochs]


def heatmap_cells(rows):
    """Seed-mean grad rate per (n_samples, hidden_width) cell.

    Returns (n_values, widths, matrix) with matrix[i, j] the mean over the
    cell's rows, matching the runner's aggregation arithmetic.
    """
    cells = {}
    for rec in rows:
        key = (int(rec["n_samples"]), int(rec["hidden_width"]))
        cells.setdefault(key, []).append(float(rec["grad_rate"]))
    n_values = sorted({k[0] for k in cells})
    widths = sorted({k[1] for k in cells})
    matrix = np.full((len(n_values), len(widths)), np.nan)
    for (n, w), values in cells.items():
        matrix[n_values.index(n), widths.index(w)] = float(np.mean(values))
    return n_values, widths, matrix


def _label_for(path, rows):
    run_ids = {rec["run_id"] for rec in rows}
    return run_ids.pop() if len(run_ids) == 1 else Path(path).stem


def _render_cos_trajectory(spec, ax):
    rows = _read_rows(spec.inputs[0], ["epoch", "avg_cos", "prop_lt_half", "prop_lt_zero"])
    for column, style in (("avg_cos", "-"), ("prop_lt_half", "--"), ("prop_lt_zero", ":")):
        epochs, means = _epoch_means(rows, column)
        ax.plot(epochs, means, style, label=column)
    ax.set_xlabel("epoch")
    ax.set_ylabel("gradient cosine statistics")
    ax.legend()


def _render_zero_activation(spec, ax):
    for path in spec.inputs:
        rows = _read_rows(path, ["epoch", "zero_act_avg"])
        epochs, means = _epoch_means(rows, "zero_act_avg")
        ax.plot(epochs, means, label=_label_for(path, rows))
    ax.set_xlabel("epoch")
    ax.set_ylabel("zero activations per sample")
    ax.legend()


def _render_benr_atd(spec, fig):
    rows = _read_rows(spec.inputs[0], ["epoch", "benr", "atd"])
    top, bottom = fig.subplots(2, 1, sharex=True)
    for ax, column in ((top, "benr"), (bottom, "atd")):
        epochs, means = _epoch_means(rows, column)
        ax.plot(epochs, means)
        ax.set_ylabel(column)
    bottom.set_xlabel("epoch")
    return top


def _render_heatmap(spec, fig, ax):
    rows = _read_rows(spec.inputs[0], SWEEP_COLUMNS)
    n_values, widths, matrix = heatmap_cells(rows)
    image = ax.imshow(matrix, origin="lower", aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(widths)), [str(w) for w in widths])
    ax.set_yticks(range(len(n_values)), [str(n) for n in n_values])
    ax.set_xlabel("hidden width")
    ax.set_ylabel("sample count")
    for i in range(len(n_values)):
        for j in range(len(widths)):
            if not np.isnan(matrix[i, j]):
                ax.text(j, i, f"{matrix[i, j]:.3f}", ha="center", va="center",
                        color="white", fontsize=8)
    fig.colorbar(image, ax=ax, label="grad rate")
    return matrix


def render(spec):
    """Render one figure; returns the output path.

    The output file is only written after the inputs validate, so schema
    errors never leave a partial image behind.
    """
    fig = plt.figure(figsize=(6.0, 4.2))
    try:
        if spec.kind == "cos_trajectory":
            _render_cos_trajectory(spec, fig.subplots())
        elif spec.kind == "zero_activation":
            _render_zero_activation(spec, fig.subplots())
        elif spec.kind == "benr_atd":
            _render_benr_atd(spec, fig)
        else:
            _render_heatmap(spec, fig, fig.subplots())
        title_ax = fig.axes[0]
        if spec.title:
            title_ax.set_title(spec.title)
        fig.tight_layout()
        out = Path(spec.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, **_SAVEFIG)
        return out
    finally:
        plt.close(fig)
