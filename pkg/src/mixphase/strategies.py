"""Phase-aware training-data policies.

The early window ("enp") runs from the start of training either for a fixed
number of epochs or until validation accuracy first crosses a threshold
(default 50%). Policies only ever change what the next epoch trains on: the
effective mix strength, or a restriction to the lowest-teacher-loss samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .network import batch_losses

WINDOW_MODES = ("fixed_epochs", "accuracy_threshold")


@dataclass(frozen=True)
class EnpWindow:
    mode: str = "fixed_epochs"
    end_epoch: float = 0  # fixed mode; fractional values end the window mid-epoch
    acc_threshold: float = 0.5  # threshold mode

    def __post_init__(self):
        if self.mode not in WINDOW_MODES:
            raise ValueError(f"mode must be one of {WINDOW_MODES}")
        if self.mode == "fixed_epochs" and self.end_epoch < 0:
            raise ValueError("end_epoch must be >= 0")
        if self.mode == "accuracy_threshold" and not 0.0 < self.acc_threshold < 1.0:
            raise ValueError("acc_threshold must lie strictly in (0, 1)")


@dataclass(frozen=True)
class MixupSchedule:
    """Per-epoch effective-alpha policy. None means train unmixed."""

    baseline_alpha: float | None = None
    enp_alpha: float | None = None
    window: EnpWindow = EnpWindow()

    def __post_init__(self):
        for a in (self.baseline_alpha, self.enp_alpha):
            if a is not None and a <= 0:
                raise ValueError("alpha values must be positive when present")


@dataclass(frozen=True)
class EasySubset:
    kept_ids: frozenset
    k_percent: float
    teacher_run_id: str = "teacher"


def enp_active(window, epoch, acc_history=()):
    """Whether the early window covers this epoch.

    Fixed windows are half-open [0, end_epoch). Threshold windows latch off
    permanently once any prior epoch's validation accuracy reached the
    threshold; ``acc_history`` must cover epochs before ``epoch``.
    """
    if window.mode == "fixed_epochs":
        return epoch < window.end_epoch
    return not any(acc is not None and acc >= window.acc_threshold for acc in acc_history)


def enp_fraction(window, epoch, acc_history=()):
    """Fraction of this epoch inside the window (fractional fixed windows only)."""
    if not enp_active(window, epoch, acc_history):
        return 0.0
    if window.mode == "fixed_epochs":
        return float(min(1.0, window.end_epoch - epoch))
    return 1.0


def effective_alpha(schedule, epoch, acc_history=()):
    """Mix strength for this epoch: the window alpha inside the early window,
    the baseline outside. None disables mixing for the epoch."""
    if enp_active(schedule.window, epoch, acc_history):
        return schedule.enp_alpha
    return schedule.baseline_alpha


def record_teacher_losses(params, dataset):
    """Per-sample loss of every dataset item under a trained model; no updates."""
    if dataset.class_count == 2:
        targets = dataset.labels.astype(float)
    else:
        targets = np.eye(dataset.class_count)[dataset.labels]
    losses = batch_losses(params, dataset.X, targets)
    return {int(i): float(l) for i, l in zip(dataset.ids, losses)}


def select_easy_subset(losses, k_percent, teacher_run_id="teacher"):
    """Keep the ceil(k * n) lowest-loss ids; ties break by ascending id."""
    if not losses:
        raise ValueError("loss map must not be empty")
    if not 0.0 < k_percent <= 1.0:
        raise ValueError("k_percent must lie in (0, 1]")
    m = math.ceil(k_percent * len(losses))
    ranked = sorted(losses.items(), key=lambda kv: (kv[1], kv[0]))
    kept = frozenset(i for i, _ in ranked[:m])
    return EasySubset(kept, k_percent, teacher_run_id)


def training_view(epoch, window, full, easy, acc_history=()):
    """Dataset actually trained on this epoch.

    Inside the early window with a subset present, the view restricts to the
    kept ids; afterwards the full dataset returns, unweighted. ``easy=None``
    disables the policy entirely.
    """
    if easy is None:
        return full
    unknown = easy.kept_ids - set(full.ids.tolist())
    if unknown:
        raise ValueError(f"subset ids not in dataset: {sorted(unknown)[:5]}")
    if enp_active(window, epoch, acc_history):
        return full.subset(easy.kept_ids)
    return full
