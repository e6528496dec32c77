"""Instrumented training loop shared by the estimator and the experiment runner.

One master seed feeds independent named RNG streams (data generation, init,
shuffling, mixing, probes, teacher phase) so toggling one stochastic feature
never perturbs the draws of another.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import network as nn
from .metrics import (
    DegenerateEpochError,
    EpochDynamics,
    RELU_TOL,
    SIGMOID_TOL,
    atd,
    benr,
    cos_stats_from_cosines,
    grad_rate,
)
from .mixup import mix_arrays
from .strategies import effective_alpha, enp_fraction, training_view

STREAM_IDS = {
    "data-gen": 0,
    "val-data": 1,
    "init": 2,
    "shuffle": 3,
    "mixup-lambda": 4,
    "mixup-sign": 5,
    "probe": 6,
    "probe-pairs": 7,
    "probe-mix": 8,
    "teacher-init": 9,
    "teacher-shuffle": 10,
    "teacher-mixup-lambda": 11,
}

_COS_CHUNK = 128


class Streams:
    """Named, independent RNG streams derived from one master seed."""

    def __init__(self, master_seed):
        self.master_seed = int(master_seed)
        self._streams = {}

    def __getitem__(self, name):
        if name not in STREAM_IDS:
            raise KeyError(f"unknown stream {name!r}")
        if name not in self._streams:
            seq = np.random.SeedSequence(self.master_seed, spawn_key=(STREAM_IDS[name],))
            self._streams[name] = np.random.default_rng(seq)
        return self._streams[name]

    def cell(self, name, *key):
        """Fresh generator for one grid cell; not cached, independent per key."""
        if name not in STREAM_IDS:
            raise KeyError(f"unknown stream {name!r}")
        seq = np.random.SeedSequence(
            self.master_seed, spawn_key=(STREAM_IDS[name], *map(int, key))
        )
        return np.random.default_rng(seq)


@dataclass
class MetricOptions:
    benr: bool = False
    atd: bool = False
    zero_activation: bool = False
    cos_probe: bool = False
    grad_rate: bool = False
    atd_probe_size: int = 512
    zero_act_mode: str | None = None  # None picks relu/sigmoid from the hidden layers
    grad_rate_alpha: float = 1.0
    grad_rate_per_pair: bool = True

    def any_probe(self):
        return self.atd or self.zero_activation


@dataclass
class MetricRow:
    """Per-epoch metric tuple; disabled metrics stay None."""

    epoch: int
    train_acc: float | None = None
    val_acc: float | None = None
    train_loss: float | None = None
    val_loss: float | None = None
    benr: float | None = None
    atd: float | None = None
    zero_act_avg: float | None = None
    effective_alpha: float | None = None
    avg_cos: float | None = None
    prop_lt_half: float | None = None
    prop_lt_zero: float | None = None
    grad_rate: float | None = None


@dataclass
class TrainResult:
    params: nn.ModelParams
    rows: list
    acc_history: list
    initial_params: nn.ModelParams


def soft_targets(labels, class_count):
    """Hard labels to the soft form the losses consume."""
    labels = np.asarray(labels)
    if class_count == 2:
        return labels.astype(float)
    return np.eye(class_count)[labels]


def build_model(dim, hidden, hidden_activation, class_count, rng):
    """Initialize the architecture for a classification task.

    Binary tasks get a 1-unit sigmoid head; multiclass an identity head
    with softmax applied at loss time.
    """
    out = 1 if class_count == 2 else class_count
    head = "sigmoid" if class_count == 2 else "identity"
    sizes = (dim, *hidden, out)
    activations = tuple([hidden_activation] * len(hidden)) + (head,)
    return nn.init_params(sizes, activations, rng)


def _hidden_probe_vector(model, X):
    """Concatenated last-hidden-layer activations over a probe set.

    Single-layer models have no hidden layer; the score itself stands in as
    the probed representation.
    """
    zs, activs = nn.forward_batch(model, X)
    probe = activs[-2] if len(model.layers) >= 2 else zs[-1]
    return probe.ravel().copy()


def _zero_act_avg(model, X, mode):
    zs, activs = nn.forward_batch(model, X)
    hidden = activs[:-1]
    if not hidden:
        return 0.0
    total = 0.0
    for a in hidden:
        if mode == "relu":
            total += np.sum(np.abs(a) <= RELU_TOL)
        else:
            total += np.sum((a <= SIGMOID_TOL) | (a >= 1.0 - SIGMOID_TOL))
    return float(total / X.shape[0])


def pick_zero_act_mode(model):
    hidden_acts = {l.activation for l in model.layers[:-1]}
    return "relu" if "relu" in hidden_acts else "sigmoid"


def cos_probe_stats(model, dataset, rng, chunk=_COS_CHUNK):
    """Cosine statistics between plain-pair-sum and 50%-mix gradients.

    Pairs one shuffled positive with one shuffled negative until the smaller
    class is exhausted; gradients are probed without touching the model.
    All dot products use the factorized per-sample form, so the probe never
    builds [n, param_count] matrices.
    """
    if dataset.class_count != 2:
        raise ValueError("cosine probe is defined for binary tasks")
    pos = np.flatnonzero(dataset.labels == 1)
    neg = np.flatnonzero(dataset.labels == 0)
    m = min(pos.size, neg.size)
    if m == 0:
        raise ValueError("cosine probe needs samples from both classes")
    pos = rng.permutation(pos)[:m]
    neg = rng.permutation(neg)[:m]
    cosines = []
    excluded = 0
    for start in range(0, m, chunk):
        pi = pos[start : start + chunk]
        ni = neg[start : start + chunk]
        Xp, Xn = dataset.X[pi], dataset.X[ni]
        Xm = 0.5 * (Xp + Xn)
        ones = np.ones(len(pi))
        zeros = np.zeros(len(ni))
        halves = np.full(len(pi), 0.5)
        d_im = nn.per_sample_grad_dots(model, Xp, ones, Xm, halves)
        d_jm = nn.per_sample_grad_dots(model, Xn, zeros, Xm, halves)
        d_ij = nn.per_sample_grad_dots(model, Xp, ones, Xn, zeros)
        n_i2 = nn.per_sample_grad_dots(model, Xp, ones, Xp, ones)
        n_j2 = nn.per_sample_grad_dots(model, Xn, zeros, Xn, zeros)
        n_m2 = nn.per_sample_grad_dots(model, Xm, halves, Xm, halves)
        nv2 = n_i2 + n_j2 + 2.0 * d_ij  # ||g_i + g_j||^2
        ok = (nv2 > 0.0) & (n_m2 > 0.0)
        excluded += int(np.sum(~ok))
        cosines.extend(
            ((d_im[ok] + d_jm[ok]) / np.sqrt(nv2[ok] * n_m2[ok])).tolist()
        )
    return cos_stats_from_cosines(cosines, excluded)


def grad_rate_probe(model, dataset, rng, alpha, per_pair=True):
    """First-epoch interference ratio: full-set plain vs mixed gradients,
    computed before any update."""
    targets = soft_targets(dataset.labels, dataset.class_count)
    g_vanilla = nn.batch_mean_grad(model, dataset.X, targets)
    X_mix, y_mix, _, _ = mix_arrays(dataset.X, targets, alpha, rng, per_pair=per_pair)
    g_mix = nn.batch_mean_grad(model, X_mix, y_mix)
    return grad_rate(g_mix, g_vanilla)


def _evaluate(model, dataset):
    targets = soft_targets(dataset.labels, dataset.class_count)
    losses = nn.batch_losses(model, dataset.X, targets)
    acc = nn.batch_accuracy(model, dataset.X, dataset.labels, dataset.class_count)
    return acc, float(losses.mean())


def run_training(
    model,
    train,
    val,
    schedule,
    *,
    eta,
    epochs,
    batch_size,
    streams,
    easy=None,
    options=None,
    per_pair_lambda=False,
    shuffle_stream="shuffle",
    mix_stream="mixup-lambda",
):
    """Train ``model`` in place of nothing: returns new params plus metric rows.

    Epoch rows record train/val metrics after that epoch's updates; the
    cosine probe and the epoch-0 grad rate are measured just before the
    epoch's updates. The activation reference for the trajectory distance is
    captured before any update.
    """
    if epochs < 1 or batch_size < 1:
        raise ValueError("epochs and batch_size must be >= 1")
    options = options or MetricOptions()
    window = schedule.window
    initial = model.copy()

    probe_X = None
    a_ref = None
    zero_mode = options.zero_act_mode or pick_zero_act_mode(model)
    if options.any_probe():
        source = val if val is not None and len(val) else train
        take = min(options.atd_probe_size, len(source))
        idx = np.sort(streams["probe"].choice(len(source), size=take, replace=False))
        probe_X = source.X[idx]
        if options.atd:
            a_ref = _hidden_probe_vector(model, probe_X)

    easy_ids_arr = None
    if easy is not None:
        easy_ids_arr = np.fromiter(sorted(easy.kept_ids), dtype=int)

    rows = []
    acc_history = []
    for epoch in range(epochs):
        alpha = effective_alpha(schedule, epoch, acc_history)
        row = MetricRow(epoch=epoch, effective_alpha=alpha)

        if options.cos_probe:
            stats = cos_probe_stats(model, train, streams["probe-pairs"])
            row.avg_cos = stats.avg_cos
            row.prop_lt_half = stats.prop_lt_half
            row.prop_lt_zero = stats.prop_lt_zero
        if options.grad_rate and epoch == 0:
            row.grad_rate = grad_rate_probe(
                model,
                train,
                streams["probe-mix"],
                options.grad_rate_alpha,
                per_pair=options.grad_rate_per_pair,
            )

        frac = enp_fraction(window, epoch, acc_history) if easy is not None else 0.0
        if easy is not None and 0.0 < frac < 1.0:
            view = train  # sub-epoch window: restriction applied per batch below
        else:
            view = training_view(epoch, window, train, easy, acc_history)
        targets = soft_targets(view.labels, view.class_count)

        theta_start = nn.flatten_params(model)
        order = streams[shuffle_stream].permutation(len(view))
        n_batches = int(np.ceil(len(view) / batch_size))
        cutoff = round(frac * n_batches) if 0.0 < frac < 1.0 else 0
        batch_norms = []
        for b in range(n_batches):
            sel = order[b * batch_size : (b + 1) * batch_size]
            if easy is not None and 0.0 < frac < 1.0 and b < cutoff:
                keep = np.isin(view.ids[sel], easy_ids_arr)
                sel = sel[keep]
                if sel.size == 0:
                    continue
            Xb = view.X[sel]
            yb = targets[sel]
            if alpha is not None:
                Xb, yb, _, _ = mix_arrays(
                    Xb, yb, alpha, streams[mix_stream], per_pair=per_pair_lambda
                )
            grad = nn.batch_mean_grad(model, Xb, yb)
            model = nn.sgd_step(model, grad, eta)
            batch_norms.append(eta * float(np.linalg.norm(grad)))
        epoch_update = nn.flatten_params(model) - theta_start

        if options.benr:
            try:
                row.benr = benr(EpochDynamics(batch_norms, epoch_update))
            except DegenerateEpochError:
                row.benr = None
        if probe_X is not None:
            if options.atd:
                a_now = _hidden_probe_vector(model, probe_X)
                row.atd = atd(EpochDynamics([], np.zeros(0), a_ref, a_now))
            if options.zero_activation:
                row.zero_act_avg = _zero_act_avg(model, probe_X, zero_mode)

        row.train_acc, row.train_loss = _evaluate(model, train)
        if val is not None and len(val):
            row.val_acc, row.val_loss = _evaluate(model, val)
        acc_history.append(row.val_acc)
        rows.append(row)
    return TrainResult(model, rows, acc_history, initial)
