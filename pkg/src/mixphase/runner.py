"""Config-driven experiment execution: seeded runs, sweeps, CSV emission,
aggregation.

A run config is a plain JSON tree. Equal configs (including seed) produce
byte-identical metrics CSVs; the config hash excludes seed and output
directory so repeat runs of one recipe group together.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .datasets import (
    Dataset,
    gen_gaussian_mixture,
    gen_two_gaussians,
    load_cifar10_binary,
    normalize,
)
from .stats import welch_t_one_tailed
from .strategies import EnpWindow, MixupSchedule, record_teacher_losses, select_easy_subset
from .training import (
    MetricOptions,
    MetricRow,
    Streams,
    build_model,
    grad_rate_probe,
    run_training,
)

METRICS_CSV_COLUMNS = [
    "run_id",
    "seed",
    "epoch",
    "train_acc",
    "val_acc",
    "train_loss",
    "val_loss",
    "benr",
    "atd",
    "zero_act_avg",
    "effective_alpha",
    "avg_cos",
    "prop_lt_half",
    "prop_lt_zero",
]

SWEEP_CSV_COLUMNS = ["n_samples", "hidden_width", "seed", "grad_rate"]

STRATEGY_KINDS = ("none", "pause", "boost", "high_loss_removal")
DATA_SOURCES = ("two_gaussians", "gaussian_mixture", "cifar10")


class ConfigError(ValueError):
    """A run config violates a module precondition."""


@dataclass
class DatasetSpec:
    source: str = "two_gaussians"
    n_per_class: int = 512
    val_per_class: int = 256
    dim: int = 64
    separation: float = 4.0
    sigma: float = 1.0
    class_count: int = 2
    normalization: str = "none"
    train_files: list = field(default_factory=list)  # cifar10
    val_files: list = field(default_factory=list)
    val_fraction: float | None = None
    classes: list | None = None  # cifar10 keep set


@dataclass
class ModelSpec:
    hidden: list = field(default_factory=lambda: [256])
    activation: str = "sigmoid"


@dataclass
class OptimizerSpec:
    eta: float = 0.5
    batch_size: int = 64
    epochs: int = 20


@dataclass
class MixupSpec:
    alpha: float | None = None
    per_pair_lambda: bool = False


@dataclass
class WindowSpec:
    mode: str = "fixed_epochs"
    end_epoch: float = 0
    acc_threshold: float = 0.5

    def to_window(self):
        return EnpWindow(self.mode, self.end_epoch, self.acc_threshold)


@dataclass
class StrategySpec:
    kind: str = "none"
    window: WindowSpec = field(default_factory=WindowSpec)
    enp_alpha: float | None = None  # boost
    k_percent: float = 0.85  # high_loss_removal


@dataclass
class MetricSpec:
    benr: bool = True
    atd: bool = True
    zero_activation: bool = True
    cos_probe: bool = False
    grad_rate: bool = False
    atd_probe_size: int = 512
    zero_act_mode: str | None = None
    grad_rate_alpha: float = 1.0
    grad_rate_per_pair: bool = True

    def to_options(self):
        return MetricOptions(
            benr=self.benr,
            atd=self.atd,
            zero_activation=self.zero_activation,
            cos_probe=self.cos_probe,
            grad_rate=self.grad_rate,
            atd_probe_size=self.atd_probe_size,
            zero_act_mode=self.zero_act_mode,
            grad_rate_alpha=self.grad_rate_alpha,
            grad_rate_per_pair=self.grad_rate_per_pair,
        )


@dataclass
class RunConfig:
    name: str = "run"
    seed: int = 0
    output_dir: str = "runs/run"
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    model: ModelSpec = field(default_factory=ModelSpec)
    optimizer: OptimizerSpec = field(default_factory=OptimizerSpec)
    mixup: MixupSpec = field(default_factory=MixupSpec)
    strategy: StrategySpec = field(default_factory=StrategySpec)
    metrics: MetricSpec = field(default_factory=MetricSpec)
    desk_scale: bool = True
    notes: str = ""

    @property
    def run_id(self):
        return f"{self.name}-s{self.seed}"


def _build_section(cls, raw, path):
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected an object")
    known = {f.name for f in cls.__dataclass_fields__.values()}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    return raw


def config_from_dict(raw):
    """Build and validate a RunConfig from a JSON-compatible tree."""
    raw = dict(_build_section(RunConfig, raw, "config"))
    for key, cls in (
        ("dataset", DatasetSpec),
        ("model", ModelSpec),
        ("optimizer", OptimizerSpec),
        ("mixup", MixupSpec),
        ("strategy", StrategySpec),
        ("metrics", MetricSpec),
    ):
        if key in raw:
            section = dict(_build_section(cls, raw[key], key))
            if key == "strategy" and "window" in section:
                section["window"] = WindowSpec(
                    **_build_section(WindowSpec, section["window"], "strategy.window")
                )
            raw[key] = cls(**section)
    config = RunConfig(**raw)
    validate_config(config)
    return config


def load_config(path):
    with open(path) as fh:
        return config_from_dict(json.load(fh))


def config_to_dict(config):
    return asdict(config)


def config_hash(config):
    """Hash of the recipe; independent of seed, output location and key order."""
    tree = config_to_dict(config)
    tree.pop("seed", None)
    tree.pop("output_dir", None)
    blob = json.dumps(tree, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def validate_config(config):
    ds, opt, strat = config.dataset, config.optimizer, config.strategy
    if ds.source not in DATA_SOURCES:
        raise ConfigError(f"dataset.source must be one of {DATA_SOURCES}")
    if opt.epochs < 1 or opt.batch_size < 1:
        raise ConfigError("optimizer.epochs and batch_size must be >= 1")
    if opt.eta <= 0:
        raise ConfigError("optimizer.eta must be positive")
    if config.mixup.alpha is not None and config.mixup.alpha <= 0:
        raise ConfigError("mixup.alpha must be positive when present")
    if strat.kind not in STRATEGY_KINDS:
        raise ConfigError(f"strategy.kind must be one of {STRATEGY_KINDS}")
    if strat.kind == "boost" and (strat.enp_alpha is None or strat.enp_alpha <= 0):
        raise ConfigError("boost strategy needs a positive strategy.enp_alpha")
    if strat.kind == "high_loss_removal" and not 0 < strat.k_percent <= 1:
        raise ConfigError("strategy.k_percent must lie in (0, 1]")
    strat.window.to_window()  # window invariants
    if strat.kind != "none" and strat.window.mode == "accuracy_threshold":
        if ds.source in ("two_gaussians", "gaussian_mixture") and ds.val_per_class < 1:
            raise ConfigError("accuracy-threshold windows need validation data")
    if ds.source in ("two_gaussians", "gaussian_mixture"):
        if ds.n_per_class < 1 or ds.dim < 1 or ds.sigma < 0:
            raise ConfigError("synthetic dataset needs n_per_class, dim >= 1 and sigma >= 0")
    if config.model.activation not in ("sigmoid", "relu", "identity"):
        raise ConfigError("model.activation must be sigmoid, relu or identity")


def _split_per_class(full, take_train, take_val):
    tr_idx, va_idx = [], []
    for c in range(full.class_count):
        idx = np.flatnonzero(full.labels == c)
        if take_train is not None and len(idx) < take_train + take_val:
            raise ConfigError("not enough samples per class for the requested split")
        cut = take_train if take_train is not None else len(idx) - take_val
        tr_idx.extend(idx[:cut])
        va_idx.extend(idx[cut : cut + take_val if take_val else len(idx)])
    def pick(order):
        order = np.sort(np.asarray(order, dtype=int))
        return Dataset(
            full.X[order], full.labels[order], full.ids[order],
            class_count=full.class_count, normalization=full.normalization,
        )
    train = pick(tr_idx)
    val = pick(va_idx) if va_idx else None
    return train, val


def build_datasets(spec, streams):
    """Materialize (train, val) per the dataset spec.

    Synthetic sources draw train and validation in one generator call and
    split per class, so both halves share the seeded class geometry.
    Normalization is applied to the union before splitting.
    """
    if spec.source == "two_gaussians":
        full = gen_two_gaussians(
            spec.n_per_class + spec.val_per_class, spec.dim, spec.separation,
            spec.sigma, streams["data-gen"],
        )
    elif spec.source == "gaussian_mixture":
        full = gen_gaussian_mixture(
            spec.n_per_class + spec.val_per_class, spec.dim, spec.class_count,
            spec.separation, spec.sigma, streams["data-gen"],
        )
    elif spec.source == "cifar10":
        keep = set(spec.classes) if spec.classes else None
        full = load_cifar10_binary(spec.train_files, keep)
        if spec.normalization != "none":
            full = normalize(full, spec.normalization)
        if spec.val_files:
            val = load_cifar10_binary(spec.val_files, keep)
            if spec.normalization != "none":
                val = normalize(val, spec.normalization)
            return full, val
        if spec.val_fraction:
            per_class = np.bincount(full.labels, minlength=full.class_count)
            take_val = int(min(per_class) * spec.val_fraction)
            return _split_per_class(full, None, take_val)
        return full, None
    else:
        raise ConfigError(f"unknown dataset source {spec.source!r}")
    if spec.normalization != "none":
        full = normalize(full, spec.normalization)
    return _split_per_class(full, spec.n_per_class, spec.val_per_class)


def build_schedule_from_config(config):
    """Translate mixup + strategy sections into the per-epoch policy.

    - none: constant baseline alpha, window inert.
    - pause: mixing disabled inside the window.
    - boost: strategy.enp_alpha inside the window.
    - high_loss_removal: mixing constant; the window drives the data view.
    """
    alpha = config.mixup.alpha
    strat = config.strategy
    window = strat.window.to_window()
    if strat.kind == "none":
        return MixupSchedule(alpha, alpha, window)
    if strat.kind == "pause":
        return MixupSchedule(alpha, None, window)
    if strat.kind == "boost":
        return MixupSchedule(alpha, strat.enp_alpha, window)
    return MixupSchedule(alpha, alpha, window)  # high_loss_removal


@dataclass
class RunRecord:
    run_id: str
    name: str
    seed: int
    config: dict
    config_hash: str
    rows: list
    final_train_acc: float | None
    final_val_acc: float | None
    wall_time_s: float
    teacher_final_train_acc: float | None = None


def _row_to_dict(row):
    return {k: getattr(row, k) for k in MetricRow.__dataclass_fields__}


def _row_from_dict(d):
    return MetricRow(**{k: d.get(k) for k in MetricRow.__dataclass_fields__})


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_metrics_csv(path, run_id, seed, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_CSV_COLUMNS)
        for row in rows:
            d = _row_to_dict(row)
            writer.writerow(
                [run_id, seed] + [_fmt(d[c]) for c in METRICS_CSV_COLUMNS[2:]]
            )


def read_metrics_csv(path):
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != METRICS_CSV_COLUMNS:
            raise ValueError(f"unexpected metrics columns: {reader.fieldnames}")
        for rec in reader:
            parsed = {"run_id": rec["run_id"], "seed": int(rec["seed"])}
            for col in METRICS_CSV_COLUMNS[2:]:
                raw = rec[col]
                if raw == "":
                    parsed[col] = None
                elif col == "epoch":
                    parsed[col] = int(raw)
                else:
                    parsed[col] = float(raw)
            out.append(parsed)
    return out


def run(config, output_dir=None):
    """Execute one seeded run; writes metrics.csv and runrecord.json."""
    validate_config(config)
    t0 = time.perf_counter()
    out = Path(output_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    streams = Streams(config.seed)
    train, val = build_datasets(config.dataset, streams)
    class_count = train.class_count
    schedule = build_schedule_from_config(config)

    easy = None
    teacher_acc = None
    if config.strategy.kind == "high_loss_removal":
        teacher = build_model(
            train.dim, tuple(config.model.hidden), config.model.activation,
            class_count, streams["teacher-init"],
        )
        teacher_schedule = MixupSchedule(None, None, EnpWindow("fixed_epochs", 0))
        teacher_result = run_training(
            teacher, train, val, teacher_schedule,
            eta=config.optimizer.eta, epochs=config.optimizer.epochs,
            batch_size=config.optimizer.batch_size, streams=streams,
            shuffle_stream="teacher-shuffle", mix_stream="teacher-mixup-lambda",
        )
        teacher_acc = teacher_result.rows[-1].train_acc
        losses = record_teacher_losses(teacher_result.params, train)
        easy = select_easy_subset(losses, config.strategy.k_percent,
                                  teacher_run_id=f"{config.run_id}-teacher")

    model = build_model(
        train.dim, tuple(config.model.hidden), config.model.activation,
        class_count, streams["init"],
    )
    result = run_training(
        model, train, val, schedule,
        eta=config.optimizer.eta, epochs=config.optimizer.epochs,
        batch_size=config.optimizer.batch_size, streams=streams,
        easy=easy, options=config.metrics.to_options(),
        per_pair_lambda=config.mixup.per_pair_lambda,
    )

    record = RunRecord(
        run_id=config.run_id,
        name=config.name,
        seed=config.seed,
        config=config_to_dict(config),
        config_hash=config_hash(config),
        rows=result.rows,
        final_train_acc=result.rows[-1].train_acc,
        final_val_acc=result.rows[-1].val_acc,
        wall_time_s=time.perf_counter() - t0,
        teacher_final_train_acc=teacher_acc,
    )
    write_metrics_csv(out / "metrics.csv", record.run_id, record.seed, record.rows)
    with open(out / "runrecord.json", "w") as fh:
        json.dump(record_to_dict(record), fh, indent=2, sort_keys=True)
    return record


def record_to_dict(record):
    d = dict(record.__dict__)
    d["rows"] = [_row_to_dict(r) for r in record.rows]
    return d


def record_from_dict(d):
    d = dict(d)
    d["rows"] = [_row_from_dict(r) for r in d["rows"]]
    return RunRecord(**d)


def load_record(path):
    with open(path) as fh:
        return record_from_dict(json.load(fh))


def _nested_subset(master, n_total):
    per_class = n_total // master.class_count
    keep = []
    for c in range(master.class_count):
        idx = np.flatnonzero(master.labels == c)
        if len(idx) < per_class:
            raise ConfigError(f"master dataset too small for n_samples={n_total}")
        keep.extend(idx[:per_class])
    keep = np.sort(np.asarray(keep, dtype=int))
    return Dataset(master.X[keep], master.labels[keep], master.ids[keep],
                   class_count=master.class_count, normalization=master.normalization)


def sweep_grad_rate(grid, seeds, base_config, out_path=None):
    """First-epoch interference ratio over (sample count, hidden width) cells.

    Every cell starts from a fresh seeded init; the sample-size axis takes
    nested per-class subsets of one master draw per seed, so cells differ by
    what the axis varies rather than by data resampling. Emits one CSV row
    per (n_samples, hidden_width, seed).
    """
    n_values = sorted(int(n) for n in grid["n_samples"])
    widths = sorted(int(w) for w in grid["hidden_width"])
    if not n_values or not widths:
        raise ConfigError("grid needs non-empty n_samples and hidden_width lists")
    spec = base_config.dataset
    rows = []
    for seed in seeds:
        streams = Streams(seed)
        if spec.source in ("two_gaussians", "gaussian_mixture"):
            import copy

            master_spec = copy.deepcopy(spec)
            master_spec.n_per_class = max(n_values) // max(spec.class_count, 2)
            master_spec.val_per_class = 0
            master, _ = build_datasets(master_spec, streams)
        else:
            master, _ = build_datasets(spec, streams)
        for i, n_total in enumerate(n_values):
            data = _nested_subset(master, n_total)
            for j, width in enumerate(widths):
                model = build_model(
                    data.dim, (width,), base_config.model.activation,
                    data.class_count, Streams(seed)["init"],
                )
                rate = grad_rate_probe(
                    model, data, streams.cell("probe-mix", i, j),
                    base_config.metrics.grad_rate_alpha,
                    per_pair=base_config.metrics.grad_rate_per_pair,
                )
                rows.append(
                    {"n_samples": n_total, "hidden_width": width,
                     "seed": int(seed), "grad_rate": rate}
                )
    if out_path is not None:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        with open(out_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(SWEEP_CSV_COLUMNS)
            for r in rows:
                writer.writerow([r["n_samples"], r["hidden_width"], r["seed"],
                                 repr(r["grad_rate"])])
    return rows


def read_sweep_csv(path):
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SWEEP_CSV_COLUMNS:
            raise ValueError(f"unexpected sweep columns: {reader.fieldnames}")
        for rec in reader:
            out.append(
                {"n_samples": int(rec["n_samples"]),
                 "hidden_width": int(rec["hidden_width"]),
                 "seed": int(rec["seed"]),
                 "grad_rate": float(rec["grad_rate"])}
            )
    return out


def _final_metric(record):
    if record.final_val_acc is not None:
        return record.final_val_acc
    return record.final_train_acc


def aggregate_group(records):
    """Mean / sample variance / run count for records sharing one recipe."""
    if not records:
        raise ValueError("no records to aggregate")
    hashes = {r.config_hash for r in records}
    if len(hashes) > 1:
        raise ValueError("mixed configs in one aggregation group")
    values = [_final_metric(r) for r in records]
    mean = float(np.mean(values))
    variance = float(np.var(values, ddof=1)) if len(values) > 1 else None
    return {"name": records[0].name, "config_hash": records[0].config_hash,
            "mean": mean, "variance": variance, "runs": len(values),
            "values": values}


def aggregate(records, baseline=None):
    """Group records by config hash and summarize; optional one-tailed
    comparison of every group against a named baseline group."""
    groups = {}
    for r in records:
        groups.setdefault(r.config_hash, []).append(r)
    rows = [aggregate_group(g) for g in groups.values()]
    rows.sort(key=lambda r: r["name"])
    if baseline is not None:
        base = [r for r in rows if r["name"] == baseline]
        if not base:
            raise ValueError(f"no group named {baseline!r}")
        base_values = base[0]["values"]
        for row in rows:
            row["delta"] = row["mean"] - base[0]["mean"]
            if len(row["values"]) >= 2 and len(base_values) >= 2:
                row["p_value"] = welch_t_one_tailed(row["values"], base_values)["p"]
            else:
                row["p_value"] = None
    for row in rows:
        row.pop("values")
    return rows
