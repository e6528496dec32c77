"""Dataset construction: synthetic Gaussian classes and CIFAR-10 binary files."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

NORMALIZATIONS = ("none", "per-feature-standardize", "global-scale")

CIFAR_RECORD_BYTES = 3073  # 1 label byte + 3 * 32 * 32 pixels
CIFAR_PIXELS = CIFAR_RECORD_BYTES - 1

# Floor applied to per-feature std so near-constant columns standardize to zero.
STD_FLOOR = 1e-8


class CifarFormatError(ValueError):
    """File does not follow the 3073-byte record layout."""


class CifarCorruptRecordError(CifarFormatError):
    """A record carries a label byte outside 0-9."""


@dataclass(frozen=True)
class Sample:
    id: int
    features: np.ndarray
    label: int


@dataclass
class Dataset:
    """Immutable collection of (feature vector, label) samples with stable ids."""

    X: np.ndarray  # [n, dim]
    labels: np.ndarray  # [n] int class indices
    ids: np.ndarray  # [n] int, unique, stable across views
    class_count: int
    normalization: str = "none"

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        self.ids = np.asarray(self.ids, dtype=int)
        if self.X.ndim != 2:
            raise ValueError("features must be a 2-d [n, dim] array")
        n = self.X.shape[0]
        if self.labels.shape != (n,) or self.ids.shape != (n,):
            raise ValueError("labels/ids must have one entry per sample")
        if len(np.unique(self.ids)) != n:
            raise ValueError("sample ids must be unique")
        if n and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise ValueError("labels must lie in [0, class_count)")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("features must be finite")
        for arr in (self.X, self.labels, self.ids):
            arr.setflags(write=False)

    def __len__(self):
        return self.X.shape[0]

    @property
    def dim(self):
        return self.X.shape[1]

    def sample(self, i):
        return Sample(int(self.ids[i]), self.X[i], int(self.labels[i]))

    def subset(self, keep_ids):
        """Restriction to the given ids, original order and ids preserved."""
        keep = set(int(i) for i in keep_ids)
        unknown = keep - set(self.ids.tolist())
        if unknown:
            raise ValueError(f"unknown sample ids: {sorted(unknown)[:5]}")
        mask = np.fromiter((int(i) in keep for i in self.ids), dtype=bool, count=len(self))
        return Dataset(
            self.X[mask], self.labels[mask], self.ids[mask],
            class_count=self.class_count, normalization=self.normalization,
        )


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def gen_two_gaussians(n_per_class, dim, separation, sigma, seed):
    """Two isotropic Gaussian classes split along a seeded unit direction.

    Class 0 sits at +(separation/2)*u, class 1 at -(separation/2)*u, both
    with covariance sigma^2 I. Draw order is fixed (u, class 0, class 1).
    """
    if n_per_class <= 0:
        raise ValueError("n_per_class must be positive")
    if dim < 1:
        raise ValueError("dim must be at least 1")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    rng = _as_rng(seed)
    u = rng.standard_normal(dim)
    u /= np.linalg.norm(u)
    mu = 0.5 * separation * u
    x0 = mu + sigma * rng.standard_normal((n_per_class, dim))
    x1 = -mu + sigma * rng.standard_normal((n_per_class, dim))
    X = np.vstack([x0, x1])
    labels = np.repeat([0, 1], n_per_class)
    return Dataset(X, labels, np.arange(2 * n_per_class), class_count=2)


def gen_gaussian_mixture(n_per_class, dim, class_count, separation, sigma, seed):
    """k isotropic Gaussian classes at seeded random directions of norm separation/2."""
    if n_per_class <= 0:
        raise ValueError("n_per_class must be positive")
    if class_count < 2:
        raise ValueError("need at least two classes")
    rng = _as_rng(seed)
    dirs = rng.standard_normal((class_count, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    blocks, labels = [], []
    for c in range(class_count):
        mu = 0.5 * separation * dirs[c]
        blocks.append(mu + sigma * rng.standard_normal((n_per_class, dim)))
        labels.append(np.full(n_per_class, c))
    X = np.vstack(blocks)
    return Dataset(
        X, np.concatenate(labels), np.arange(class_count * n_per_class),
        class_count=class_count,
    )


def load_cifar10_binary(paths, keep_classes=None):
    """Load CIFAR-10 binary batch files (3073-byte records, pixels scaled to [0,1]).

    ``keep_classes`` filters by raw label; surviving labels are re-indexed
    densely in ascending raw-label order. Sample ids are the global record
    indices before filtering, so they are stable across class selections.
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    if keep_classes is None:
        keep_classes = range(10)
    keep_sorted = sorted(set(int(c) for c in keep_classes))
    if not keep_sorted:
        raise ValueError("keep_classes must not be empty")
    if keep_sorted[0] < 0 or keep_sorted[-1] > 9:
        raise ValueError("CIFAR-10 class ids lie in 0-9")
    remap = {c: i for i, c in enumerate(keep_sorted)}

    all_labels, all_pixels = [], []
    offset = 0
    for path in paths:
        raw = Path(path).read_bytes()
        n, rem = divmod(len(raw), CIFAR_RECORD_BYTES)
        if rem != 0:
            raise CifarFormatError(
                f"{path}: length {len(raw)} is not a multiple of {CIFAR_RECORD_BYTES}"
            )
        rec = np.frombuffer(raw, dtype=np.uint8).reshape(n, CIFAR_RECORD_BYTES)
        labels = rec[:, 0].astype(int)
        if labels.size and labels.max() > 9:
            bad = int(np.argmax(labels > 9))
            raise CifarCorruptRecordError(
                f"{path}: record {bad} has label byte {labels[bad]} > 9"
            )
        all_labels.append(labels)
        all_pixels.append(rec[:, 1:])
        offset += n
    labels = np.concatenate(all_labels) if all_labels else np.empty(0, dtype=int)
    pixels = np.vstack(all_pixels) if all_pixels else np.empty((0, CIFAR_PIXELS), np.uint8)
    ids = np.arange(labels.size)

    mask = np.isin(labels, keep_sorted)
    labels = np.array([remap[c] for c in labels[mask]], dtype=int)
    X = pixels[mask].astype(float) / 255.0
    return Dataset(X, labels, ids[mask], class_count=len(keep_sorted))


def write_cifar10_binary(path, labels, pixels):
    """Emit a CIFAR-10 style binary file; the test-fixture counterpart of the loader."""
    labels = np.asarray(labels)
    pixels = np.asarray(pixels)
    if pixels.shape != (labels.size, CIFAR_PIXELS):
        raise ValueError(f"pixels must be [n, {CIFAR_PIXELS}] uint8")
    if labels.size and (labels.min() < 0 or labels.max() > 9):
        raise ValueError("labels must lie in 0-9")
    rec = np.empty((labels.size, CIFAR_RECORD_BYTES), dtype=np.uint8)
    rec[:, 0] = labels.astype(np.uint8)
    rec[:, 1:] = pixels.astype(np.uint8)
    Path(path).write_bytes(rec.tobytes())


def normalize(dataset, scheme):
    """Return a normalized copy; ids and labels are untouched."""
    if len(dataset) == 0:
        raise ValueError("cannot normalize an empty dataset")
    if scheme == "none":
        return dataset
    if scheme == "per-feature-standardize":
        mean = dataset.X.mean(axis=0)
        std = np.maximum(dataset.X.std(axis=0), STD_FLOOR)
        X = (dataset.X - mean) / std
    elif scheme == "global-scale":
        scale = np.abs(dataset.X).max()
        X = dataset.X / scale if scale > 0 else dataset.X.copy()
    else:
        raise ValueError(f"unknown normalization {scheme!r}")
    return Dataset(X, dataset.labels, dataset.ids, class_count=dataset.class_count,
                   normalization=scheme)
