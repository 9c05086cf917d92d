"""Desk-scale datasets: synthetic generators, CSV and IDX loaders, batching."""

from __future__ import annotations

import csv
import gzip
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class DataError(ValueError):
    pass


class RaggedRowError(DataError):
    pass


class NonNumericError(DataError):
    pass


class UnknownColumnError(DataError):
    pass


class IdxFormatError(DataError):
    pass


@dataclass
class Dataset:
    features: np.ndarray  # (N, dim) float64
    labels: np.ndarray  # (N,) intp
    class_count: int
    label_names: tuple[str, ...] | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.intp)
        if self.features.ndim != 2 or len(self.features) != len(self.labels):
            raise DataError("features must be (N, dim) with one label per row")
        if len(self.labels) < 1:
            raise DataError("dataset is empty")
        if self.labels.min() < 0 or self.labels.max() >= self.class_count:
            raise DataError(f"labels must lie in [0, {self.class_count})")
        if not np.isfinite(self.features).all():
            raise DataError("features contain NaN or Inf")

    def __len__(self) -> int:
        return len(self.labels)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.class_count == other.class_count
                and self.label_names == other.label_names
                and np.array_equal(self.features, other.features)
                and np.array_equal(self.labels, other.labels))

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, index) -> "Dataset":
        return Dataset(self.features[index], self.labels[index], self.class_count, self.label_names)


def gen_blobs(n: int, C: int, dim: int, spread: float, seed: int = 0) -> Dataset:
    """``C`` isotropic Gaussian clusters of ``n`` points each.

    Centers are random directions on the unit hypersphere, scaled by 3.
    """
    if C < 2 or dim < 1 or n < 1:
        raise ValueError("need C >= 2, dim >= 1, n >= 1")
    if spread < 0:
        raise ValueError("spread must be nonnegative")
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(C, dim))
    centers = 3.0 * centers / np.linalg.norm(centers, axis=1, keepdims=True)
    labels = np.repeat(np.arange(C), n)
    features = centers[labels] + spread * rng.normal(size=(C * n, dim))
    return Dataset(features, labels, C)


def gen_spirals(n: int, turns: float = 1.0, noise: float = 0.0, seed: int = 0,
                classes: int = 2) -> Dataset:
    """Interleaved 2-D spiral arms, one per class."""
    if turns <= 0:
        raise ValueError("turns must be positive")
    if classes not in (2, 3):
        raise ValueError("spirals support 2 or 3 classes")
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 1.0, n)
    radius = 0.2 + 0.8 * t
    feats, labels = [], []
    for k in range(classes):
        angle = 2 * np.pi * (turns * t + k / classes)
        arm = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
        feats.append(arm + noise * rng.normal(size=arm.shape))
        labels.append(np.full(n, k))
    return Dataset(np.vstack(feats), np.concatenate(labels), classes)


def train_test_split(ds: Dataset, test_fraction: float, seed: int = 0) -> tuple[Dataset, Dataset]:
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    order = np.random.default_rng(seed).permutation(len(ds))
    n_test = int(round(test_fraction * len(ds)))
    return ds.subset(np.sort(order[n_test:])), ds.subset(np.sort(order[:n_test]))


def load_csv(path, label_column: str) -> Dataset:
    """Numeric CSV with a header row.

    Labels are remapped to 0..C-1 in order of first appearance; the
    original tokens are kept in ``label_names``.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    if label_column not in header:
        raise UnknownColumnError(f"{path}: no column named {label_column!r}")
    li = header.index(label_column)
    names: dict[str, int] = {}
    feats, labels = [], []
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise RaggedRowError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
        token = row[li].strip()
        try:
            feats.append([float(c) for j, c in enumerate(row) if j != li])
            float(token)
        except ValueError as exc:
            raise NonNumericError(f"{path}:{lineno}: {exc}") from None
        labels.append(names.setdefault(token, len(names)))
    if not body:
        raise DataError(f"{path}: no data rows")
    return Dataset(np.array(feats, dtype=np.float64).reshape(len(body), len(header) - 1),
                   labels, max(len(names), 2), tuple(names))


def write_csv(ds: Dataset, path, label_column: str = "label") -> None:
    names = ds.label_names or tuple(str(i) for i in range(ds.class_count))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{j}" for j in range(ds.dim)] + [label_column])
        for x, y in zip(ds.features, ds.labels):
            w.writerow([repr(float(v)) for v in x] + [names[y]])


def _read(path) -> bytes:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        return fh.read()


def load_idx(images_path, labels_path, class_count: int | None = None) -> Dataset:
    """IDX image/label pair; pixels scaled to [0, 1] and flattened row-major."""
    img = _read(images_path)
    lab = _read(labels_path)
    if len(img) < 16 or len(lab) < 8:
        raise IdxFormatError("IDX header truncated")
    magic, n_img, rows, cols = struct.unpack(">IIII", img[:16])
    if magic != IDX_IMAGES_MAGIC:
        raise IdxFormatError(f"{images_path}: bad image magic {magic:#010x}")
    magic, n_lab = struct.unpack(">II", lab[:8])
    if magic != IDX_LABELS_MAGIC:
        raise IdxFormatError(f"{labels_path}: bad label magic {magic:#010x}")
    if n_img != n_lab:
        raise IdxFormatError(f"{n_img} images but {n_lab} labels")
    if len(img) != 16 + n_img * rows * cols:
        raise IdxFormatError(f"{images_path}: expected {n_img * rows * cols} pixel bytes, "
                             f"got {len(img) - 16}")
    if len(lab) != 8 + n_lab:
        raise IdxFormatError(f"{labels_path}: expected {n_lab} label bytes, got {len(lab) - 8}")
    pixels = np.frombuffer(img, np.uint8, offset=16).reshape(n_img, rows * cols)
    labels = np.frombuffer(lab, np.uint8, offset=8).astype(np.intp)
    if class_count is None:
        class_count = max(int(labels.max()) + 1, 2)
    return Dataset(pixels / 255.0, labels, class_count)


def write_idx(images: np.ndarray, labels: np.ndarray, images_path, labels_path) -> None:
    images = np.asarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    Path(images_path).write_bytes(struct.pack(">IIII", IDX_IMAGES_MAGIC, n, rows, cols)
                                  + images.tobytes())
    Path(labels_path).write_bytes(struct.pack(">II", IDX_LABELS_MAGIC, n)
                                  + np.asarray(labels, dtype=np.uint8).tobytes())


def n_batches(n: int, batch_size: int) -> int:
    return math.ceil(n / batch_size)


def batch_iter(ds: Dataset, batch_size: int, epoch_seed) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Seeded shuffle, then consecutive batches; the last one may be short."""
    if batch_size < 1:
        raise ValueError("batch_size must be positive")
    order = np.random.default_rng(epoch_seed).permutation(len(ds))
    for start in range(0, len(ds), batch_size):
        idx = order[start:start + batch_size]
        yield ds.features[idx], ds.labels[idx]
