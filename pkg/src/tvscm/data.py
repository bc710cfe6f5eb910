"""Dataset loaders: MNIST IDX files, segmented-beat ECG CSV, seeded synthetic blobs."""

from __future__ import annotations

import csv
import gzip
import hashlib
import logging
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ArityError,
    BadMagicError,
    CountMismatchError,
    EmptyDatasetError,
    LabelRangeError,
    NonNumericError,
    TruncatedFileError,
)

log = logging.getLogger(__name__)

IDX_IMAGES_MAGIC = 2051
IDX_LABELS_MAGIC = 2049
MNIST_SHAPE = (784, 10)
ECG_SHAPE = (187, 5)

# the ``t10k`` prefix is what the original distribution uses for the test split
MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    classes: int
    name: str = "dataset"

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels)
        if X.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise CountMismatchError(f"{X.shape[0]} feature rows but labels have shape {y.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("features contain non-finite values")
        if y.size and (y.min() < 0 or y.max() >= self.classes):
            raise LabelRangeError(f"labels must lie in 0..{self.classes - 1}")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y.astype(np.int64))

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def fingerprint(self) -> dict:
        payload = self.features.tobytes() + self.labels.tobytes()
        return {
            "samples": len(self),
            "bytes": len(payload),
            "sha256": hashlib.sha256(payload).hexdigest(),
        }


def _read_bytes(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def read_idx(path, expected_magic: int | None = None) -> np.ndarray:
    """Parse an IDX file of unsigned bytes (gzip accepted) into a uint8 array."""
    raw = _read_bytes(path)
    if len(raw) < 4:
        raise TruncatedFileError(f"{path}: file too short for an IDX header")
    (magic,) = struct.unpack(">I", raw[:4])
    if (magic >> 8) != 0x08 or magic & 0xFF == 0:
        raise BadMagicError(f"{path}: magic {magic} is not an unsigned-byte IDX magic")
    if expected_magic is not None and magic != expected_magic:
        raise BadMagicError(f"{path}: magic {magic}, expected {expected_magic}")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise TruncatedFileError(f"{path}: truncated dimension header")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    count = math.prod(dims)
    if len(raw) - header < count:
        raise TruncatedFileError(
            f"{path}: payload has {len(raw) - header} bytes, header declares {count}")
    return np.frombuffer(raw, dtype=np.uint8, count=count, offset=header).reshape(dims)


def write_idx(array, path):
    """Write a uint8 array as IDX (the inverse of :func:`read_idx`)."""
    arr = np.asarray(array)
    if arr.dtype != np.uint8:
        raise ValueError("only unsigned-byte IDX files are supported")
    header = struct.pack(">I", 0x0800 | arr.ndim) + struct.pack(f">{arr.ndim}I", *arr.shape)
    Path(path).write_bytes(header + arr.tobytes())


def load_mnist(images_path, labels_path, name: str = "mnist") -> Dataset:
    images = read_idx(images_path, IDX_IMAGES_MAGIC)
    labels = read_idx(labels_path, IDX_LABELS_MAGIC)
    if images.ndim != 3 or images.shape[1] * images.shape[2] != MNIST_SHAPE[0]:
        raise BadMagicError(f"{images_path}: expected N x 28 x 28 images, got {images.shape}")
    if labels.ndim != 1:
        raise BadMagicError(f"{labels_path}: expected a 1-D label vector, got {labels.shape}")
    if images.shape[0] != labels.shape[0]:
        raise CountMismatchError(
            f"{images.shape[0]} images but {labels.shape[0]} labels")
    features = images.reshape(images.shape[0], -1) / 255.0
    return Dataset(features, labels, MNIST_SHAPE[1], name)


def find_mnist_file(directory, stem: str) -> Path:
    directory = Path(directory)
    for candidate in (directory / stem, directory / f"{stem}.gz"):
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"{stem}[.gz] not found in {directory}")


def load_mnist_dir(directory, split: str = "train") -> Dataset:
    img, lbl = MNIST_FILES[split]
    return load_mnist(find_mnist_file(directory, img), find_mnist_file(directory, lbl),
                      name=f"mnist-{split}")


def load_ecg_csv(path, name: str | None = None) -> Dataset:
    """Rows of 187 samples followed by a class label in 0..4.

    Rows with values outside [0, 1] are min-max scaled individually and a
    warning is logged.
    """
    n_feat, k = ECG_SHAPE
    rows, labels = [], []
    with open(path, newline="") as f:
        for lineno, row in enumerate(csv.reader(f), start=1):
            if not row:
                continue
            if len(row) != n_feat + 1:
                raise ArityError(
                    f"{path}: row {lineno} has {len(row)} columns, expected {n_feat + 1}")
            try:
                values = [float(c) for c in row]
            except ValueError as exc:
                raise NonNumericError(f"{path}: row {lineno}: {exc}") from None
            label = values[-1]
            if label != int(label) or not 0 <= label < k:
                raise LabelRangeError(f"{path}: row {lineno} has label {row[-1]!r}, expected 0..{k - 1}")
            rows.append(values[:-1])
            labels.append(int(label))
    if not rows:
        raise EmptyDatasetError(f"{path}: no data rows")
    X = np.array(rows)
    if not np.all(np.isfinite(X)):
        raise NonNumericError(f"{path}: non-finite feature values")
    bad = (X.min(axis=1) < 0.0) | (X.max(axis=1) > 1.0)
    if bad.any():
        log.warning("%s: %d rows outside [0, 1]; applying per-row min-max scaling",
                    path, int(bad.sum()))
        lo = X[bad].min(axis=1, keepdims=True)
        span = X[bad].max(axis=1, keepdims=True) - lo
        X[bad] = (X[bad] - lo) / np.where(span > 0, span, 1.0)
    return Dataset(X, np.array(labels), k, name or Path(path).stem)


def make_synthetic(seed: int, samples: int, dim: int, classes: int,
                   noise: float = 0.3, name: str = "synthetic") -> Dataset:
    """Gaussian blobs around ``classes`` random unit-norm centroids.

    Labels cycle through the classes before shuffling, so class sizes differ
    by at most one.
    """
    if samples < 1 or dim < 1 or classes < 1:
        raise ValueError("samples, dim and classes must be positive")
    rng = np.random.default_rng(seed)
    centroids = rng.standard_normal((classes, dim))
    centroids /= np.linalg.norm(centroids, axis=1, keepdims=True)
    labels = rng.permutation(np.arange(samples) % classes)
    X = centroids[labels] + noise * rng.standard_normal((samples, dim))
    return Dataset(X, labels, classes, name)
