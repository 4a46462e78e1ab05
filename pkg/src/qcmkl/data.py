"""Synthetic binary-classification instances.

Each instance places Gaussian clusters at distinct random vertices of the
hypercube {-class_sep, +class_sep}^d, splits samples evenly across classes
and across each class's clusters, and mixes the per-sample normal deviations
through a random matrix (entries uniform in [-1, 1]) to correlate features.
Features are then min-max scaled to [0, 2*pi] on the full instance before a
plain shuffled train/test split. The whole pipeline is a pure function of
(d, n_samples, class_sep, clusters_per_class, seed).

With class_sep around 1.0 the classes are, with high probability, not
linearly separable; raising class_sep yields separable sanity instances.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    d: int
    seed: int
    class_sep: float
    train_indices: np.ndarray | None = None
    test_indices: np.ndarray | None = None

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def train_X(self) -> np.ndarray:
        return self.features[self.train_indices]

    @property
    def train_y(self) -> np.ndarray:
        return self.labels[self.train_indices]

    @property
    def test_X(self) -> np.ndarray:
        return self.features[self.test_indices]

    @property
    def test_y(self) -> np.ndarray:
        return self.labels[self.test_indices]


def generate_dataset(
    d: int,
    n_samples: int,
    class_sep: float = 1.0,
    clusters_per_class: int = 2,
    seed: int = 0,
) -> Dataset:
    """Unscaled instance; apply minmax_scale and split afterwards."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if n_samples < 2 or n_samples % 2 != 0:
        raise ValueError("n_samples must be even and >= 2")
    if class_sep <= 0:
        raise ValueError("class_sep must be positive")
    total_clusters = 2 * clusters_per_class
    if total_clusters > 2**d:
        raise ValueError(
            f"{total_clusters} clusters do not fit on {2**d} hypercube vertices"
        )
    rng = np.random.default_rng(seed)

    vertex_ids = rng.choice(2**d, size=total_clusters, replace=False)
    # Vertex bits map to coordinates -class_sep / +class_sep.
    bits = (vertex_ids[:, None] >> np.arange(d)[None, :]) & 1
    centroids = class_sep * (2.0 * bits - 1.0)

    mixing = rng.uniform(-1.0, 1.0, size=(d, d))

    per_class = n_samples // 2
    features = np.empty((n_samples, d))
    labels = np.empty(n_samples, dtype=int)
    row = 0
    for c, label in enumerate((1, -1)):
        counts = [per_class // clusters_per_class] * clusters_per_class
        for k in range(per_class % clusters_per_class):
            counts[k] += 1
        for k, count in enumerate(counts):
            centroid = centroids[c * clusters_per_class + k]
            deviations = rng.standard_normal((count, d)) @ mixing.T
            features[row : row + count] = centroid + deviations
            labels[row : row + count] = label
            row += count

    return Dataset(features=features, labels=labels, d=d, seed=seed, class_sep=class_sep)


def minmax_scale(features) -> np.ndarray:
    """Affine map of each column onto [0, 2*pi], fitted on the full instance."""
    features = np.asarray(features, dtype=float)
    lo = features.min(axis=0)
    hi = features.max(axis=0)
    degenerate = np.flatnonzero(hi <= lo)
    if degenerate.size:
        raise ValueError(f"constant feature column(s) {degenerate.tolist()} cannot be scaled")
    return (features - lo) / (hi - lo) * TWO_PI


def split(dataset: Dataset, ratio: float = 0.5, seed: int = 0) -> Dataset:
    """Plain shuffled partition (no stratification), deterministic by seed."""
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"split ratio must be in (0, 1), got {ratio}")
    n = dataset.n_samples
    n_train = int(round(n * ratio))
    if n_train < 1 or n_train > n - 1:
        raise ValueError(f"ratio {ratio} leaves an empty partition for {n} samples")
    perm = np.random.default_rng(seed).permutation(n)
    return replace(
        dataset,
        train_indices=np.sort(perm[:n_train]),
        test_indices=np.sort(perm[n_train:]),
    )


def make_instance(
    d: int,
    n_samples: int = 100,
    class_sep: float = 1.0,
    clusters_per_class: int = 2,
    seed: int = 0,
    ratio: float = 0.5,
    split_seed: int | None = None,
) -> Dataset:
    """generate -> scale -> split in one deterministic call."""
    ds = generate_dataset(d, n_samples, class_sep, clusters_per_class, seed)
    ds = replace(ds, features=minmax_scale(ds.features))
    return split(ds, ratio=ratio, seed=seed if split_seed is None else split_seed)


def manifest(dataset: Dataset, n_samples: int | None = None, clusters: int | None = None) -> dict:
    return {
        "d": dataset.d,
        "n": dataset.n_samples if n_samples is None else n_samples,
        "class_sep": dataset.class_sep,
        "clusters": clusters,
        "seed": dataset.seed,
    }


def save_csv(dataset: Dataset, path) -> None:
    """Header f0..f{d-1},label,partition; floats keep 17 significant digits."""
    train = set(dataset.train_indices.tolist()) if dataset.train_indices is not None else set()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{j}" for j in range(dataset.d)] + ["label", "partition"])
        for i in range(dataset.n_samples):
            row = [format(v, ".17g") for v in dataset.features[i]]
            row.append(str(int(dataset.labels[i])))
            row.append("train" if i in train else "test")
            writer.writerow(row)


def load_csv(path, seed: int = 0, class_sep: float = 0.0) -> Dataset:
    """Inverse of save_csv; the round trip is value-exact."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if len(header) < 3 or header[-2:] != ["label", "partition"]:
            raise ValueError(f"{path}: line 1: expected header f0..f{{d-1}},label,partition")
        d = len(header) - 2
        features, labels, train_idx, test_idx = [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != d + 2:
                raise ValueError(f"{path}: line {lineno}: expected {d + 2} fields, got {len(row)}")
            try:
                values = [float(v) for v in row[:d]]
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: malformed feature value") from None
            if row[d] not in ("1", "-1"):
                raise ValueError(f"{path}: line {lineno}: label must be 1 or -1, got {row[d]!r}")
            if row[d + 1] not in ("train", "test"):
                raise ValueError(
                    f"{path}: line {lineno}: partition must be train or test, got {row[d + 1]!r}"
                )
            index = len(features)
            features.append(values)
            labels.append(int(row[d]))
            (train_idx if row[d + 1] == "train" else test_idx).append(index)
    if not features:
        raise ValueError(f"{path}: no data rows")
    return Dataset(
        features=np.array(features),
        labels=np.array(labels, dtype=int),
        d=d,
        seed=seed,
        class_sep=class_sep,
        train_indices=np.array(train_idx, dtype=int),
        test_indices=np.array(test_idx, dtype=int),
    )


def save_manifest(info: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(info, fh, indent=2)
        fh.write("\n")
