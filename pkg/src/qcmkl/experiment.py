"""Experiment grid over kernel pairs, feature counts, and repetitions.

For every (kernel pair, d, repetition) instance the harness generates a
dataset, builds the processed Gram matrices, and produces up to three result
types:

    I    uniform weights, initial (default/random) kernel parameters
    II   optimized weights only
    III  trained kernel parameters and optimized weights

then fits an SVM on the combined training Gram and scores all metrics on the
test split. Rows are written as JSON lines plus a CSV. Per-instance seeds are
derived by hashing (base_seed, pair, d, repetition), so any subset of the
grid reproduces independently; instances are independent jobs and may run on
a worker pool, with rows always emitted in canonical (pair, d, repetition,
type) order so parallelism never changes the output bytes. Wall-clock times
are non-deterministic and therefore appear only in the CSV, never in the
JSON lines.
"""
from __future__ import annotations

import csv
import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import combinations_with_replacement
from pathlib import Path

import numpy as np

from .data import make_instance
from .kernels import (
    KernelSpec,
    combine_grams,
    cross_matrix,
    make_spec,
    prepare_gram,
)
from .metrics import MetricsRecord, accuracy, aucroc, margin, spectral_ratio
from .mkl import MKLProblem, solve_easymkl
from .svm import decision_values, predict, train_svm
from .training import TrainingConfig, train

KERNEL_ORDER = ("linear", "polynomial", "rbf", "rx", "iqp", "qaoa")
RESULT_TYPES = ("I", "II", "III")

JSONL_FIELDS = (
    "kernel_a",
    "kernel_b",
    "d",
    "repetition",
    "seed",
    "result_type",
    "gamma_l1",
    "theta",
    "accuracy",
    "aucroc",
    "margin",
    "spectral_ratio",
    "spectral_ratio_raw",
    "error",
)
CSV_FIELDS = JSONL_FIELDS + ("wall_time",)


def stable_seed(*parts) -> int:
    """Platform-independent 63-bit seed from the given parts."""
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def all_kernel_pairs() -> list[tuple[str, str]]:
    """The 21 unordered pairs (15 distinct + 6 self-pairs) in canonical order."""
    return list(combinations_with_replacement(KERNEL_ORDER, 2))


@dataclass
class ExperimentConfig:
    kernel_pairs: list[tuple[str, str]] = field(default_factory=all_kernel_pairs)
    d_range: list[int] = field(default_factory=lambda: list(range(2, 7)))
    repetitions: int = 10
    result_types: list[str] = field(default_factory=lambda: list(RESULT_TYPES))
    lam: float = 0.2
    svm_C: float = 1.0
    n_samples: int = 100
    class_sep: float = 1.0
    clusters_per_class: int = 2
    split_ratio: float = 0.5
    qaoa_topology: str = "all_pairs"
    training: dict = field(default_factory=dict)  # TrainingConfig overrides
    base_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        self.kernel_pairs = [tuple(p) for p in self.kernel_pairs]
        for a, b in self.kernel_pairs:
            if a not in KERNEL_ORDER or b not in KERNEL_ORDER:
                raise ValueError(f"unknown kernel in pair ({a}, {b})")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not self.d_range:
            raise ValueError("d_range must not be empty")
        bad = [t for t in self.result_types if t not in RESULT_TYPES]
        if bad:
            raise ValueError(f"unknown result types {bad}; valid: {RESULT_TYPES}")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["kernel_pairs"] = [list(p) for p in self.kernel_pairs]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return cls(**data)

    def training_config(self, seed: int) -> TrainingConfig:
        return TrainingConfig(lam=self.lam, seed=seed, **self.training)

    def expected_rows(self) -> int:
        return len(self.kernel_pairs) * len(self.d_range) * self.repetitions * len(self.result_types)


def full_config(**overrides) -> ExperimentConfig:
    """The complete grid: all 21 pairs, d = 2..13, 10 repetitions."""
    overrides.setdefault("d_range", list(range(2, 14)))
    return ExperimentConfig(**overrides)


@dataclass
class ResultRow:
    kernel_a: str
    kernel_b: str
    d: int
    repetition: int
    seed: int
    result_type: str
    gamma_l1: list[float] | None = None
    theta: list[list[float]] | None = None
    metrics: MetricsRecord | None = None
    wall_time: float = 0.0
    error: str | None = None

    def to_json_dict(self) -> dict:
        met = self.metrics.to_dict() if self.metrics else {}
        return {
            "kernel_a": self.kernel_a,
            "kernel_b": self.kernel_b,
            "d": self.d,
            "repetition": self.repetition,
            "seed": self.seed,
            "result_type": self.result_type,
            "gamma_l1": self.gamma_l1,
            "theta": self.theta,
            "accuracy": met.get("accuracy"),
            "aucroc": met.get("aucroc"),
            "margin": met.get("margin"),
            "spectral_ratio": met.get("spectral_ratio"),
            "spectral_ratio_raw": met.get("spectral_ratio_raw"),
            "error": self.error,
        }

    def to_csv_dict(self) -> dict:
        out = self.to_json_dict()
        out["gamma_l1"] = ";".join(format(g, ".17g") for g in self.gamma_l1 or [])
        out["theta"] = "|".join(
            ";".join(format(t, ".17g") for t in ts) for ts in self.theta or []
        )
        out["wall_time"] = format(self.wall_time, ".6f")
        return out


def instance_specs(
    kind_a: str, kind_b: str, d: int, theta_seed: int, qaoa_topology: str
) -> list[KernelSpec]:
    """Concrete specs for one instance. A self-pair shares one parameter
    draw, so the combination collapses to the lone base kernel exactly."""
    rng = np.random.default_rng(theta_seed)
    spec_a = make_spec(kind_a, d, rng=rng, qaoa_topology=qaoa_topology)
    spec_b = spec_a if kind_b == kind_a else make_spec(kind_b, d, rng=rng, qaoa_topology=qaoa_topology)
    return [spec_a, spec_b]


def evaluate_combination(specs, gamma_l1, dataset, svm_C: float):
    """Fit the SVM on the combined training Gram and score all metrics."""
    train_grams = [prepare_gram(s, dataset.train_X) for s in specs]
    combined = combine_grams(train_grams, gamma_l1)
    model = train_svm(combined, dataset.train_y, C=svm_C)
    crosses = [
        cross_matrix(s, dataset.test_X, dataset.train_X, normalize=not s.bounded)
        for s in specs
    ]
    cross = sum(w * c for w, c in zip(gamma_l1, crosses))
    scores = decision_values(model, cross)
    predictions = predict(model, cross)
    normalized_sr, raw_sr = spectral_ratio(combined)
    record = MetricsRecord(
        accuracy=accuracy(predictions, dataset.test_y),
        aucroc=aucroc(scores, dataset.test_y),
        margin=margin(combined, dataset.train_y),
        spectral_ratio=normalized_sr,
        spectral_ratio_raw=raw_sr,
    )
    return record, model, scores


def run_instance(config: ExperimentConfig, pair: tuple[str, str], d: int, repetition: int) -> list[ResultRow]:
    """All requested result types for one grid instance; failures become
    error rows and never abort the grid."""
    kind_a, kind_b = pair
    seed = stable_seed(config.base_seed, kind_a, kind_b, d, repetition)

    def error_row(result_type, message):
        return ResultRow(
            kernel_a=kind_a,
            kernel_b=kind_b,
            d=d,
            repetition=repetition,
            seed=seed,
            result_type=result_type,
            error=message,
        )

    try:
        dataset = make_instance(
            d,
            n_samples=config.n_samples,
            class_sep=config.class_sep,
            clusters_per_class=config.clusters_per_class,
            seed=stable_seed(seed, "data"),
            ratio=config.split_ratio,
            split_seed=stable_seed(seed, "split"),
        )
        specs = instance_specs(kind_a, kind_b, d, stable_seed(seed, "theta"), config.qaoa_topology)
    except Exception as exc:  # noqa: BLE001 - recorded, run continues
        return [error_row(t, str(exc)) for t in config.result_types]

    rows = []
    for result_type in config.result_types:
        started = time.perf_counter()
        try:
            if result_type == "I":
                used_specs = specs
                gamma = [0.5, 0.5]
            elif result_type == "II":
                used_specs = specs
                grams = [prepare_gram(s, dataset.train_X) for s in specs]
                solution = solve_easymkl(MKLProblem(grams, dataset.train_y, config.lam))
                gamma = solution.gamma_l1.tolist()
            else:
                result = train(
                    specs,
                    dataset.train_X,
                    dataset.train_y,
                    config.training_config(seed),
                )
                used_specs = result.specs
                gamma = result.gamma_l1.tolist()
            record, _, _ = evaluate_combination(used_specs, gamma, dataset, config.svm_C)
            rows.append(
                ResultRow(
                    kernel_a=kind_a,
                    kernel_b=kind_b,
                    d=d,
                    repetition=repetition,
                    seed=seed,
                    result_type=result_type,
                    gamma_l1=list(gamma),
                    theta=[list(s.theta) for s in used_specs],
                    metrics=record,
                    wall_time=time.perf_counter() - started,
                )
            )
        except Exception as exc:  # noqa: BLE001 - recorded, run continues
            row = error_row(result_type, str(exc))
            row.wall_time = time.perf_counter() - started
            rows.append(row)
    return rows


def _job(args) -> list[ResultRow]:
    config_dict, pair, d, repetition = args
    return run_instance(ExperimentConfig.from_dict(config_dict), tuple(pair), d, repetition)


def run_experiment(config: ExperimentConfig, out_dir) -> list[ResultRow]:
    """Run the whole grid and write rows.jsonl, rows.csv, and config.json.

    Re-running with the same config produces byte-identical rows.jsonl; the
    CSV additionally carries wall-clock times.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [
        (config.to_dict(), pair, d, rep)
        for pair in config.kernel_pairs
        for d in config.d_range
        for rep in range(config.repetitions)
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            per_instance = list(pool.map(_job, jobs, chunksize=1))
    else:
        per_instance = [_job(job) for job in jobs]
    rows = [row for instance_rows in per_instance for row in instance_rows]

    with open(out / "rows.jsonl", "w") as fh:
        for row in rows:
            fh.write(json.dumps(row.to_json_dict()) + "\n")
    with open(out / "rows.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row.to_csv_dict())
    with open(out / "config.json", "w") as fh:
        json.dump(config.to_dict(), fh, indent=2)
        fh.write("\n")
    return rows


METRIC_NAMES = ("accuracy", "aucroc", "margin", "spectral_ratio", "spectral_ratio_raw")


def _as_dicts(rows) -> list[dict]:
    return [r.to_json_dict() if isinstance(r, ResultRow) else dict(r) for r in rows]


def aggregate_report(rows, bins: int = 50) -> dict:
    """Median metrics per (pair, type), the III-minus-I difference grid, and
    per-(pair, type, d) histograms of the second kernel's weight.

    Returns {"medians": [...], "differences": [...], "densities": [...]};
    error rows are excluded from every aggregate.
    """
    rows = [r for r in _as_dicts(rows) if not r.get("error")]
    if not rows:
        raise ValueError("no successful rows to aggregate")

    def keyed(row, *names):
        return tuple(row[n] for n in names)

    medians = []
    by_pair_type: dict = {}
    for row in rows:
        by_pair_type.setdefault(keyed(row, "kernel_a", "kernel_b", "result_type"), []).append(row)
    for (a, b, rt), group in sorted(by_pair_type.items()):
        for metric in METRIC_NAMES:
            medians.append(
                {
                    "kernel_a": a,
                    "kernel_b": b,
                    "result_type": rt,
                    "metric": metric,
                    "median": float(np.median([g[metric] for g in group])),
                }
            )

    med_lookup = {
        (m["kernel_a"], m["kernel_b"], m["result_type"], m["metric"]): m["median"]
        for m in medians
    }
    differences = []
    pairs = sorted({(r["kernel_a"], r["kernel_b"]) for r in rows})
    for a, b in pairs:
        for metric in METRIC_NAMES:
            before = med_lookup.get((a, b, "I", metric))
            after = med_lookup.get((a, b, "III", metric))
            if before is None or after is None:
                continue
            differences.append(
                {
                    "kernel_a": a,
                    "kernel_b": b,
                    "metric": metric,
                    "difference": round(after - before, 2),
                }
            )

    densities = []
    by_pair_type_d: dict = {}
    for row in rows:
        if not row.get("gamma_l1"):
            continue
        key = keyed(row, "kernel_a", "kernel_b", "result_type", "d")
        by_pair_type_d.setdefault(key, []).append(row["gamma_l1"][1])
    edges = np.linspace(0.0, 1.0, bins + 1)
    for (a, b, rt, d), weights in sorted(by_pair_type_d.items()):
        counts, _ = np.histogram(weights, bins=edges)
        for k in range(bins):
            densities.append(
                {
                    "kernel_a": a,
                    "kernel_b": b,
                    "result_type": rt,
                    "d": d,
                    "bin_left": float(edges[k]),
                    "bin_right": float(edges[k + 1]),
                    "count": int(counts[k]),
                }
            )

    return {"medians": medians, "differences": differences, "densities": densities}


def write_report(report: dict, out_dir) -> dict[str, Path]:
    """Write the aggregate tables as CSV files; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    tables = {
        "medians": ("medians.csv", ["kernel_a", "kernel_b", "result_type", "metric", "median"]),
        "differences": ("differences.csv", ["kernel_a", "kernel_b", "metric", "difference"]),
        "densities": (
            "weight_densities.csv",
            ["kernel_a", "kernel_b", "result_type", "d", "bin_left", "bin_right", "count"],
        ),
    }
    for name, (filename, columns) in tables.items():
        path = out / filename
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=columns)
            writer.writeheader()
            writer.writerows(report[name])
        paths[name] = path
    return paths


def decision_grid(specs, gamma_l1, dataset, svm_C: float = 1.0, resolution: int = 100):
    """Decision-function scores on a resolution x resolution lattice over
    [0, 2*pi]^2. Only defined for d = 2."""
    if dataset.d != 2 or any(s.n_features != 2 for s in specs):
        raise ValueError("decision grids are only defined for d = 2")
    train_grams = [prepare_gram(s, dataset.train_X) for s in specs]
    combined = combine_grams(train_grams, gamma_l1)
    model = train_svm(combined, dataset.train_y, C=svm_C)
    axis = np.linspace(0.0, 2.0 * np.pi, resolution)
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    points = np.column_stack([gx.ravel(), gy.ravel()])
    crosses = [
        cross_matrix(s, points, dataset.train_X, normalize=not s.bounded) for s in specs
    ]
    cross = sum(w * c for w, c in zip(gamma_l1, crosses))
    scores = decision_values(model, cross)
    return points, scores


def write_decision_grid(points, scores, path) -> None:
    """CSV columns x, y, score; one row per lattice point."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "score"])
        for (x, y), s in zip(points, scores):
            writer.writerow([format(x, ".17g"), format(y, ".17g"), format(s, ".17g")])
