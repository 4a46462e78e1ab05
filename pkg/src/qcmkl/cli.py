"""Command-line harness.

Subcommands cover the single-step operations (gen-data, gram, mkl-fit,
train, svm, evaluate, decision-grid) and the batch paths (experiment,
aggregate). The experiment command takes a JSON config file plus flag
overrides and exits non-zero if any instance failed; aggregate renders
figures next to its CSV tables.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import data as datamod
from .experiment import (
    ExperimentConfig,
    aggregate_report,
    decision_grid,
    full_config,
    instance_specs,
    run_experiment,
    stable_seed,
    write_decision_grid,
    write_report,
)
from .kernels import (
    KINDS,
    gram_matrix,
    load_gram_binary,
    load_gram_csv,
    make_spec,
    normalize_gram,
    prepare_gram,
    save_gram_binary,
    save_gram_csv,
)
from .mkl import MKLProblem, solve_easymkl
from .svm import train_svm
from .training import TrainingConfig, train


def _load_dataset(path):
    ds = datamod.load_csv(path)
    if ds.train_indices is None or len(ds.train_indices) == 0:
        raise SystemExit(f"{path}: no rows in the train partition")
    return ds


def _rows_for(ds, partition: str) -> np.ndarray:
    if partition == "train":
        return ds.train_X
    if partition == "test":
        return ds.test_X
    return ds.features


def _parse_theta(text):
    return None if text is None else [float(v) for v in text.split(",") if v]


def _specs_from_args(args, d: int):
    kinds = [k.strip() for k in args.kernels.split(",")]
    if len(kinds) != 2:
        raise SystemExit("--kernels takes exactly two comma-separated kinds")
    for k in kinds:
        if k not in KINDS:
            raise SystemExit(f"unknown kernel kind {k!r}; valid: {', '.join(KINDS)}")
    return instance_specs(kinds[0], kinds[1], d, args.theta_seed, args.qaoa_topology)


def _save_gram(gram, path) -> None:
    path = Path(path)
    if path.suffix == ".qgrm":
        save_gram_binary(gram, path)
    else:
        save_gram_csv(gram, path)


def _load_gram(path):
    path = Path(path)
    return load_gram_binary(path) if path.suffix == ".qgrm" else load_gram_csv(path)


def _write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def cmd_gen_data(args) -> int:
    ds = datamod.make_instance(
        d=args.d,
        n_samples=args.n_samples,
        class_sep=args.class_sep,
        clusters_per_class=args.clusters,
        seed=args.seed,
        ratio=args.ratio,
    )
    datamod.save_csv(ds, args.out)
    info = datamod.manifest(ds, n_samples=args.n_samples, clusters=args.clusters)
    datamod.save_manifest(info, Path(args.out).with_suffix(".manifest.json"))
    print(f"wrote {args.out} ({ds.n_samples} samples, d={ds.d})")
    return 0


def cmd_gram(args) -> int:
    ds = _load_dataset(args.data)
    rng = np.random.default_rng(args.theta_seed)
    spec = make_spec(
        args.kernel,
        ds.d,
        theta=_parse_theta(args.theta),
        rng=rng,
        qaoa_topology=args.qaoa_topology,
    )
    K = gram_matrix(spec, _rows_for(ds, args.partition))
    if not args.raw and not spec.bounded:
        K = normalize_gram(K)
    _save_gram(K, args.out)
    print(f"wrote {args.out} ({K.size}x{K.size}, kernel={args.kernel})")
    return 0


def cmd_mkl_fit(args) -> int:
    ds = _load_dataset(args.data)
    grams = [_load_gram(p) for p in args.gram]
    problem = MKLProblem(grams, ds.train_y, lam=args.lam)
    solution = solve_easymkl(problem)
    _write_json(solution.to_dict(), args.out)
    print(f"wrote {args.out} (gamma_l1={[round(float(g), 4) for g in solution.gamma_l1]})")
    return 0


def cmd_train(args) -> int:
    ds = _load_dataset(args.data)
    specs = _specs_from_args(args, ds.d)
    config = TrainingConfig(
        learning_rate=args.learning_rate,
        max_outer_iters=args.max_iters,
        loss_tolerance=args.loss_tol,
        lam=args.lam,
        seed=args.theta_seed,
    )
    result = train(specs, ds.train_X, ds.train_y, config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trace.jsonl").write_text(result.trace.to_json_lines())
    _write_json(
        {
            "theta_star": [list(s.theta) for s in result.specs],
            "gamma_l2": result.gamma_star.tolist(),
            "gamma_l1": result.gamma_l1.tolist(),
            "loss": result.solution.loss,
            "best_iteration": result.trace.best_iteration,
            "iterations": len(result.trace.records) - 1,
        },
        out / "result.json",
    )
    print(f"wrote {out}/result.json and {out}/trace.jsonl "
          f"(best iteration {result.trace.best_iteration})")
    return 0


def cmd_svm(args) -> int:
    ds = _load_dataset(args.data)
    K = _load_gram(args.gram)
    model = train_svm(K, ds.train_y, C=args.C)
    _write_json(model.to_dict(), args.out)
    print(f"wrote {args.out} ({len(model.support_indices)} support vectors)")
    return 0


def _instance_outcome(args, ds):
    """Shared evaluate / decision-grid pipeline for one result type."""
    from .experiment import evaluate_combination

    specs = _specs_from_args(args, ds.d)
    if args.type == "I":
        gamma = [0.5, 0.5]
    elif args.type == "II":
        grams = [prepare_gram(s, ds.train_X) for s in specs]
        solution = solve_easymkl(MKLProblem(grams, ds.train_y, lam=args.lam))
        gamma = solution.gamma_l1.tolist()
    else:
        config = TrainingConfig(
            learning_rate=args.learning_rate,
            max_outer_iters=args.max_iters,
            loss_tolerance=args.loss_tol,
            lam=args.lam,
            seed=args.theta_seed,
        )
        result = train(specs, ds.train_X, ds.train_y, config)
        specs = result.specs
        gamma = result.gamma_l1.tolist()
    if getattr(args, "gamma", None):
        gamma = [float(v) for v in args.gamma.split(",")]
    record, model, scores = evaluate_combination(specs, gamma, ds, args.C)
    return specs, gamma, record, model, scores


def cmd_evaluate(args) -> int:
    ds = _load_dataset(args.data)
    specs, gamma, record, _, _ = _instance_outcome(args, ds)
    row = {
        "kernels": [s.kind for s in specs],
        "result_type": args.type,
        "gamma_l1": gamma,
        "theta": [list(s.theta) for s in specs],
        **record.to_dict(),
    }
    print(json.dumps(row, indent=2))
    if args.out:
        _write_json(row, args.out)
    return 0


def cmd_decision_grid(args) -> int:
    from .plotting import save_decision_surface

    ds = _load_dataset(args.data)
    if ds.d != 2:
        raise SystemExit(f"decision grids need d = 2 data, got d = {ds.d}")
    specs, gamma, _, _, _ = _instance_outcome(args, ds)
    points, scores = decision_grid(specs, gamma, ds, svm_C=args.C, resolution=args.resolution)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_decision_grid(points, scores, out / "decision_grid.csv")
    figure = save_decision_surface(points, scores, out / "decision_surface.png", dataset=ds)
    print(f"wrote {out}/decision_grid.csv and {figure}")
    return 0


def _config_from_args(args) -> ExperimentConfig:
    base = {}
    if args.config:
        with open(args.config) as fh:
            base = json.load(fh)
    config = ExperimentConfig(**base)
    if args.full:
        config.d_range = full_config().d_range
    if args.pairs:
        config.kernel_pairs = [tuple(p.split(":")) for p in args.pairs.split(",")]
    if args.d_range:
        config.d_range = [int(v) for v in args.d_range.split(",")]
    if args.repetitions is not None:
        config.repetitions = args.repetitions
    if args.types:
        config.result_types = args.types.split(",")
    if args.base_seed is not None:
        config.base_seed = args.base_seed
    if args.workers is not None:
        config.workers = args.workers
    if args.class_sep is not None:
        config.class_sep = args.class_sep
    return ExperimentConfig(**config.to_dict())  # re-validate overrides


def cmd_experiment(args) -> int:
    config = _config_from_args(args)
    rows = run_experiment(config, args.out_dir)
    failures = [r for r in rows if r.error]
    print(f"wrote {len(rows)} rows to {args.out_dir}/rows.jsonl ({len(failures)} failed)")
    for row in failures[:10]:
        print(f"  {row.kernel_a}-{row.kernel_b} d={row.d} rep={row.repetition} "
              f"type={row.result_type}: {row.error}", file=sys.stderr)
    return 1 if failures else 0


def cmd_aggregate(args) -> int:
    with open(args.rows) as fh:
        rows = [json.loads(line) for line in fh if line.strip()]
    report = aggregate_report(rows)
    paths = write_report(report, args.out_dir)
    written = [str(p) for p in paths.values()]
    if not args.no_figures:
        from .plotting import save_median_heatmaps, save_weight_densities

        fig_dir = Path(args.out_dir) / "figures"
        written += [str(p) for p in save_median_heatmaps(report, fig_dir)]
        written += [str(p) for p in save_weight_densities(report, fig_dir)]
    print("wrote " + ", ".join(written))
    return 0


def _add_instance_args(p, with_type=True):
    p.add_argument("--data", required=True, help="dataset CSV from gen-data")
    p.add_argument("--kernels", required=True, help="two kinds, e.g. rx,linear")
    if with_type:
        p.add_argument("--type", choices=["I", "II", "III"], default="II")
    p.add_argument("--lambda", dest="lam", type=float, default=0.2)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--theta-seed", type=int, default=0)
    p.add_argument("--qaoa-topology", choices=["all_pairs", "ring"], default="all_pairs")
    p.add_argument("--learning-rate", type=float, default=0.05)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--loss-tol", type=float, default=1e-6)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcmkl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic dataset CSV")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n-samples", type=int, default=100)
    p.add_argument("--class-sep", type=float, default=1.0)
    p.add_argument("--clusters", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ratio", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("gram", help="build one kernel's Gram matrix")
    p.add_argument("--data", required=True)
    p.add_argument("--kernel", choices=KINDS, required=True)
    p.add_argument("--theta", help="comma-separated parameters (defaults per kind)")
    p.add_argument("--theta-seed", type=int, default=0, help="qaoa random-parameter seed")
    p.add_argument("--partition", choices=["train", "test", "all"], default="train")
    p.add_argument("--qaoa-topology", choices=["all_pairs", "ring"], default="all_pairs")
    p.add_argument("--raw", action="store_true", help="skip normalization of unbounded kernels")
    p.add_argument("--out", required=True, help=".csv or binary .qgrm by extension")
    p.set_defaults(func=cmd_gram)

    p = sub.add_parser("mkl-fit", help="solve the kernel-weighting problem")
    p.add_argument("--data", required=True)
    p.add_argument("--gram", action="append", required=True, help="repeat per kernel, train partition")
    p.add_argument("--lambda", dest="lam", type=float, default=0.2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mkl_fit)

    p = sub.add_parser("train", help="train kernel parameters and weights end to end")
    _add_instance_args(p, with_type=False)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("svm", help="fit an SVM on a precomputed training Gram")
    p.add_argument("--data", required=True)
    p.add_argument("--gram", required=True)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_svm)

    p = sub.add_parser("evaluate", help="run one instance end to end and print metrics")
    _add_instance_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment", help="run the experiment grid")
    p.add_argument("--config", help="JSON config; flags below override it")
    p.add_argument("--full", action="store_true", help="use the full d=2..13 grid")
    p.add_argument("--pairs", help="colon pairs, e.g. rx:linear,iqp:rbf")
    p.add_argument("--d-range", help="comma-separated feature counts")
    p.add_argument("--repetitions", type=int)
    p.add_argument("--types", help="subset of I,II,III")
    p.add_argument("--class-sep", type=float)
    p.add_argument("--base-seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("aggregate", help="aggregate rows into report CSVs and figures")
    p.add_argument("--rows", required=True, help="rows.jsonl from the experiment command")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("decision-grid", help="decision-function lattice for d=2 data")
    _add_instance_args(p)
    p.add_argument("--gamma", help="explicit weights, e.g. 0.4,0.6 (override the solve)")
    p.add_argument("--resolution", type=int, default=100)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_decision_grid)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
