"""Command-line entry points for the denoising bench.

Exit codes: 0 success, 2 invalid input, 3 diverged training, 4 insufficient
partition data.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .bench import (
    ablation_run,
    convergence_experiment,
    evaluate,
    latency_bench,
    learnability_experiment,
    split_dataset,
    standard_run,
)
from .config import Config, default_config, derive_seed, load_config
from .contamination import build_dataset, compute_terciles
from .data_io import (
    PoolRole,
    load_dataset,
    load_pool,
    save_dataset,
    synth_surrogate_eeg,
    synth_surrogate_emg,
    write_pool,
)
from .errors import (
    DivergedTrainingError,
    InsufficientDataError,
    InvalidInputError,
    MoeDenoiseError,
)
from .moe_pipeline import MoeVariant, build_moe, load_moe, save_moe
from .nn import build_model, save_model
from .routing import (
    accuracy,
    confusion,
    tier_labels,
    train_snr_classifier,
    train_type_classifier,
    type_labels,
)


def _load_config(args) -> Config:
    return load_config(args.config) if args.config else default_config()


def _seed(args, config: Config) -> int:
    return config.seed if args.seed is None else args.seed


def _write_confusions(out_dir: str, mats: dict[str, np.ndarray]) -> None:
    for name, mat in mats.items():
        with open(os.path.join(out_dir, f"confusion_{name}.csv"), "w", newline="\n") as fh:
            for row in mat:
                fh.write(",".join(str(int(v)) for v in row) + "\n")


def cmd_synth_data(args) -> int:
    config = _load_config(args)
    seed = _seed(args, config)
    n_eeg, n_emg = config.pool_sizes
    if args.n_eeg:
        n_eeg = args.n_eeg
    if args.n_emg:
        n_emg = args.n_emg
    os.makedirs(args.out, exist_ok=True)
    eeg = synth_surrogate_eeg(n_eeg, config.segment_length,
                              derive_seed(seed, "pool", "eeg"), config.sample_rate_hz)
    emg = synth_surrogate_emg(n_emg, config.segment_length,
                              derive_seed(seed, "pool", "emg"), config.sample_rate_hz)
    write_pool(eeg, os.path.join(args.out, "clean.csv"))
    write_pool(emg, os.path.join(args.out, "emg.csv"))
    print(f"wrote {n_eeg} clean and {n_emg} artifact segments to {args.out}")
    return 0


def _load_pools(args):
    clean_path, emg_path = args.pools
    return (load_pool(clean_path, PoolRole.CLEAN_EEG),
            load_pool(emg_path, PoolRole.EMG_ARTIFACT))


def cmd_contaminate(args) -> int:
    config = _load_config(args)
    seed = _seed(args, config)
    eeg, emg = _load_pools(args)
    snr_range = tuple(args.snr_range) if args.snr_range else config.snr_range
    n = args.n if args.n else config.n_samples
    thresholds = compute_terciles([float(np.var(emg.data[i])) for i in range(len(emg))])
    samples = build_dataset(eeg.segments(), emg.segments(), snr_range, n,
                            derive_seed(seed, "dataset"), thresholds=thresholds)
    train_part, test_part = split_dataset(samples, config.split_ratio,
                                          derive_seed(seed, "split"))
    path = save_dataset({"train": train_part, "test": test_part}, thresholds,
                        seed, snr_range, args.out, config_hash=config.hash)
    print(f"wrote dataset manifest {path} ({len(train_part)} train / {len(test_part)} test)")
    return 0


def cmd_train_router(args) -> int:
    config = _load_config(args)
    seed = _seed(args, config)
    splits, _ = load_dataset(args.data)
    train_part, test_part = splits["train"], splits.get("test", [])
    os.makedirs(args.out, exist_ok=True)
    results = {}
    for name, trainer, labeler in (
        ("type", train_type_classifier, type_labels),
        ("snr", train_snr_classifier, tier_labels),
    ):
        model = build_model(config.architecture("classifier_cnn"), config.input_shape,
                            seed=derive_seed(seed, "init", f"{name}_classifier"))
        cfg = config.train_config("classifier", derive_seed(seed, "train", f"{name}_classifier"))
        trained, history = trainer(train_part, model, cfg)
        save_model(trained, os.path.join(args.out, f"router_{name}.model"))
        history.to_csv(os.path.join(args.out, f"router_{name}_history.csv"))
        if test_part:
            results[f"{name}_accuracy"] = accuracy(trained, test_part, labeler(test_part))
            _write_confusions(args.out, {name: confusion(trained, test_part, labeler(test_part))})
    with open(os.path.join(args.out, "router_report.json"), "w", newline="\n") as fh:
        json.dump(results, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print("router trained:", json.dumps(results, sort_keys=True))
    return 0


def cmd_build_moe(args) -> int:
    config = _load_config(args)
    seed = _seed(args, config)
    splits, _ = load_dataset(args.data)
    system = build_moe(MoeVariant(args.variant), splits["train"], config, seed=seed)
    path = save_moe(system, args.out)
    print(f"built {args.variant} system ({len(system.experts)} experts) -> {path}")
    return 0


def cmd_train_experts(args) -> int:
    # same training as build-moe but keeps only the expert checkpoints;
    # useful for retraining one variant's experts against a frozen router
    config = _load_config(args)
    seed = _seed(args, config)
    splits, _ = load_dataset(args.data)
    system = build_moe(MoeVariant(args.variant), splits["train"], config, seed=seed)
    path = save_moe(system, args.out)
    print(f"trained {len(system.experts)} experts for {args.variant} -> {path}")
    return 0


def cmd_evaluate(args) -> int:
    config = _load_config(args)
    system = load_moe(args.system)
    splits, _ = load_dataset(args.data)
    test_part = splits.get("test") or splits["train"]
    report = evaluate(system, test_part, routing=args.routing, config_hash=config.hash)
    os.makedirs(args.out, exist_ok=True)
    stem = f"eval_{args.routing}"
    report.write_json(os.path.join(args.out, f"{stem}.json"))
    report.write_records_csv(os.path.join(args.out, f"{stem}_records.csv"))
    report.write_bins_csv(os.path.join(args.out, f"{stem}_bins.csv"))
    text = report.render_text()
    with open(os.path.join(args.out, f"{stem}.txt"), "w", newline="\n") as fh:
        fh.write(text)
    print(text, end="")
    return 0


def cmd_ablate(args) -> int:
    config = _load_config(args)
    seed = _seed(args, config)
    splits, _ = load_dataset(args.data)
    report = ablation_run(splits["train"], splits["test"], config, seed=seed)
    os.makedirs(args.out, exist_ok=True)
    report.write_json(os.path.join(args.out, "ablation.json"))
    text = report.render_text()
    with open(os.path.join(args.out, "ablation.txt"), "w", newline="\n") as fh:
        fh.write(text)
    print(text, end="")
    return 0


def cmd_learnability(args) -> int:
    config = _load_config(args)
    seed = _seed(args, config)
    eeg, emg = _load_pools(args)
    result = learnability_experiment(eeg, emg, config, seed=seed)
    os.makedirs(args.out, exist_ok=True)
    result.write_json(os.path.join(args.out, "learnability.json"))
    text = result.render_text()
    with open(os.path.join(args.out, "learnability.txt"), "w", newline="\n") as fh:
        fh.write(text)
    print(text, end="")
    return 0


def cmd_convergence(args) -> int:
    config = _load_config(args)
    seed = _seed(args, config)
    result = convergence_experiment(config, seed=seed)
    os.makedirs(args.out, exist_ok=True)
    result.write_json(os.path.join(args.out, "convergence.json"))
    result.corr_history.to_csv(os.path.join(args.out, "convergence_corr_history.csv"))
    result.mse_history.to_csv(os.path.join(args.out, "convergence_mse_history.csv"))
    text = result.render_text()
    with open(os.path.join(args.out, "convergence.txt"), "w", newline="\n") as fh:
        fh.write(text)
    print(text, end="")
    return 0


def cmd_bench_latency(args) -> int:
    system = load_moe(args.system)
    report = latency_bench(system, args.trials, args.seed if args.seed is not None else 0)
    os.makedirs(args.out, exist_ok=True)
    payload = {"trials": report.trials, "mean_s": report.mean_s, "std_s": report.std_s,
               "samples": list(report.samples)}
    with open(os.path.join(args.out, "latency.json"), "w", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(report.render_text(), end="")
    return 0


def cmd_report(args) -> int:
    config = _load_config(args)
    seed = _seed(args, config)
    summary = standard_run(config, args.out, seed=seed)
    print(json.dumps(summary, sort_keys=True, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moedenoise",
        description="Mixture-of-experts EEG denoising bench (desk scale)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--config", default=None, help="config JSON (default: packaged desk config)")
        if out:
            p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("synth-data", help="write surrogate clean/artifact pools")
    common(p)
    p.add_argument("--n-eeg", type=int, default=None)
    p.add_argument("--n-emg", type=int, default=None)
    p.set_defaults(func=cmd_synth_data)

    p = sub.add_parser("contaminate", help="mix pools into a labeled train/test dataset")
    common(p)
    p.add_argument("--pools", nargs=2, metavar=("CLEAN", "EMG"), required=True)
    p.add_argument("--snr-range", nargs=2, type=float, metavar=("LO", "HI"), default=None)
    p.add_argument("--n", type=int, default=None)
    p.set_defaults(func=cmd_contaminate)

    p = sub.add_parser("train-router", help="train and freeze the two routing classifiers")
    common(p)
    p.add_argument("--data", required=True, help="dataset manifest.json")
    p.set_defaults(func=cmd_train_router)

    p = sub.add_parser("train-experts", help="train per-partition experts for a variant")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--variant", choices=[v.value for v in MoeVariant], default="full7")
    p.set_defaults(func=cmd_train_experts)

    p = sub.add_parser("build-moe", help="train router + experts and persist the system")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--variant", choices=[v.value for v in MoeVariant], default="full7")
    p.set_defaults(func=cmd_build_moe)

    p = sub.add_parser("evaluate", help="evaluate a persisted system on a dataset")
    common(p)
    p.add_argument("--system", required=True, help="system.json manifest")
    p.add_argument("--data", required=True)
    p.add_argument("--routing", choices=["learned", "oracle"], default="learned")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="build and evaluate all four MoE variants")
    common(p)
    p.add_argument("--data", required=True)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("learnability", help="per-type denoising learnability experiment")
    common(p)
    p.add_argument("--pools", nargs=2, metavar=("CLEAN", "EMG"), required=True)
    p.set_defaults(func=cmd_learnability)

    p = sub.add_parser("convergence", help="correlation-vs-mse convergence experiment")
    common(p)
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("bench-latency", help="wall-clock latency of one denoise call")
    common(p)
    p.add_argument("--system", required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.set_defaults(func=cmd_bench_latency)

    p = sub.add_parser("report", help="full standard run: data, system, evaluations")
    common(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InsufficientDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except DivergedTrainingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (InvalidInputError, MoeDenoiseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
