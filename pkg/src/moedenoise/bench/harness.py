"""Experiment drivers: dataset splitting, system evaluation, the three
standalone experiments (type learnability, loss convergence, structure
ablation), the latency benchmark, and the end-to-end standard run.

Every driver is a pure function of (config, seed): rerunning one writes
byte-identical artifacts. Wall-clock timing appears only in latency reports
and per-epoch history files, never in evaluation artifacts.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass

import numpy as np

from ..config import Config, derive_seed
from ..contamination import (
    ContaminatedSample,
    build_dataset,
    compute_terciles,
    contaminate,
)
from ..data_io import SegmentPool, synth_surrogate_eeg, synth_surrogate_emg
from ..errors import DegenerateInputError, InsufficientDataError, InvalidInputError
from ..experts import expert_denoise_batch, standardize
from ..moe_pipeline import MoeSystem, MoeVariant, build_moe, moe_denoise, save_moe
from ..nn import TrainConfig, TrainHistory, build_model, train
from ..nn.train import rowwise_cc
from ..routing import accuracy, confusion, tier_labels, type_labels
from ..signal_core import Segment, pearson_cc, srrmse, trrmse
from .reports import (
    REFERENCE_ABLATION_TABLE,
    REFERENCE_CLASSIFIER_ACCURACY,
    REFERENCE_CONVERGENCE_SPEEDUP,
    REFERENCE_LEARNABILITY_CC,
    BinnedReport,
    LatencyReport,
    SampleRecord,
    snr_bin,
)

__all__ = [
    "split_dataset",
    "evaluate",
    "LearnabilityResult",
    "learnability_experiment",
    "ConvergenceResult",
    "convergence_experiment",
    "AblationReport",
    "ablation_run",
    "latency_bench",
    "standard_run",
    "make_surrogate_dataset",
]


def split_dataset(samples, ratio: float, seed: int):
    """Seeded shuffle then split into (train, test); disjoint and exhaustive."""
    if not 0.0 < ratio < 1.0:
        raise InvalidInputError("split ratio must be in (0, 1)")
    n = len(samples)
    if n < 2:
        raise InvalidInputError("need at least 2 samples to split")
    n_train = int(round(ratio * n))
    n_train = min(max(n_train, 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    train_part = [samples[i] for i in perm[:n_train]]
    test_part = [samples[i] for i in perm[n_train:]]
    return train_part, test_part


def _metric_record(denoised: np.ndarray, sample: ContaminatedSample,
                   true_key, pred_key) -> tuple[SampleRecord, bool]:
    clean = sample.clean.samples
    degenerate = False
    try:
        cc = pearson_cc(denoised, clean)
    except DegenerateInputError:
        cc = 0.0
        degenerate = True
    rec = SampleRecord(
        snr_db=sample.snr_db,
        bin=snr_bin(sample.snr_db),
        cc=cc,
        trrmse=trrmse(denoised, clean),
        srrmse=srrmse(denoised, clean),
        true_partition=true_key,
        predicted_partition=pred_key,
    )
    return rec, degenerate


def evaluate(system, test_set: list[ContaminatedSample],
             routing: str = "learned", config_hash: str | None = None) -> BinnedReport:
    """Per-sample metrics plus binned and overall statistics.

    ``system`` is either a built MoeSystem or any callable Segment -> signal
    (used for stub self-checks). Degenerate correlation (a constant denoised
    output) scores 0 and is counted in the report.
    """
    if not test_set:
        raise InvalidInputError("test set must be non-empty")
    records: list[SampleRecord | None] = [None] * len(test_set)
    n_degenerate = 0

    if isinstance(system, MoeSystem):
        if routing not in ("learned", "oracle"):
            raise InvalidInputError(f"unknown routing mode {routing!r}")
        from ..moe_pipeline import predict_keys

        truth = [system.variant.truth_key(s) for s in test_set]
        keys = truth if routing == "oracle" else predict_keys(system, test_set)
        by_key: dict[str, list[int]] = {}
        for i, k in enumerate(keys):
            by_key.setdefault(k, []).append(i)
        for key in sorted(by_key):
            idx = by_key[key]
            batch = np.stack([test_set[i].contaminated.samples for i in idx])
            outs = expert_denoise_batch(system.experts[key], batch)
            for row, i in enumerate(idx):
                rec, degen = _metric_record(outs[row], test_set[i], truth[i], key)
                records[i] = rec
                n_degenerate += degen
    else:
        for i, sample in enumerate(test_set):
            out = system(sample.contaminated)
            out = np.asarray(getattr(out, "samples", out), dtype=np.float64).reshape(-1)
            rec, degen = _metric_record(out, sample, None, None)
            records[i] = rec
            n_degenerate += degen
        routing = "stub"

    return BinnedReport(records=list(records), routing_mode=routing,
                        config_hash=config_hash, degenerate_cc_count=n_degenerate)


# ---------------------------------------------------------------------------
# type learnability


@dataclass(frozen=True)
class LearnabilityRow:
    emg_type: str
    n_val: int
    mean_cc: float
    ci_half: float  # 1.96 * SEM

    @property
    def ci(self) -> tuple[float, float]:
        return (self.mean_cc - self.ci_half, self.mean_cc + self.ci_half)


@dataclass
class LearnabilityResult:
    rows: list[LearnabilityRow]
    seed: int
    config_hash: str | None = None

    def render_text(self) -> str:
        lines = ["per-type denoising learnability (validation CC, 95% CI)", ""]
        for row in self.rows:
            lo, hi = row.ci
            ref_mean, ref_half = REFERENCE_LEARNABILITY_CC[row.emg_type]
            lines.append(
                f"  {row.emg_type}: {row.mean_cc:.4f} +/- {row.ci_half:.4f} "
                f"[{lo:.4f}, {hi:.4f}] (n={row.n_val})  "
                f"| full-scale reference {ref_mean:.3f} +/- {ref_half:.3f}"
            )
        return "\n".join(lines) + "\n"

    def write_json(self, path) -> None:
        payload = {
            "seed": self.seed,
            "config_hash": self.config_hash,
            "rows": [vars(r) for r in self.rows],
            "reference": REFERENCE_LEARNABILITY_CC,
        }
        with open(path, "w", newline="\n") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")


def learnability_experiment(eeg_pool: SegmentPool, emg_pool: SegmentPool,
                            config: Config, seed: int | None = None) -> LearnabilityResult:
    """Train one identical correlation CNN per type-pure partition over the
    full SNR range; report held-out mean CC with mean +/- 1.96*SEM bounds."""
    from ..contamination import assign_emg_type

    seed = config.seed if seed is None else seed
    params = config.section("learnability")
    n_per_type = int(params.get("n_samples_per_type", 600))
    epochs = int(params.get("epochs", 20))

    variances = [float(np.var(emg_pool.data[i])) for i in range(len(emg_pool))]
    thresholds = compute_terciles(variances)
    cleans = eeg_pool.segments()
    rows = []
    for type_idx, type_key in enumerate(("t1", "t2", "t3")):
        arts = [emg_pool.segment(i) for i, v in enumerate(variances)
                if assign_emg_type(v, thresholds).value == type_key]
        if not arts:
            raise InsufficientDataError(type_key)
        samples = build_dataset(cleans, arts, config.snr_range, n_per_type,
                                derive_seed(seed, "learnability", type_key),
                                thresholds=thresholds)
        train_part, val_part = split_dataset(samples, 0.9,
                                             derive_seed(seed, "learnability-split", type_key))
        model = build_model(config.architecture("denoiser_cnn"), config.input_shape,
                            seed=derive_seed(seed, "learnability-init", type_key))
        base = config.train_config("corr_expert", derive_seed(seed, "learnability-train", type_key))
        cfg = TrainConfig(epochs=epochs, learning_rate=base.learning_rate,
                          batch_size=base.batch_size, optimizer=base.optimizer,
                          loss="correlation", seed=base.seed,
                          val_fraction=base.val_fraction)
        x = standardize(np.stack([s.contaminated.samples for s in train_part]))
        t = np.stack([s.clean.samples for s in train_part])
        trained, _ = train(model, x, t, cfg)
        xv = standardize(np.stack([s.contaminated.samples for s in val_part]))
        tv = np.stack([s.clean.samples for s in val_part])
        from ..nn import predict_batched

        pred = predict_batched(trained, xv).reshape(len(val_part), -1)
        ccs = rowwise_cc(pred, tv)
        sem = float(np.std(ccs, ddof=1) / np.sqrt(ccs.size)) if ccs.size > 1 else 0.0
        rows.append(LearnabilityRow(emg_type=type_key, n_val=int(ccs.size),
                                    mean_cc=float(np.mean(ccs)), ci_half=1.96 * sem))
    return LearnabilityResult(rows=rows, seed=seed, config_hash=config.hash)


# ---------------------------------------------------------------------------
# loss convergence


@dataclass
class ConvergenceResult:
    corr_history: TrainHistory
    mse_history: TrainHistory
    cc_threshold: float
    corr_epochs: int | None  # first epoch reaching the threshold; None if capped
    mse_epochs: int | None
    seed: int
    config_hash: str | None = None

    @property
    def speedup(self) -> float:
        """Epochs-to-threshold ratio mse/corr; inf when MSE never got there."""
        if self.corr_epochs is None:
            return 0.0
        if self.mse_epochs is None:
            return float("inf")
        return self.mse_epochs / self.corr_epochs

    def render_text(self) -> str:
        def fmt(e):
            return "capped" if e is None else str(e)

        return (
            f"convergence to val CC >= {self.cc_threshold}: "
            f"correlation loss {fmt(self.corr_epochs)} epochs, "
            f"mse loss {fmt(self.mse_epochs)} epochs, "
            f"speedup {self.speedup if self.speedup != float('inf') else 'inf'}\n"
            f"full-scale reference speedup: >{REFERENCE_CONVERGENCE_SPEEDUP:.0f}x\n"
        )

    def write_json(self, path) -> None:
        payload = {
            "seed": self.seed,
            "config_hash": self.config_hash,
            "cc_threshold": self.cc_threshold,
            "corr_epochs": self.corr_epochs,
            "mse_epochs": self.mse_epochs,
            "speedup": None if self.speedup == float("inf") else self.speedup,
            "capped": self.corr_epochs is None or self.mse_epochs is None,
            "corr_val_cc": self.corr_history.val_cc,
            "mse_val_cc": self.mse_history.val_cc,
        }
        with open(path, "w", newline="\n") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")


def make_toy_denoise_task(config: Config, seed: int):
    """The frozen toy task: surrogate EEG contaminated at one fixed SNR."""
    toy = config.section("toy_task")
    n = int(toy.get("n_samples", 300))
    snr_db = float(toy.get("snr_db", -3.0))
    length = config.segment_length
    eeg = synth_surrogate_eeg(n, length, derive_seed(seed, "toy", "eeg"))
    emg = synth_surrogate_emg(n, length, derive_seed(seed, "toy", "emg"))
    thresholds = compute_terciles([float(np.var(emg.data[i])) for i in range(n)])
    samples = [contaminate(eeg.segment(i), emg.segment(i), snr_db, thresholds)
               for i in range(n)]
    x = standardize(np.stack([s.contaminated.samples for s in samples]))
    t = np.stack([s.clean.samples for s in samples])
    return x, t


def _epochs_to(history: TrainHistory, threshold: float) -> int | None:
    for i, cc in enumerate(history.val_cc):
        if cc >= threshold:
            return i + 1
    return None


def convergence_experiment(config: Config, seed: int | None = None) -> ConvergenceResult:
    """Identical architectures and seeds, losses differ; measures
    epochs-to-threshold on the frozen toy task."""
    seed = config.seed if seed is None else seed
    toy = config.section("toy_task")
    threshold = float(toy.get("cc_threshold", 0.8))
    epochs_cap = int(toy.get("epochs_cap", 60))
    x, t = make_toy_denoise_task(config, seed)
    model = build_model(config.architecture("denoiser_cnn"), config.input_shape,
                        seed=derive_seed(seed, "toy", "init"))
    base = dict(
        epochs=epochs_cap,
        learning_rate=float(toy.get("learning_rate", 1e-3)),
        batch_size=int(toy.get("batch_size", 128)),
        seed=derive_seed(seed, "toy", "train"),
        val_fraction=0.1,
    )
    _, corr_hist = train(model, x, t, TrainConfig(loss="correlation", **base))
    _, mse_hist = train(model, x, t, TrainConfig(loss="mse", **base))
    return ConvergenceResult(
        corr_history=corr_hist,
        mse_history=mse_hist,
        cc_threshold=threshold,
        corr_epochs=_epochs_to(corr_hist, threshold),
        mse_epochs=_epochs_to(mse_hist, threshold),
        seed=seed,
        config_hash=config.hash,
    )


# ---------------------------------------------------------------------------
# structure ablation


@dataclass
class AblationReport:
    rows: dict[str, dict]  # variant value -> metrics
    seed: int
    config_hash: str | None = None

    def render_text(self) -> str:
        lines = [
            "MoE structure ablation (desk scale; C-T-S = cc, trrmse, srrmse)",
            "",
            f"{'variant':<10} {'experts':>7} {'high-noise C-T-S':>24} {'overall C-T-S':>24}",
        ]

        def triple(d):
            if d is None:
                return "      -      "
            return f"{d['cc']:.2f}-{d['trrmse']:.2f}-{d['srrmse']:.2f}"

        for variant, row in self.rows.items():
            lines.append(
                f"{variant:<10} {row['n_experts']:>7} {triple(row['high_noise']):>24} "
                f"{triple(row['overall']):>24}"
            )
        lines += ["", "full-scale reference table:"]
        for key, ref in REFERENCE_ABLATION_TABLE.items():
            h, o = ref.high_noise, ref.overall
            lines.append(
                f"  {ref.model:<36} {h[0]:.2f}-{h[1]:.2f}-{h[2]:.2f}   "
                f"{o[0]:.2f}-{o[1]:.2f}-{o[2]:.2f}"
            )
        return "\n".join(lines) + "\n"

    def write_json(self, path) -> None:
        payload = {
            "seed": self.seed,
            "config_hash": self.config_hash,
            "rows": self.rows,
            "reference": {k: {"model": r.model, "high_noise": list(r.high_noise),
                              "overall": list(r.overall)}
                          for k, r in REFERENCE_ABLATION_TABLE.items()},
        }
        with open(path, "w", newline="\n") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")


def ablation_run(train_split, test_split, config: Config,
                 seed: int | None = None) -> AblationReport:
    """Build all four variants on identical splits and evaluate each."""
    seed = config.seed if seed is None else seed
    rows = {}
    for variant in MoeVariant:
        system = build_moe(variant, train_split, config, seed=seed)
        report = evaluate(system, test_split, routing="learned", config_hash=config.hash)
        high = report.per_bin[-7]["cc"]
        high_noise = None
        if high.count > 0:
            high_noise = {m: report.per_bin[-7][m].mean for m in ("cc", "trrmse", "srrmse")}
        rows[variant.value] = {
            "n_experts": len(system.experts),
            "high_noise": high_noise,
            "overall": {m: report.overall[m].mean for m in ("cc", "trrmse", "srrmse")},
        }
    return AblationReport(rows=rows, seed=seed, config_hash=config.hash)


# ---------------------------------------------------------------------------
# latency


def latency_bench(system: MoeSystem, trials: int, seed: int) -> LatencyReport:
    """Wall-clock per end-to-end denoise call on random inputs,
    single-threaded."""
    if trials < 1:
        raise InvalidInputError("need at least one trial")
    rng = np.random.default_rng(seed)
    length = system.segment_length
    times = []
    for _ in range(trials):
        seg = Segment(rng.standard_normal(length))
        tic = time.perf_counter()
        moe_denoise(system, seg)
        times.append(time.perf_counter() - tic)
    return LatencyReport.from_samples(times)


# ---------------------------------------------------------------------------
# standard run


def make_surrogate_dataset(config: Config, seed: int | None = None):
    """Pools + contaminated dataset + 9:1 split, all from one seed."""
    seed = config.seed if seed is None else seed
    n_eeg, n_emg = config.pool_sizes
    length = config.segment_length
    eeg = synth_surrogate_eeg(n_eeg, length, derive_seed(seed, "pool", "eeg"),
                              sample_rate_hz=config.sample_rate_hz)
    emg = synth_surrogate_emg(n_emg, length, derive_seed(seed, "pool", "emg"),
                              sample_rate_hz=config.sample_rate_hz)
    samples = build_dataset(eeg.segments(), emg.segments(), config.snr_range,
                            config.n_samples, derive_seed(seed, "dataset"))
    train_part, test_part = split_dataset(samples, config.split_ratio,
                                          derive_seed(seed, "split"))
    return eeg, emg, train_part, test_part


def standard_run(config: Config, out_dir, seed: int | None = None) -> dict:
    """The end-to-end desk-scale run: surrogate data, a full 7-partition
    system, learned- and oracle-routing evaluations, and router diagnostics.

    Returns a summary dict (also written to ``run.json``); all written
    artifacts are deterministic in (config, seed).
    """
    seed = config.seed if seed is None else seed
    os.makedirs(out_dir, exist_ok=True)
    _, _, train_part, test_part = make_surrogate_dataset(config, seed)
    system = build_moe(MoeVariant.FULL7, train_part, config, seed=seed)
    from ..moe_pipeline import system_checksum

    moe_path = save_moe(system, os.path.join(out_dir, "moe"))

    learned = evaluate(system, test_part, routing="learned", config_hash=config.hash)
    oracle = evaluate(system, test_part, routing="oracle", config_hash=config.hash)
    learned.write_json(os.path.join(out_dir, "eval_learned.json"))
    learned.write_records_csv(os.path.join(out_dir, "eval_learned_records.csv"))
    learned.write_bins_csv(os.path.join(out_dir, "eval_learned_bins.csv"))
    oracle.write_json(os.path.join(out_dir, "eval_oracle.json"))
    oracle.write_bins_csv(os.path.join(out_dir, "eval_oracle_bins.csv"))
    with open(os.path.join(out_dir, "eval_learned.txt"), "w", newline="\n") as fh:
        fh.write(learned.render_text())

    type_acc = accuracy(system.type_classifier, test_part, type_labels(test_part))
    snr_acc = accuracy(system.snr_classifier, test_part, tier_labels(test_part))
    type_conf = confusion(system.type_classifier, test_part, type_labels(test_part))
    snr_conf = confusion(system.snr_classifier, test_part, tier_labels(test_part))
    for name, mat in (("type", type_conf), ("snr", snr_conf)):
        with open(os.path.join(out_dir, f"confusion_{name}.csv"), "w", newline="\n") as fh:
            for row in mat:
                fh.write(",".join(str(int(v)) for v in row) + "\n")
    router_report = {
        "type_accuracy": type_acc,
        "snr_accuracy": snr_acc,
        "reference_accuracy": REFERENCE_CLASSIFIER_ACCURACY,
        "n_test": len(test_part),
    }
    with open(os.path.join(out_dir, "router_report.json"), "w", newline="\n") as fh:
        json.dump(router_report, fh, sort_keys=True, indent=2)
        fh.write("\n")

    summary = {
        "config_hash": config.hash,
        "seed": seed,
        "n_train": len(train_part),
        "n_test": len(test_part),
        "system_checksum": system_checksum(system),
        "moe_manifest": os.path.basename(moe_path),
        "learned_mean_cc": learned.mean("cc"),
        "oracle_mean_cc": oracle.mean("cc"),
        "learned_mean_trrmse": learned.mean("trrmse"),
        "oracle_mean_trrmse": oracle.mean("trrmse"),
        "type_accuracy": type_acc,
        "snr_accuracy": snr_acc,
        "misrouted_fraction": learned.misrouted_fraction(),
    }
    with open(os.path.join(out_dir, "run.json"), "w", newline="\n") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return summary
