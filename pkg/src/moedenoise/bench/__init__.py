"""Benchmark harness: experiment drivers, reports, and reference constants."""

from .harness import (
    AblationReport,
    ConvergenceResult,
    LearnabilityResult,
    ablation_run,
    convergence_experiment,
    evaluate,
    latency_bench,
    learnability_experiment,
    make_surrogate_dataset,
    split_dataset,
    standard_run,
)
from .reports import (
    REFERENCE_ABLATION_TABLE,
    REFERENCE_CLASSIFIER_ACCURACY,
    REFERENCE_CONVERGENCE_SPEEDUP,
    REFERENCE_LATENCY,
    REFERENCE_LEARNABILITY_CC,
    REFERENCE_OVERALL_METRICS,
    REFERENCE_SOTA_TABLE,
    SNR_BINS,
    BinnedReport,
    BinStats,
    LatencyReport,
    ReferenceRow,
    SampleRecord,
    snr_bin,
)

__all__ = [
    "split_dataset", "evaluate", "learnability_experiment",
    "convergence_experiment", "ablation_run", "latency_bench", "standard_run",
    "make_surrogate_dataset",
    "AblationReport", "ConvergenceResult", "LearnabilityResult",
    "BinnedReport", "BinStats", "LatencyReport", "SampleRecord",
    "ReferenceRow", "snr_bin", "SNR_BINS",
    "REFERENCE_SOTA_TABLE", "REFERENCE_ABLATION_TABLE",
    "REFERENCE_OVERALL_METRICS", "REFERENCE_CLASSIFIER_ACCURACY",
    "REFERENCE_LEARNABILITY_CC", "REFERENCE_LATENCY",
    "REFERENCE_CONVERGENCE_SPEEDUP",
]
