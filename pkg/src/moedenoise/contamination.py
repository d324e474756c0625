"""Semi-synthetic contamination: mix clean EEG with EMG artifacts at exact
target SNRs and attach ground-truth partition labels.

A contaminated sample is ``y = x + lambda * n`` where ``lambda`` is solved in
closed form from the target SNR (10*log10 RMS-ratio convention, see
signal_core). Labels:

* EMG type = tercile of the artifact's variance *before* lambda-scaling.
  Post-scaling variance is meaningless as a label because every artifact is
  rescaled to hit its target SNR; the recording-time value is ground-truth
  metadata only.
* SNR tier = Low [-7,-4), Mid [-4,-1), High [-1,2]. The written ranges share
  endpoints, so the left tiers are half-open and +2 dB is closed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateInputError, InvalidInputError, OutOfRangeError
from .signal_core import Segment, measured_snr_db, rms

__all__ = [
    "EmgType",
    "SnrTier",
    "TercileThresholds",
    "ContaminatedSample",
    "SNR_RANGE_DB",
    "compute_terciles",
    "assign_emg_type",
    "assign_snr_tier",
    "solve_lambda",
    "contaminate",
    "build_dataset",
    "validate_sample",
]

SNR_RANGE_DB = (-7.0, 2.0)


class EmgType(enum.Enum):
    T1 = "t1"  # lowest variance tercile at recording
    T2 = "t2"
    T3 = "t3"  # highest variance tercile at recording


class SnrTier(enum.Enum):
    LOW = "low"
    MID = "mid"
    HIGH = "high"


@dataclass(frozen=True)
class TercileThresholds:
    """Variance cut points estimated from a training EMG pool.

    Bins are closed above: variance <= t1_upper is T1, <= t2_upper is T2,
    anything larger is T3. For an all-equal pool both thresholds coincide
    and everything lands in T1.
    """

    t1_upper: float
    t2_upper: float

    def __post_init__(self):
        if not (np.isfinite(self.t1_upper) and np.isfinite(self.t2_upper)):
            raise InvalidInputError("tercile thresholds must be finite")
        if self.t1_upper > self.t2_upper:
            raise InvalidInputError("t1_upper must not exceed t2_upper")


@dataclass(frozen=True)
class ContaminatedSample:
    """One mixed segment with its ground truth and partition labels."""

    contaminated: Segment
    clean: Segment
    artifact: Segment  # pre-scaling
    lam: float
    snr_db: float
    emg_type: EmgType
    snr_tier: SnrTier


def compute_terciles(variances: Sequence[float]) -> TercileThresholds:
    """Cut points at the 1/3 and 2/3 empirical quantiles of a variance pool.

    Uses order statistics directly (threshold = ceil(k*n/3)-th smallest) so
    the three closed-above bins differ in size by at most one on the pool
    itself.
    """
    arr = np.asarray(variances, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 3:
        raise InvalidInputError("need at least 3 variance values")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidInputError("variances must be finite and nonnegative")
    srt = np.sort(arr)
    n = arr.size
    i1 = int(np.ceil(n / 3)) - 1
    i2 = int(np.ceil(2 * n / 3)) - 1
    return TercileThresholds(t1_upper=float(srt[i1]), t2_upper=float(srt[i2]))


def assign_emg_type(variance: float, thresholds: TercileThresholds) -> EmgType:
    """Tercile bin of a recording-time variance; bins closed above."""
    if not np.isfinite(variance):
        raise InvalidInputError(f"variance must be finite, got {variance}")
    if variance <= thresholds.t1_upper:
        return EmgType.T1
    if variance <= thresholds.t2_upper:
        return EmgType.T2
    return EmgType.T3


def assign_snr_tier(snr_db: float) -> SnrTier:
    """Tier of an SNR value inside the [-7, 2] dB working range."""
    lo, hi = SNR_RANGE_DB
    if not (lo <= snr_db <= hi):
        raise OutOfRangeError(f"snr {snr_db} dB outside [{lo}, {hi}]")
    if snr_db < -4.0:
        return SnrTier.LOW
    if snr_db < -1.0:
        return SnrTier.MID
    return SnrTier.HIGH


def solve_lambda(clean, artifact, target_snr_db: float) -> float:
    """Mixing coefficient that makes measured_snr_db hit the target exactly.

    lambda = (rms(clean) / rms(artifact)) * 10**(-target/10).
    """
    rc = rms(clean)
    ra = rms(artifact)
    if rc == 0.0 or ra == 0.0:
        raise DegenerateInputError("cannot solve lambda for a zero-rms input")
    return float((rc / ra) * 10.0 ** (-target_snr_db / 10.0))


def contaminate(
    clean: Segment,
    artifact: Segment,
    target_snr_db: float,
    thresholds: TercileThresholds,
) -> ContaminatedSample:
    """Mix one clean/artifact pair at the target SNR and label it."""
    if len(clean) != len(artifact):
        raise InvalidInputError(
            f"length mismatch: clean {len(clean)} vs artifact {len(artifact)}"
        )
    tier = assign_snr_tier(target_snr_db)
    lam = solve_lambda(clean, artifact, target_snr_db)
    mixed = Segment(
        clean.samples + lam * artifact.samples, sample_rate_hz=clean.sample_rate_hz
    )
    emg_type = assign_emg_type(float(np.var(artifact.samples)), thresholds)
    return ContaminatedSample(
        contaminated=mixed,
        clean=clean,
        artifact=artifact,
        lam=lam,
        snr_db=target_snr_db,
        emg_type=emg_type,
        snr_tier=tier,
    )


def build_dataset(
    cleans: Sequence[Segment],
    artifacts: Sequence[Segment],
    snr_range: tuple[float, float],
    n: int,
    seed: int,
    thresholds: TercileThresholds | None = None,
) -> list[ContaminatedSample]:
    """Draw n contaminated samples with a seeded generator.

    Clean and artifact indices are uniform over their pools, target SNRs
    uniform over [lo, hi]. Tercile thresholds are computed once from the
    artifact pool and reused for every sample; pass ``thresholds`` explicitly
    to label against a different (e.g. wider) pool.
    """
    if len(cleans) == 0 or len(artifacts) == 0:
        raise InvalidInputError("clean and artifact pools must be non-empty")
    lo, hi = float(snr_range[0]), float(snr_range[1])
    if not (SNR_RANGE_DB[0] <= lo <= hi <= SNR_RANGE_DB[1]):
        raise OutOfRangeError(f"snr range [{lo}, {hi}] outside {SNR_RANGE_DB}")
    if n < 0:
        raise InvalidInputError("sample count must be nonnegative")
    if thresholds is None:
        thresholds = compute_terciles([float(np.var(a.samples)) for a in artifacts])
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        ci = int(rng.integers(0, len(cleans)))
        ai = int(rng.integers(0, len(artifacts)))
        target = float(rng.uniform(lo, hi))
        out.append(contaminate(cleans[ci], artifacts[ai], target, thresholds))
    return out


def validate_sample(sample: ContaminatedSample, snr_tol_db: float = 1e-6) -> None:
    """Check every ContaminatedSample invariant; raises on violation."""
    y = sample.contaminated.samples
    recon = sample.clean.samples + sample.lam * sample.artifact.samples
    if not np.allclose(y, recon, rtol=0.0, atol=1e-12):
        raise InvalidInputError("contaminated != clean + lambda * artifact")
    got = measured_snr_db(sample.clean, sample.lam * sample.artifact.samples)
    if abs(got - sample.snr_db) > snr_tol_db:
        raise InvalidInputError(
            f"measured snr {got} dB differs from declared {sample.snr_db} dB"
        )
    if assign_snr_tier(sample.snr_db) is not sample.snr_tier:
        raise InvalidInputError("snr tier inconsistent with snr_db")
