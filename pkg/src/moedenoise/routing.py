"""Routing classifiers and the deterministic two-stage partition map.

Two 3-way CNN classifiers operate in parallel on the standardized
contaminated segment: one infers the EMG artifact type, the other the SNR
tier. Routing is hard argmax composition — a High-tier prediction wins
outright (one partition serves the whole tier), otherwise the (tier, type)
pair selects one of the six specialized partitions. Ties break toward the
lower-index class, which is what argmax does.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .contamination import ContaminatedSample, EmgType, SnrTier
from .errors import InvalidInputError, InvalidStateError
from .experts import standardize
from .nn import Model, TrainConfig, TrainHistory, forward, predict_batched, train
from .signal_core import Segment

__all__ = [
    "PartitionId",
    "RouterBundle",
    "TIER_ORDER",
    "TYPE_ORDER",
    "partition_for",
    "train_type_classifier",
    "train_snr_classifier",
    "classify",
    "route",
    "confusion",
    "accuracy",
]

TIER_ORDER: tuple[SnrTier, ...] = (SnrTier.LOW, SnrTier.MID, SnrTier.HIGH)
TYPE_ORDER: tuple[EmgType, ...] = (EmgType.T1, EmgType.T2, EmgType.T3)


class PartitionId(enum.Enum):
    """The seven expert slots: {Low,Mid} x {T1,T2,T3} plus the High singleton."""

    LOW_T1 = "low_t1"
    LOW_T2 = "low_t2"
    LOW_T3 = "low_t3"
    MID_T1 = "mid_t1"
    MID_T2 = "mid_t2"
    MID_T3 = "mid_t3"
    HIGH_ALL = "high_all"

    @property
    def key(self) -> str:
        return self.value


def partition_for(tier: SnrTier, emg_type: EmgType) -> PartitionId:
    """Total 9-to-7 collapse: every High-tier pair maps to HIGH_ALL."""
    if tier is SnrTier.HIGH:
        return PartitionId.HIGH_ALL
    return PartitionId(f"{tier.value}_{emg_type.value}")


@dataclass
class RouterBundle:
    """The two frozen 3-way classifiers. Freezing is a contract: expert
    training never touches these parameters."""

    type_classifier: Model
    snr_classifier: Model
    frozen: bool = True


def _classifier_dataset(
    samples: list[ContaminatedSample], labels: np.ndarray, n_classes: int = 3
) -> tuple[np.ndarray, np.ndarray]:
    if not samples:
        raise InvalidInputError("classifier dataset must be non-empty")
    present = set(int(v) for v in labels)
    if present != set(range(n_classes)):
        missing = sorted(set(range(n_classes)) - present)
        raise InvalidInputError(f"training data is missing class(es) {missing}")
    x = standardize(np.stack([s.contaminated.samples for s in samples]))
    return x, labels


def type_labels(samples: list[ContaminatedSample]) -> np.ndarray:
    return np.array([TYPE_ORDER.index(s.emg_type) for s in samples], dtype=np.int64)


def tier_labels(samples: list[ContaminatedSample]) -> np.ndarray:
    return np.array([TIER_ORDER.index(s.snr_tier) for s in samples], dtype=np.int64)


def train_type_classifier(
    samples: list[ContaminatedSample], model: Model, config: TrainConfig
) -> tuple[Model, TrainHistory]:
    """3-way EMG-type classifier on standardized contaminated input."""
    if config.loss != "cross_entropy":
        raise InvalidInputError("classifiers train with cross_entropy")
    x, y = _classifier_dataset(samples, type_labels(samples))
    return train(model, x, y, config)


def train_snr_classifier(
    samples: list[ContaminatedSample], model: Model, config: TrainConfig
) -> tuple[Model, TrainHistory]:
    """3-way SNR-tier classifier on standardized contaminated input."""
    if config.loss != "cross_entropy":
        raise InvalidInputError("classifiers train with cross_entropy")
    x, y = _classifier_dataset(samples, tier_labels(samples))
    return train(model, x, y, config)


def classify(model: Model, segment) -> np.ndarray:
    """Probability vector for one segment."""
    samples = np.asarray(getattr(segment, "samples", segment), dtype=np.float64)
    return np.asarray(forward(model, standardize(samples)), dtype=np.float64)


def route(bundle: RouterBundle, contaminated) -> PartitionId:
    """Two-stage hard routing of one segment to its partition."""
    if not bundle.frozen:
        raise InvalidStateError("router must be frozen before routing")
    snr_idx = int(np.argmax(classify(bundle.snr_classifier, contaminated)))
    tier = TIER_ORDER[snr_idx]
    if tier is SnrTier.HIGH:
        return PartitionId.HIGH_ALL
    type_idx = int(np.argmax(classify(bundle.type_classifier, contaminated)))
    return partition_for(tier, TYPE_ORDER[type_idx])


def predict_classes(model: Model, samples: list[ContaminatedSample]) -> np.ndarray:
    """Argmax class per sample, batched."""
    x = standardize(np.stack([s.contaminated.samples for s in samples]))
    probs = predict_batched(model, x)
    return np.argmax(probs, axis=-1)


def confusion(
    model: Model, samples: list[ContaminatedSample], truth: np.ndarray
) -> np.ndarray:
    """3x3 count matrix, rows = truth, columns = argmax prediction."""
    pred = predict_classes(model, samples)
    mat = np.zeros((3, 3), dtype=np.int64)
    for t, p in zip(truth, pred):
        mat[int(t), int(p)] += 1
    return mat


def accuracy(model: Model, samples: list[ContaminatedSample], truth: np.ndarray) -> float:
    pred = predict_classes(model, samples)
    return float(np.mean(pred == np.asarray(truth)))


def segment_of(sample: ContaminatedSample) -> Segment:
    return sample.contaminated
