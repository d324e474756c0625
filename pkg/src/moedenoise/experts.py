"""Local denoising experts and the affine rescaling reconstruction.

Two species:

* CorrPlusRescale — a correlation-trained denoiser whose (correlated but
  out-of-scale) output is affinely remapped onto the mean/std of a
  scale-aware companion prediction, trained with MSE on the same partition.
  The affine map cannot change the Pearson correlation, so the remap buys
  back scale without costing correlation.
* MseOnly — a single MSE-trained recurrent model, used where correlation
  training is known to underperform (the low-noise tier).

Network inputs are standardized per segment (zero mean, unit variance with
an epsilon floor); targets are clean segments in their original units.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .contamination import ContaminatedSample
from .errors import DegenerateRescaleWarning, InvalidInputError, InvalidStateError, ShapeError
from .nn import Model, TrainConfig, TrainHistory, forward, predict_batched, train
from .signal_core import Segment

__all__ = [
    "InputNormalization",
    "DenoisingExpert",
    "STD_EPS",
    "standardize",
    "rescale_output",
    "train_corr_expert",
    "train_mse_expert",
    "expert_denoise",
]

STD_EPS = 1e-8


@dataclass(frozen=True)
class InputNormalization:
    """Per-segment standardization statistics captured at inference."""

    mean: float
    std: float

    @classmethod
    def capture(cls, samples: np.ndarray) -> "InputNormalization":
        return cls(mean=float(np.mean(samples)),
                   std=max(float(np.std(samples)), STD_EPS))

    def apply(self, samples: np.ndarray) -> np.ndarray:
        return (samples - self.mean) / self.std


def standardize(batch: np.ndarray) -> np.ndarray:
    """Standardize each row of a (N, L) matrix (or a single 1-D segment)."""
    arr = np.asarray(batch, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None]
    mean = arr.mean(axis=1, keepdims=True)
    std = np.maximum(arr.std(axis=1, keepdims=True), STD_EPS)
    out = (arr - mean) / std
    return out[0] if single else out


def rescale_output(corr_out, reference, eps: float = STD_EPS) -> np.ndarray:
    """Affine-map corr_out onto the mean and std of reference.

    A near-constant corr_out carries no usable waveform, so the reference
    prediction (the only scale-bearing signal available) is returned instead
    and a DegenerateRescaleWarning is emitted.
    """
    c = np.asarray(getattr(corr_out, "samples", corr_out), dtype=np.float64).reshape(-1)
    r = np.asarray(getattr(reference, "samples", reference), dtype=np.float64).reshape(-1)
    if c.size != r.size:
        raise InvalidInputError(f"length mismatch: {c.size} vs {r.size}")
    c_std = float(np.std(c))
    if c_std <= eps:
        warnings.warn("near-constant correlation output; falling back to the "
                      "reference prediction", DegenerateRescaleWarning)
        return r.copy()
    return (c - np.mean(c)) / c_std * np.std(r) + np.mean(r)


@dataclass
class DenoisingExpert:
    """One trained local expert. ``invocations`` counts denoise calls and
    exists so the pipeline can audit single-expert execution."""

    partition: str
    corr_model: Model | None = None
    rescale_model: Model | None = None
    mse_model: Model | None = None
    invocations: int = 0

    @property
    def kind(self) -> str:
        return "mse" if self.mse_model is not None else "corr_rescale"

    def models(self) -> dict[str, Model]:
        out = {}
        if self.corr_model is not None:
            out["corr"] = self.corr_model
        if self.rescale_model is not None:
            out["rescale"] = self.rescale_model
        if self.mse_model is not None:
            out["mse"] = self.mse_model
        return out


def _partition_arrays(samples: list[ContaminatedSample]) -> tuple[np.ndarray, np.ndarray]:
    if not samples:
        raise InvalidInputError("partition data must be non-empty")
    x = standardize(np.stack([s.contaminated.samples for s in samples]))
    t = np.stack([s.clean.samples for s in samples])
    return x, t


def train_corr_expert(
    partition_data: list[ContaminatedSample],
    corr_model: Model,
    rescale_model: Model,
    corr_config: TrainConfig,
    rescale_config: TrainConfig,
) -> tuple[Model, Model, tuple[TrainHistory, TrainHistory]]:
    """Train the correlation denoiser and its MSE rescaling companion on the
    same partition; the two trainings share data but no state."""
    if corr_config.loss != "correlation" or rescale_config.loss != "mse":
        raise InvalidInputError("corr expert wants correlation + mse losses")
    x, t = _partition_arrays(partition_data)
    corr_trained, corr_hist = train(corr_model, x, t, corr_config)
    rescale_trained, rescale_hist = train(rescale_model, x, t, rescale_config)
    return corr_trained, rescale_trained, (corr_hist, rescale_hist)


def train_mse_expert(
    partition_data: list[ContaminatedSample],
    model: Model,
    config: TrainConfig,
) -> tuple[Model, TrainHistory]:
    """Train the standalone MSE recurrent expert."""
    if config.loss != "mse":
        raise InvalidInputError("mse expert wants the mse loss")
    x, t = _partition_arrays(partition_data)
    return train(model, x, t, config)


def _predict(model: Model, x: np.ndarray) -> np.ndarray:
    try:
        return np.asarray(forward(model, x), dtype=np.float64).reshape(-1)
    except ShapeError as exc:
        raise InvalidStateError(str(exc)) from exc


def expert_denoise(expert: DenoisingExpert, contaminated) -> Segment:
    """Run one segment through the expert; output is length-L in signal units."""
    seg = contaminated if isinstance(contaminated, Segment) else Segment(np.asarray(contaminated, dtype=np.float64))
    x = standardize(seg.samples)
    expert.invocations += 1
    if expert.kind == "corr_rescale":
        if expert.corr_model is None or expert.rescale_model is None:
            raise InvalidStateError(f"expert {expert.partition!r} is missing models")
        c = _predict(expert.corr_model, x)
        r = _predict(expert.rescale_model, x)
        out = rescale_output(c, r)
    else:
        if expert.mse_model is None:
            raise InvalidStateError(f"expert {expert.partition!r} is missing models")
        out = _predict(expert.mse_model, x)
    if out.size != len(seg):
        raise InvalidStateError(
            f"expert {expert.partition!r} produced length {out.size}, wanted {len(seg)}")
    return Segment(out, sample_rate_hz=seg.sample_rate_hz)


def expert_denoise_batch(expert: DenoisingExpert, contaminated: np.ndarray) -> np.ndarray:
    """Vectorized denoise of a (N, L) matrix; one 'invocation' per row."""
    x = standardize(contaminated)
    expert.invocations += x.shape[0]
    if expert.kind == "corr_rescale":
        c = predict_batched(expert.corr_model, x).reshape(x.shape[0], -1)
        r = predict_batched(expert.rescale_model, x).reshape(x.shape[0], -1)
        c_std = np.std(c, axis=1, keepdims=True)
        degenerate = c_std[:, 0] <= STD_EPS
        safe = np.maximum(c_std, STD_EPS)
        out = (c - c.mean(axis=1, keepdims=True)) / safe \
            * np.std(r, axis=1, keepdims=True) + r.mean(axis=1, keepdims=True)
        if np.any(degenerate):
            warnings.warn("near-constant correlation output; falling back to "
                          "the reference prediction", DegenerateRescaleWarning)
            out[degenerate] = r[degenerate]
        return out
    return predict_batched(expert.mse_model, x).reshape(x.shape[0], -1)
