"""Run configuration: one JSON document holding every tunable.

The desk-scale defaults (including the frozen reference architectures) ship
with the package as ``configs/desk.json``. A config's canonical hash is
stamped into every artifact so reports and checkpoints can be traced back to
the exact settings that produced them.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources

from .errors import InvalidInputError
from .nn import AdamSpec, LayerSpec, SgdSpec, TrainConfig, layer_from_dict

__all__ = ["Config", "load_config", "default_config", "derive_seed"]

TRAIN_ROLES = ("corr_expert", "rescale_expert", "mse_expert", "classifier")


def _canonical(raw: dict) -> str:
    return json.dumps(raw, sort_keys=True, separators=(",", ":"))


def derive_seed(base: int, *tokens) -> int:
    """Stable per-role seed; independent of construction order."""
    text = ":".join([str(base), *map(str, tokens)])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:4], "big")


@dataclass(frozen=True)
class Config:
    raw: dict

    @property
    def hash(self) -> str:
        return hashlib.sha256(_canonical(self.raw).encode()).hexdigest()[:16]

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def segment_length(self) -> int:
        return int(self.raw["segment"]["length"])

    @property
    def sample_rate_hz(self) -> float:
        return float(self.raw["segment"]["sample_rate_hz"])

    @property
    def input_shape(self) -> tuple[int, int]:
        return (self.segment_length, 1)

    @property
    def pool_sizes(self) -> tuple[int, int]:
        return int(self.raw["pools"]["n_eeg"]), int(self.raw["pools"]["n_emg"])

    @property
    def n_samples(self) -> int:
        return int(self.raw["dataset"]["n_samples"])

    @property
    def snr_range(self) -> tuple[float, float]:
        lo, hi = self.raw["dataset"]["snr_range"]
        return float(lo), float(hi)

    @property
    def split_ratio(self) -> float:
        return float(self.raw["dataset"]["split_ratio"])

    @property
    def latency_trials(self) -> int:
        return int(self.raw.get("latency_trials", 1000))

    def architecture(self, name: str) -> tuple[LayerSpec, ...]:
        archs = self.raw["architectures"]
        if name not in archs:
            raise InvalidInputError(f"config has no architecture {name!r}")
        return tuple(layer_from_dict(d) for d in archs[name])

    def train_config(self, role: str, seed: int) -> TrainConfig:
        if role not in self.raw["training"]:
            raise InvalidInputError(f"config has no training role {role!r}")
        entry = dict(self.raw["training"][role])
        opt_raw = entry.pop("optimizer", {"kind": "adam"})
        kind = opt_raw.get("kind", "adam")
        if kind == "adam":
            optimizer = AdamSpec(
                beta1=float(opt_raw.get("beta1", 0.9)),
                beta2=float(opt_raw.get("beta2", 0.999)),
                eps=float(opt_raw.get("eps", 1e-8)),
            )
        elif kind == "sgd":
            optimizer = SgdSpec()
        else:
            raise InvalidInputError(f"unknown optimizer kind {kind!r}")
        return TrainConfig(
            epochs=int(entry["epochs"]),
            learning_rate=float(entry["learning_rate"]),
            batch_size=int(entry.get("batch_size", 128)),
            optimizer=optimizer,
            loss=entry["loss"],
            seed=seed,
            val_fraction=float(entry.get("val_fraction", 0.1)),
        )

    def section(self, name: str) -> dict:
        return dict(self.raw.get(name, {}))


def load_config(path) -> Config:
    with open(path) as fh:
        raw = json.load(fh)
    for key in ("seed", "segment", "pools", "dataset", "architectures", "training"):
        if key not in raw:
            raise InvalidInputError(f"config missing section {key!r}")
    return Config(raw=raw)


def default_config() -> Config:
    text = resources.files("moedenoise").joinpath("configs/desk.json").read_text()
    return Config(raw=json.loads(text))
