"""Assembly of routers and experts into a mixture-of-experts denoiser.

Four variants cover the ablation grid: type-only routing (3 partitions),
tier-only (3), the full tier x type product (9), and the product with the
High tier collapsed to a single partition (7, the headline system). Experts
are trained on ground-truth partitions; the router is trained first and
frozen, and exactly one expert runs per denoise call — there is no averaging
across experts.

High-tier partitions get the MseOnly expert species in every variant that
has them; the motivation (correlation training underperforms at low noise)
is a property of the tier, not of the variant.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .config import Config, derive_seed
from .contamination import ContaminatedSample, EmgType, SnrTier
from .errors import FormatError, InsufficientDataError, InvalidInputError
from .experts import (
    DenoisingExpert,
    expert_denoise,
    train_corr_expert,
    train_mse_expert,
)
from .nn import Model, build_model, load_model, predict_batched, save_model
from .experts import standardize
from .routing import (
    TIER_ORDER,
    TYPE_ORDER,
    PartitionId,
    RouterBundle,
    classify,
    partition_for,
    route,
    train_snr_classifier,
    train_type_classifier,
)
from .signal_core import Segment

__all__ = [
    "MoeVariant",
    "MoeSystem",
    "build_moe",
    "moe_denoise",
    "moe_denoise_with_key",
    "predict_keys",
    "system_checksum",
    "save_moe",
    "load_moe",
]

_TIER_KEYS = tuple(t.value for t in TIER_ORDER)
_TYPE_KEYS = tuple(t.value for t in TYPE_ORDER)


class MoeVariant(enum.Enum):
    EMG_ONLY3 = "emg3"
    SNR_ONLY3 = "snr3"
    FULL9 = "full9"
    FULL7 = "full7"

    @property
    def partition_keys(self) -> tuple[str, ...]:
        if self is MoeVariant.EMG_ONLY3:
            return _TYPE_KEYS
        if self is MoeVariant.SNR_ONLY3:
            return _TIER_KEYS
        if self is MoeVariant.FULL9:
            return tuple(f"{tier}_{typ}" for tier in _TIER_KEYS for typ in _TYPE_KEYS)
        return tuple(p.key for p in PartitionId)

    @property
    def uses_type_router(self) -> bool:
        return self is not MoeVariant.SNR_ONLY3

    @property
    def uses_snr_router(self) -> bool:
        return self is not MoeVariant.EMG_ONLY3

    def truth_key(self, sample: ContaminatedSample) -> str:
        return self.key_for(sample.snr_tier, sample.emg_type)

    def key_for(self, tier: SnrTier | None, emg_type: EmgType | None) -> str:
        if self is MoeVariant.EMG_ONLY3:
            return emg_type.value
        if self is MoeVariant.SNR_ONLY3:
            return tier.value
        if self is MoeVariant.FULL9:
            return f"{tier.value}_{emg_type.value}"
        return partition_for(tier, emg_type).key

    def is_mse_partition(self, key: str) -> bool:
        """High-tier partitions use the standalone MSE expert."""
        if self is MoeVariant.EMG_ONLY3:
            return False
        return key.startswith("high")


@dataclass
class MoeSystem:
    variant: MoeVariant
    type_classifier: Model | None
    snr_classifier: Model | None
    experts: dict[str, DenoisingExpert]
    seed: int
    config_hash: str | None = None
    expert_seeds: dict[str, int] = field(default_factory=dict)

    @property
    def segment_length(self) -> int:
        any_expert = next(iter(self.experts.values()))
        model = next(iter(any_expert.models().values()))
        return model.input_shape[0]

    def router_bundle(self) -> RouterBundle:
        if self.type_classifier is None or self.snr_classifier is None:
            raise InvalidInputError(f"{self.variant.value} has no full router bundle")
        return RouterBundle(self.type_classifier, self.snr_classifier, frozen=True)

    def total_invocations(self) -> int:
        return sum(e.invocations for e in self.experts.values())


def build_moe(
    variant: MoeVariant,
    train_split: list[ContaminatedSample],
    config: Config,
    seed: int | None = None,
) -> MoeSystem:
    """Train routers (then freeze) and one expert per ground-truth partition.

    Every seed below derives from (run seed, role, partition key) alone, so
    training experts in any order — or only a subset — produces identical
    checkpoints per expert.
    """
    if not train_split:
        raise InvalidInputError("training split must be non-empty")
    seed = config.seed if seed is None else seed
    input_shape = config.input_shape

    type_model = snr_model = None
    if variant.uses_type_router:
        model = build_model(config.architecture("classifier_cnn"), input_shape,
                            seed=derive_seed(seed, "init", "type_classifier"))
        cfg = config.train_config("classifier", derive_seed(seed, "train", "type_classifier"))
        type_model, _ = train_type_classifier(train_split, model, cfg)
    if variant.uses_snr_router:
        model = build_model(config.architecture("classifier_cnn"), input_shape,
                            seed=derive_seed(seed, "init", "snr_classifier"))
        cfg = config.train_config("classifier", derive_seed(seed, "train", "snr_classifier"))
        snr_model, _ = train_snr_classifier(train_split, model, cfg)

    by_key: dict[str, list[ContaminatedSample]] = {k: [] for k in variant.partition_keys}
    for sample in train_split:
        by_key[variant.truth_key(sample)].append(sample)

    experts: dict[str, DenoisingExpert] = {}
    expert_seeds: dict[str, int] = {}
    for key in variant.partition_keys:
        part = by_key[key]
        if not part:
            raise InsufficientDataError(key)
        expert_seed = derive_seed(seed, "expert", key)
        expert_seeds[key] = expert_seed
        if variant.is_mse_partition(key):
            model = build_model(config.architecture("high_snr_rnn"), input_shape,
                                seed=derive_seed(expert_seed, "init", "mse"))
            cfg = config.train_config("mse_expert", derive_seed(expert_seed, "train", "mse"))
            trained, _ = train_mse_expert(part, model, cfg)
            experts[key] = DenoisingExpert(partition=key, mse_model=trained)
        else:
            corr = build_model(config.architecture("denoiser_cnn"), input_shape,
                               seed=derive_seed(expert_seed, "init", "corr"))
            rescale = build_model(config.architecture("rescaler_rnn"), input_shape,
                                  seed=derive_seed(expert_seed, "init", "rescale"))
            corr_cfg = config.train_config("corr_expert", derive_seed(expert_seed, "train", "corr"))
            rescale_cfg = config.train_config("rescale_expert", derive_seed(expert_seed, "train", "rescale"))
            corr_t, rescale_t, _ = train_corr_expert(part, corr, rescale, corr_cfg, rescale_cfg)
            experts[key] = DenoisingExpert(partition=key, corr_model=corr_t, rescale_model=rescale_t)

    return MoeSystem(
        variant=variant,
        type_classifier=type_model,
        snr_classifier=snr_model,
        experts=experts,
        seed=seed,
        config_hash=config.hash,
        expert_seeds=expert_seeds,
    )


def _predicted_key(system: MoeSystem, segment) -> str:
    variant = system.variant
    if variant is MoeVariant.FULL7:
        return route(system.router_bundle(), segment).key
    tier = typ = None
    if variant.uses_snr_router:
        tier = TIER_ORDER[int(np.argmax(classify(system.snr_classifier, segment)))]
    if variant.uses_type_router:
        typ = TYPE_ORDER[int(np.argmax(classify(system.type_classifier, segment)))]
    return variant.key_for(tier, typ)


def moe_denoise(system: MoeSystem, contaminated) -> tuple[Segment, str]:
    """Route one segment and run exactly the selected expert."""
    key = _predicted_key(system, contaminated)
    return expert_denoise(system.experts[key], contaminated), key


def moe_denoise_with_key(system: MoeSystem, contaminated, key: str) -> Segment:
    """Oracle-routing path: the caller supplies the ground-truth partition."""
    if key not in system.experts:
        raise InvalidInputError(f"unknown partition {key!r}")
    return expert_denoise(system.experts[key], contaminated)


def predict_keys(system: MoeSystem, samples: list[ContaminatedSample]) -> list[str]:
    """Batched routing of a sample list (argmax of batched classifier runs)."""
    variant = system.variant
    x = standardize(np.stack([s.contaminated.samples for s in samples]))
    tier_idx = type_idx = None
    if variant.uses_snr_router:
        tier_idx = np.argmax(predict_batched(system.snr_classifier, x), axis=-1)
    if variant.uses_type_router:
        type_idx = np.argmax(predict_batched(system.type_classifier, x), axis=-1)
    keys = []
    for i in range(len(samples)):
        tier = TIER_ORDER[int(tier_idx[i])] if tier_idx is not None else None
        typ = TYPE_ORDER[int(type_idx[i])] if type_idx is not None else None
        keys.append(variant.key_for(tier, typ))
    return keys


def system_checksum(system: MoeSystem) -> str:
    """Digest over every parameter byte and layer spec in the system."""
    h = hashlib.sha256()
    h.update(system.variant.value.encode())

    def eat(model: Model | None, tag: str):
        h.update(tag.encode())
        if model is None:
            return
        from .nn import layer_to_dict

        h.update(json.dumps([layer_to_dict(l) for l in model.layers],
                            sort_keys=True).encode())
        h.update(np.ascontiguousarray(model.params, dtype="<f8").tobytes())

    eat(system.type_classifier, "type")
    eat(system.snr_classifier, "snr")
    for key in sorted(system.experts):
        expert = system.experts[key]
        for name, model in sorted(expert.models().items()):
            eat(model, f"{key}/{name}")
    return h.hexdigest()


def save_moe(system: MoeSystem, out_dir) -> str:
    """Persist a system: router checkpoints, one directory per expert with a
    metadata document, plus the system manifest. Returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    router_files = {}
    if system.type_classifier is not None:
        router_files["type"] = "router_type.model"
        save_model(system.type_classifier, os.path.join(out_dir, router_files["type"]))
    if system.snr_classifier is not None:
        router_files["snr"] = "router_snr.model"
        save_model(system.snr_classifier, os.path.join(out_dir, router_files["snr"]))
    experts_entry = {}
    for key in sorted(system.experts):
        expert = system.experts[key]
        expert_dir = os.path.join(out_dir, "experts", key)
        os.makedirs(expert_dir, exist_ok=True)
        files = {}
        for name, model in sorted(expert.models().items()):
            files[name] = f"experts/{key}/{name}.model"
            save_model(model, os.path.join(out_dir, files[name]))
        meta = {
            "partition": key,
            "kind": expert.kind,
            "config_hash": system.config_hash,
            "training_seed": system.expert_seeds.get(key),
        }
        with open(os.path.join(expert_dir, "meta.json"), "w", newline="\n") as fh:
            json.dump(meta, fh, sort_keys=True, indent=2)
            fh.write("\n")
        experts_entry[key] = {"kind": expert.kind, "files": files}
    manifest = {
        "format": "moedenoise-moe",
        "version": 1,
        "variant": system.variant.value,
        "seed": system.seed,
        "config_hash": system.config_hash,
        "router": router_files,
        "experts": experts_entry,
        "expert_seeds": {k: system.expert_seeds.get(k) for k in sorted(system.experts)},
        "checksum": system_checksum(system),
    }
    path = os.path.join(out_dir, "system.json")
    with open(path, "w", newline="\n") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def load_moe(manifest_path) -> MoeSystem:
    with open(manifest_path) as fh:
        raw = json.load(fh)
    if raw.get("format") != "moedenoise-moe":
        raise FormatError(f"{manifest_path}: not a system manifest")
    base = os.path.dirname(os.path.abspath(manifest_path))
    variant = MoeVariant(raw["variant"])
    type_model = snr_model = None
    if "type" in raw["router"]:
        type_model = load_model(os.path.join(base, raw["router"]["type"]))
    if "snr" in raw["router"]:
        snr_model = load_model(os.path.join(base, raw["router"]["snr"]))
    experts = {}
    for key, entry in raw["experts"].items():
        models = {name: load_model(os.path.join(base, rel))
                  for name, rel in entry["files"].items()}
        experts[key] = DenoisingExpert(
            partition=key,
            corr_model=models.get("corr"),
            rescale_model=models.get("rescale"),
            mse_model=models.get("mse"),
        )
    system = MoeSystem(
        variant=variant,
        type_classifier=type_model,
        snr_classifier=snr_model,
        experts=experts,
        seed=raw["seed"],
        config_hash=raw.get("config_hash"),
        expert_seeds={k: v for k, v in raw.get("expert_seeds", {}).items()},
    )
    if system_checksum(system) != raw.get("checksum"):
        raise FormatError(f"{manifest_path}: checksum mismatch")
    return system
