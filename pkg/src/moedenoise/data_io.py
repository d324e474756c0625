"""Segment pool persistence, dataset manifests, and surrogate synthesis.

Pool files are plain CSV: one segment per row, shortest round-trip decimal
floats (lossless at 64-bit), and a single header line

    # role=<CleanEEG|EmgArtifact|...> length=<L> rate=<hz>

Surrogates replace the external benchmark download at desk scale:

* EEG: a fixed AR(2) process (a1=1.5, a2=-0.6 — arbitrary-but-frozen, stable,
  1/f-like with spectral mass well below 30 Hz) driven by seeded white noise,
  standardized per segment.
* EMG: first-differenced white noise (high-pass) under a burst envelope,
  scaled to a per-segment variance drawn log-uniformly over three decades.
  The envelope morphology co-varies with the variance draw — low-variance
  artifacts are tonic, high-variance artifacts are a few narrow bursts — so
  recording-time variance remains a meaningful proxy for waveform type after
  the mixing step rescales amplitudes.
"""

from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .contamination import (
    ContaminatedSample,
    EmgType,
    SnrTier,
    TercileThresholds,
    validate_sample,
)
from .errors import FormatError, InvalidInputError
from .signal_core import DEFAULT_SAMPLE_RATE_HZ, DEFAULT_SEGMENT_LENGTH, Segment

__all__ = [
    "PoolRole",
    "SegmentPool",
    "DatasetManifest",
    "load_pool",
    "write_pool",
    "synth_surrogate_eeg",
    "synth_surrogate_emg",
    "save_dataset",
    "load_dataset",
]

EEG_AR_COEFFS = (1.5, -0.6)
_AR_BURN_IN = 256


class PoolRole(enum.Enum):
    CLEAN_EEG = "CleanEEG"
    EMG_ARTIFACT = "EmgArtifact"


@dataclass(frozen=True)
class SegmentPool:
    """Role-homogeneous collection of equal-length segments."""

    role: PoolRole
    data: np.ndarray = field(repr=False)  # (n, L)
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    source: str = ""

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise InvalidInputError(f"pool data must be 2-D, got shape {arr.shape}")
        if arr.shape[0] > 0 and arr.shape[1] < 2:
            raise InvalidInputError("pool segments need at least 2 samples")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("pool contains non-finite samples")
        object.__setattr__(self, "data", arr)

    def __len__(self) -> int:
        return self.data.shape[0]

    @property
    def segment_length(self) -> int:
        return self.data.shape[1]

    def segment(self, i: int) -> Segment:
        return Segment(self.data[i], sample_rate_hz=self.sample_rate_hz)

    def segments(self) -> list[Segment]:
        return [self.segment(i) for i in range(len(self))]


def _format_row(row: np.ndarray) -> str:
    return ",".join(repr(float(v)) for v in row)


def _write_matrix(path, matrix: np.ndarray, role_token: str, rate: float) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# role={role_token} length={matrix.shape[1]} rate={rate!r}\n")
        for row in matrix:
            fh.write(_format_row(row) + "\n")


def _read_matrix(path) -> tuple[np.ndarray, str | None, float]:
    with open(path, "r") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError(f"{path}: empty file")
    role_token = None
    rate = DEFAULT_SAMPLE_RATE_HZ
    length = None
    start = 0
    if lines[0].startswith("#"):
        start = 1
        fields = dict(
            part.split("=", 1) for part in lines[0].lstrip("#").split() if "=" in part
        )
        role_token = fields.get("role")
        if "rate" in fields:
            rate = float(fields["rate"])
        if "length" in fields:
            length = int(fields["length"])
    rows = []
    for line_no in range(start, len(lines)):
        line = lines[line_no].strip()
        if not line:
            continue
        cells = line.split(",")
        try:
            row = [float(c) for c in cells]
        except ValueError:
            raise FormatError(f"{path}: non-numeric cell", row=line_no + 1) from None
        if rows and len(row) != len(rows[0]):
            raise FormatError(f"{path}: ragged row", row=line_no + 1)
        if length is not None and len(row) != length:
            raise FormatError(f"{path}: row length != declared {length}", row=line_no + 1)
        rows.append(row)
    if rows:
        matrix = np.asarray(rows, dtype=np.float64)
    else:
        matrix = np.empty((0, length if length is not None else 0))
    return matrix, role_token, rate


def write_pool(pool: SegmentPool, path) -> None:
    """Canonical CSV; identical pools produce identical bytes."""
    _write_matrix(path, pool.data, pool.role.value, pool.sample_rate_hz)


def load_pool(path, role: PoolRole) -> SegmentPool:
    """Load and validate a pool file, checking the header role if present."""
    matrix, role_token, rate = _read_matrix(path)
    if role_token is not None and role_token != role.value:
        raise FormatError(f"{path}: header role {role_token!r} != expected {role.value!r}")
    return SegmentPool(role=role, data=matrix, sample_rate_hz=rate, source=str(path))


def synth_surrogate_eeg(
    n: int,
    length: int = DEFAULT_SEGMENT_LENGTH,
    seed: int = 0,
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
) -> SegmentPool:
    """Pink-ish AR(2) surrogates, standardized to zero mean / unit variance."""
    if n < 1:
        raise InvalidInputError("need at least one segment")
    a1, a2 = EEG_AR_COEFFS
    rng = np.random.default_rng(seed)
    total = length + _AR_BURN_IN
    noise = rng.standard_normal((n, total))
    x = np.zeros((n, total))
    x[:, 0] = noise[:, 0]
    x[:, 1] = a1 * x[:, 0] + noise[:, 1]
    for t in range(2, total):
        x[:, t] = a1 * x[:, t - 1] + a2 * x[:, t - 2] + noise[:, t]
    segs = x[:, _AR_BURN_IN:]
    segs = segs - segs.mean(axis=1, keepdims=True)
    segs = segs / np.sqrt((segs ** 2).mean(axis=1, keepdims=True))
    return SegmentPool(
        role=PoolRole.CLEAN_EEG,
        data=segs,
        sample_rate_hz=sample_rate_hz,
        source=f"surrogate-eeg(n={n},length={length},seed={seed})",
    )


def _burst_envelope(rng: np.random.Generator, length: int, u: float) -> np.ndarray:
    """Amplitude envelope whose shape tracks the variance position u in [0,1]:
    tonic near u=0, a few narrow bursts near u=1."""
    floor = float(np.clip(0.9 - 0.75 * u + 0.05 * rng.standard_normal(), 0.05, 1.0))
    width = max(8, int(length * (0.30 - 0.22 * u) * rng.uniform(0.7, 1.3)))
    n_bursts = 1 + int(rng.integers(0, 3))
    env = np.full(length, floor)
    bump = np.hanning(width)
    for _ in range(n_bursts):
        start = int(rng.integers(-width // 2, length - width // 2))
        lo, hi = max(0, start), min(length, start + width)
        env[lo:hi] += bump[lo - start : hi - start]
    return env


def synth_surrogate_emg(
    n: int,
    length: int = DEFAULT_SEGMENT_LENGTH,
    seed: int = 0,
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
) -> SegmentPool:
    """High-frequency bursty surrogates with a 3-decade variance spread."""
    if n < 1:
        raise InvalidInputError("need at least one segment")
    rng = np.random.default_rng(seed)
    data = np.empty((n, length))
    for i in range(n):
        u = float(rng.uniform())
        white = rng.standard_normal(length + 1)
        shaped = np.diff(white) * _burst_envelope(rng, length, u)
        variance = 10.0 ** (3.0 * (u - 0.5))
        data[i] = shaped * np.sqrt(variance / np.var(shaped))
    return SegmentPool(
        role=PoolRole.EMG_ARTIFACT,
        data=data,
        sample_rate_hz=sample_rate_hz,
        source=f"surrogate-emg(n={n},length={length},seed={seed})",
    )


@dataclass(frozen=True)
class DatasetManifest:
    """Index of a persisted contaminated dataset, one entry per split."""

    seed: int
    snr_range: tuple[float, float]
    counts: dict[str, int]
    thresholds: TercileThresholds
    files: dict[str, dict[str, str]]  # split -> part -> relative path
    config_hash: str | None = None


_SPLIT_PARTS = ("contaminated", "clean", "artifact", "labels")


def save_dataset(
    splits: dict[str, list[ContaminatedSample]],
    thresholds: TercileThresholds,
    seed: int,
    snr_range: tuple[float, float],
    out_dir,
    config_hash: str | None = None,
) -> str:
    """Persist dataset splits and return the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    files: dict[str, dict[str, str]] = {}
    counts: dict[str, int] = {}
    for split in sorted(splits):
        samples = splits[split]
        counts[split] = len(samples)
        names = {part: f"{split}_{part}.csv" for part in _SPLIT_PARTS}
        files[split] = names
        if samples:
            rate = samples[0].contaminated.sample_rate_hz
            length = len(samples[0].contaminated)
        else:
            rate, length = DEFAULT_SAMPLE_RATE_HZ, DEFAULT_SEGMENT_LENGTH
        mats = {
            "contaminated": np.array([s.contaminated.samples for s in samples]).reshape(len(samples), -1),
            "clean": np.array([s.clean.samples for s in samples]).reshape(len(samples), -1),
            "artifact": np.array([s.artifact.samples for s in samples]).reshape(len(samples), -1),
        }
        role_tokens = {"contaminated": "Contaminated", "clean": "CleanEEG", "artifact": "EmgArtifact"}
        for part, mat in mats.items():
            if mat.size == 0:
                mat = np.empty((0, length))
            _write_matrix(os.path.join(out_dir, names[part]), mat, role_tokens[part], rate)
        with open(os.path.join(out_dir, names["labels"]), "w", newline="\n") as fh:
            fh.write("lam,snr_db,emg_type,snr_tier\n")
            for s in samples:
                fh.write(f"{s.lam!r},{s.snr_db!r},{s.emg_type.value},{s.snr_tier.value}\n")
    manifest = {
        "format": "moedenoise-dataset",
        "version": 1,
        "seed": seed,
        "snr_range": [snr_range[0], snr_range[1]],
        "counts": counts,
        "thresholds": {"t1_upper": thresholds.t1_upper, "t2_upper": thresholds.t2_upper},
        "files": files,
        "config_hash": config_hash,
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", newline="\n") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def load_dataset(manifest_path) -> tuple[dict[str, list[ContaminatedSample]], DatasetManifest]:
    """Load a persisted dataset; validates counts and sample invariants."""
    with open(manifest_path) as fh:
        raw = json.load(fh)
    if raw.get("format") != "moedenoise-dataset":
        raise FormatError(f"{manifest_path}: not a dataset manifest")
    base = os.path.dirname(os.path.abspath(manifest_path))
    thresholds = TercileThresholds(**raw["thresholds"])
    manifest = DatasetManifest(
        seed=raw["seed"],
        snr_range=(raw["snr_range"][0], raw["snr_range"][1]),
        counts={k: int(v) for k, v in raw["counts"].items()},
        thresholds=thresholds,
        files=raw["files"],
        config_hash=raw.get("config_hash"),
    )
    splits: dict[str, list[ContaminatedSample]] = {}
    for split, names in manifest.files.items():
        paths = {part: os.path.join(base, names[part]) for part in _SPLIT_PARTS}
        for part, p in paths.items():
            if not os.path.exists(p):
                raise FormatError(f"manifest references missing file {p}")
        mats = {part: _read_matrix(paths[part])[0] for part in ("contaminated", "clean", "artifact")}
        rate = _read_matrix(paths["contaminated"])[2]
        with open(paths["labels"]) as fh:
            label_lines = fh.read().splitlines()
        rows = [line.split(",") for line in label_lines[1:] if line.strip()]
        n = manifest.counts[split]
        sizes = {part: mat.shape[0] for part, mat in mats.items()}
        if any(v != n for v in sizes.values()) or len(rows) != n:
            raise FormatError(f"{manifest_path}: split {split!r} row counts do not match declared {n}")
        samples = []
        for i in range(n):
            lam, snr_db = float(rows[i][0]), float(rows[i][1])
            sample = ContaminatedSample(
                contaminated=Segment(mats["contaminated"][i], sample_rate_hz=rate),
                clean=Segment(mats["clean"][i], sample_rate_hz=rate),
                artifact=Segment(mats["artifact"][i], sample_rate_hz=rate),
                lam=lam,
                snr_db=snr_db,
                emg_type=EmgType(rows[i][2]),
                snr_tier=SnrTier(rows[i][3]),
            )
            validate_sample(sample)
            samples.append(sample)
        splits[split] = samples
    return splits, manifest
