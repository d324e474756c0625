"""Segment carrier, evaluation metrics, and the power spectrum they need.

Conventions fixed here and used everywhere else:

* SNR in dB is ``10 * log10(rms(signal) / rms(noise))`` — the RMS ratio
  goes inside a single factor of 10, matching the benchmark lineage this
  evaluation protocol inherits. This is *not* the 20*log10 amplitude
  convention.
* The power spectrum is a plain unwindowed one-sided periodogram of the
  whole segment, scaled so the bins sum to the mean squared amplitude
  (Parseval-consistent). Windowing choices live behind this one function.

All arithmetic is float64. Every function is pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, InvalidInputError

__all__ = [
    "Segment",
    "MetricsRecord",
    "Spectrum",
    "rms",
    "pearson_cc",
    "trrmse",
    "power_spectrum",
    "srrmse",
    "measured_snr_db",
]

DEFAULT_SAMPLE_RATE_HZ = 256.0
DEFAULT_SEGMENT_LENGTH = 512


@dataclass(frozen=True)
class Segment:
    """A fixed-length single-channel time series.

    ``samples`` is always stored as a contiguous float64 array. Finite-ness
    and minimum length are enforced at construction so downstream code can
    assume a well-formed signal.
    """

    samples: np.ndarray
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ

    def __post_init__(self):
        arr = np.ascontiguousarray(self.samples, dtype=np.float64)
        if arr.ndim != 1:
            raise InvalidInputError(f"segment must be 1-D, got shape {arr.shape}")
        if arr.size < 2:
            raise InvalidInputError(f"segment needs at least 2 samples, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("segment contains non-finite samples")
        if not self.sample_rate_hz > 0:
            raise InvalidInputError(f"sample rate must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class MetricsRecord:
    """Per-sample evaluation triple plus the sample's ground-truth SNR."""

    cc: float
    trrmse: float
    srrmse: float
    snr_db: float

    def __post_init__(self):
        if not -1.0 - 1e-9 <= self.cc <= 1.0 + 1e-9:
            raise InvalidInputError(f"cc out of [-1, 1]: {self.cc}")
        if self.trrmse < 0 or self.srrmse < 0:
            raise InvalidInputError("relative errors must be nonnegative")


@dataclass(frozen=True)
class Spectrum:
    """One-sided power spectrum; ``power`` has length floor(L/2)+1."""

    power: np.ndarray = field(repr=False)
    bin_width_hz: float

    def __post_init__(self):
        arr = np.ascontiguousarray(self.power, dtype=np.float64)
        if arr.ndim != 1:
            raise InvalidInputError("spectrum power must be 1-D")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise InvalidInputError("spectrum power must be finite and nonnegative")
        if not self.bin_width_hz > 0:
            raise InvalidInputError("bin width must be positive")
        object.__setattr__(self, "power", arr)


def _samples(x) -> np.ndarray:
    """Accept a Segment or any 1-D array-like; return float64 samples."""
    if isinstance(x, Segment):
        return x.samples
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError(f"expected a 1-D signal, got shape {arr.shape}")
    return arr


def rms(x) -> float:
    """Root mean square of the samples."""
    arr = _samples(x)
    if arr.size == 0:
        raise InvalidInputError("rms of an empty segment is undefined")
    return float(np.sqrt(np.mean(np.square(arr))))


def pearson_cc(a, b) -> float:
    """Pearson correlation coefficient between two equal-length signals.

    Raises DegenerateInputError when either input has zero variance; callers
    that need a total function must decide their own fallback.
    """
    xa, xb = _samples(a), _samples(b)
    if xa.size != xb.size:
        raise InvalidInputError(f"length mismatch: {xa.size} vs {xb.size}")
    da = xa - xa.mean()
    db = xb - xb.mean()
    sa = float(np.sqrt(np.mean(da * da)))
    sb = float(np.sqrt(np.mean(db * db)))
    if sa == 0.0 or sb == 0.0:
        raise DegenerateInputError("pearson_cc undefined for a constant input")
    return float(np.mean(da * db) / (sa * sb))


def trrmse(est, truth) -> float:
    """Temporal relative RMSE: rms(est - truth) / rms(truth)."""
    xe, xt = _samples(est), _samples(truth)
    if xe.size != xt.size:
        raise InvalidInputError(f"length mismatch: {xe.size} vs {xt.size}")
    denom = rms(xt)
    if denom == 0.0:
        raise DegenerateInputError("trrmse undefined for an all-zero truth")
    return rms(xe - xt) / denom


def power_spectrum(x) -> Spectrum:
    """Unwindowed one-sided periodogram of the full segment.

    Scaled so that ``sum(power) == mean(x**2)`` exactly (Parseval): the DC
    bin and, for even L, the Nyquist bin carry weight 1, interior bins
    weight 2.
    """
    if isinstance(x, Segment):
        rate = x.sample_rate_hz
    else:
        rate = DEFAULT_SAMPLE_RATE_HZ
    arr = _samples(x)
    n = arr.size
    if n < 2:
        raise InvalidInputError("power spectrum needs at least 2 samples")
    spec = np.fft.rfft(arr)
    power = (spec.real ** 2 + spec.imag ** 2) / (n * n)
    weights = np.full(power.size, 2.0)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[-1] = 1.0
    return Spectrum(power=power * weights, bin_width_hz=rate / n)


def srrmse(est, truth) -> float:
    """Spectral relative RMSE between the two power spectra."""
    pe = power_spectrum(est).power
    pt = power_spectrum(truth).power
    if pe.size != pt.size:
        raise InvalidInputError("spectra have different lengths")
    denom = float(np.sqrt(np.mean(pt * pt)))
    if denom == 0.0:
        raise DegenerateInputError("srrmse undefined for an all-zero truth spectrum")
    diff = pe - pt
    return float(np.sqrt(np.mean(diff * diff)) / denom)


def measured_snr_db(clean, scaled_noise) -> float:
    """SNR of a clean/noise pair in dB: 10*log10(rms(clean)/rms(noise))."""
    rc = rms(clean)
    rn = rms(scaled_noise)
    if rc == 0.0 or rn == 0.0:
        raise DegenerateInputError("snr undefined when either rms is zero")
    return float(10.0 * np.log10(rc / rn))
