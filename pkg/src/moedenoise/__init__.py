"""Mixture-of-experts EEG denoising at desk scale.

Semi-synthetic EMG contamination with exact target SNRs, variance/SNR
problem-space partitioning, correlation-trained denoising experts with
affine rescaling, two-stage hard routing across seven local experts, and
the benchmark harness that evaluates it all.
"""

__version__ = "0.1.0"
