"""Optimizers over the flat parameter vector."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["AdamSpec", "SgdSpec", "make_optimizer"]


@dataclass(frozen=True)
class AdamSpec:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass(frozen=True)
class SgdSpec:
    pass


class _Adam:
    def __init__(self, spec: AdamSpec, n_params: int, lr: float):
        self.spec = spec
        self.lr = lr
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        s = self.spec
        self.t += 1
        self.m = s.beta1 * self.m + (1.0 - s.beta1) * grad
        self.v = s.beta2 * self.v + (1.0 - s.beta2) * grad * grad
        m_hat = self.m / (1.0 - s.beta1 ** self.t)
        v_hat = self.v / (1.0 - s.beta2 ** self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + s.eps)


class _Sgd:
    def __init__(self, spec: SgdSpec, n_params: int, lr: float):
        self.lr = lr

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        return params - self.lr * grad


def make_optimizer(spec, n_params: int, lr: float):
    if isinstance(spec, AdamSpec):
        return _Adam(spec, n_params, lr)
    if isinstance(spec, SgdSpec):
        return _Sgd(spec, n_params, lr)
    raise TypeError(f"unknown optimizer spec {spec!r}")
