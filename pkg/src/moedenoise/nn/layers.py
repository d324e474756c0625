"""Layer kinds for the sequential network stack.

Activations flow through in one of two shapes (plus a leading batch axis):

* sequence: (B, T, C) — T timesteps, C channels
* vector:   (B, F)

Each layer spec knows its output shape, parameter count, initializer, and an
exact forward/backward pair. Backward implementations return the analytic
gradient of the forward map; the finite-difference harness in
:mod:`moedenoise.nn.train` verifies them.

Dense is shape-polymorphic, resolved once from the input shape at model
build: applied per timestep when the channel count matches ``in_features``,
and to the flattened sequence when the total size matches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError

__all__ = [
    "Conv1D",
    "Dense",
    "Recurrent",
    "ReLU",
    "Tanh",
    "GlobalAvgPool",
    "Softmax",
    "LayerSpec",
    "layer_from_dict",
    "layer_to_dict",
]


def _same_padding(t: int, kernel: int, stride: int) -> tuple[int, int, int]:
    """Output length and left/right zero padding for 'same' conv."""
    out = -(-t // stride)
    pad = max((out - 1) * stride + kernel - t, 0)
    return out, pad // 2, pad - pad // 2


@dataclass(frozen=True)
class Conv1D:
    """1-D convolution with 'same' zero padding."""

    kernel: int
    in_ch: int
    out_ch: int
    stride: int = 1

    def out_shape(self, in_shape):
        if len(in_shape) != 2 or in_shape[1] != self.in_ch:
            raise ShapeError(f"conv1d expects (T, {self.in_ch}), got {in_shape}")
        out, _, _ = _same_padding(in_shape[0], self.kernel, self.stride)
        return (out, self.out_ch)

    def param_count(self, in_shape) -> int:
        return self.kernel * self.in_ch * self.out_ch + self.out_ch

    def init_params(self, in_shape, rng: np.random.Generator) -> np.ndarray:
        bound = np.sqrt(1.0 / (self.kernel * self.in_ch))
        w = rng.uniform(-bound, bound, size=self.kernel * self.in_ch * self.out_ch)
        return np.concatenate([w, np.zeros(self.out_ch)])

    def _split(self, w: np.ndarray):
        n_w = self.kernel * self.in_ch * self.out_ch
        return w[:n_w].reshape(self.kernel, self.in_ch, self.out_ch), w[n_w:]

    def forward(self, x: np.ndarray, w: np.ndarray):
        weight, bias = self._split(w)
        t = x.shape[1]
        out, pl, pr = _same_padding(t, self.kernel, self.stride)
        xp = np.pad(x, ((0, 0), (pl, pr), (0, 0)))
        # (B, T', C, k) windows over the padded time axis, strided
        wins = np.lib.stride_tricks.sliding_window_view(xp, self.kernel, axis=1)
        wins = wins[:, :: self.stride]
        y = np.tensordot(wins, weight, axes=([3, 2], [0, 1])) + bias
        return y, (xp, t, pl, out)

    def backward(self, gy: np.ndarray, w: np.ndarray, cache):
        weight, _ = self._split(w)
        xp, t, pl, out = cache
        wins = np.lib.stride_tricks.sliding_window_view(xp, self.kernel, axis=1)
        wins = wins[:, :: self.stride]
        # wins: (B, out, C, k); gy: (B, out, O)
        gw = np.tensordot(wins, gy, axes=([0, 1], [0, 1]))  # (C, k, O)
        gw = gw.transpose(1, 0, 2)  # (k, C, O)
        gb = gy.sum(axis=(0, 1))
        gxp = np.zeros_like(xp)
        last = (out - 1) * self.stride
        for i in range(self.kernel):
            gxp[:, i : i + last + 1 : self.stride] += gy @ weight[i].T
        gx = gxp[:, pl : pl + t]
        return gx, np.concatenate([gw.ravel(), gb])


@dataclass(frozen=True)
class Dense:
    """Affine map; per-step, vector, or flattening mode by input shape."""

    in_features: int
    out_features: int

    def _mode(self, in_shape) -> str:
        if len(in_shape) == 1 and in_shape[0] == self.in_features:
            return "vector"
        if len(in_shape) == 2 and in_shape[1] == self.in_features:
            return "step"
        if len(in_shape) == 2 and in_shape[0] * in_shape[1] == self.in_features:
            return "flatten"
        raise ShapeError(f"dense({self.in_features}) cannot consume shape {in_shape}")

    def out_shape(self, in_shape):
        mode = self._mode(in_shape)
        if mode == "step":
            return (in_shape[0], self.out_features)
        return (self.out_features,)

    def param_count(self, in_shape) -> int:
        return self.in_features * self.out_features + self.out_features

    def init_params(self, in_shape, rng: np.random.Generator) -> np.ndarray:
        bound = np.sqrt(1.0 / self.in_features)
        w = rng.uniform(-bound, bound, size=self.in_features * self.out_features)
        return np.concatenate([w, np.zeros(self.out_features)])

    def _split(self, w: np.ndarray):
        n_w = self.in_features * self.out_features
        return w[:n_w].reshape(self.in_features, self.out_features), w[n_w:]

    def forward(self, x: np.ndarray, w: np.ndarray):
        weight, bias = self._split(w)
        mode = self._mode(x.shape[1:])
        xin = x.reshape(x.shape[0], -1) if mode == "flatten" else x
        y = xin @ weight + bias
        return y, (xin, x.shape, mode)

    def backward(self, gy: np.ndarray, w: np.ndarray, cache):
        weight, _ = self._split(w)
        xin, x_shape, mode = cache
        if mode == "step":
            gw = np.tensordot(xin, gy, axes=([0, 1], [0, 1]))
            gb = gy.sum(axis=(0, 1))
        else:
            gw = xin.T @ gy
            gb = gy.sum(axis=0)
        gx = gy @ weight.T
        if mode == "flatten":
            gx = gx.reshape(x_shape)
        return gx, np.concatenate([gw.ravel(), gb])


@dataclass(frozen=True)
class Recurrent:
    """Single-layer Elman cell: h_t = tanh(x_t Wx + h_{t-1} Wh + b)."""

    hidden: int

    def out_shape(self, in_shape):
        if len(in_shape) != 2:
            raise ShapeError(f"recurrent expects a sequence, got {in_shape}")
        return (in_shape[0], self.hidden)

    def param_count(self, in_shape) -> int:
        c = in_shape[1]
        return c * self.hidden + self.hidden * self.hidden + self.hidden

    def init_params(self, in_shape, rng: np.random.Generator) -> np.ndarray:
        c = in_shape[1]
        wx = rng.uniform(-np.sqrt(1.0 / c), np.sqrt(1.0 / c), size=c * self.hidden)
        wh = rng.uniform(
            -np.sqrt(1.0 / self.hidden),
            np.sqrt(1.0 / self.hidden),
            size=self.hidden * self.hidden,
        )
        return np.concatenate([wx, wh, np.zeros(self.hidden)])

    def _split(self, w: np.ndarray, c: int):
        h = self.hidden
        wx = w[: c * h].reshape(c, h)
        wh = w[c * h : c * h + h * h].reshape(h, h)
        b = w[c * h + h * h :]
        return wx, wh, b

    def forward(self, x: np.ndarray, w: np.ndarray):
        b_sz, t, c = x.shape
        wx, wh, bias = self._split(w, c)
        hs = np.empty((b_sz, t, self.hidden))
        h = np.zeros((b_sz, self.hidden))
        for step in range(t):
            h = np.tanh(x[:, step] @ wx + h @ wh + bias)
            hs[:, step] = h
        return hs, (x, hs)

    def backward(self, gy: np.ndarray, w: np.ndarray, cache):
        x, hs = cache
        b_sz, t, c = x.shape
        wx, wh, bias = self._split(w, c)
        gwx = np.zeros_like(wx)
        gwh = np.zeros_like(wh)
        gb = np.zeros_like(bias)
        gx = np.empty_like(x)
        carry = np.zeros((b_sz, self.hidden))
        for step in range(t - 1, -1, -1):
            dh = gy[:, step] + carry
            da = dh * (1.0 - hs[:, step] ** 2)
            h_prev = hs[:, step - 1] if step > 0 else np.zeros((b_sz, self.hidden))
            gwx += x[:, step].T @ da
            gwh += h_prev.T @ da
            gb += da.sum(axis=0)
            gx[:, step] = da @ wx.T
            carry = da @ wh.T
        return gx, np.concatenate([gwx.ravel(), gwh.ravel(), gb])


@dataclass(frozen=True)
class ReLU:
    def out_shape(self, in_shape):
        return in_shape

    def param_count(self, in_shape) -> int:
        return 0

    def init_params(self, in_shape, rng) -> np.ndarray:
        return np.empty(0)

    def forward(self, x, w):
        return np.maximum(x, 0.0), x > 0

    def backward(self, gy, w, cache):
        return gy * cache, np.empty(0)


@dataclass(frozen=True)
class Tanh:
    def out_shape(self, in_shape):
        return in_shape

    def param_count(self, in_shape) -> int:
        return 0

    def init_params(self, in_shape, rng) -> np.ndarray:
        return np.empty(0)

    def forward(self, x, w):
        y = np.tanh(x)
        return y, y

    def backward(self, gy, w, cache):
        return gy * (1.0 - cache ** 2), np.empty(0)


@dataclass(frozen=True)
class GlobalAvgPool:
    """Mean over the time axis: (B, T, C) -> (B, C)."""

    def out_shape(self, in_shape):
        if len(in_shape) != 2:
            raise ShapeError(f"global pool expects a sequence, got {in_shape}")
        return (in_shape[1],)

    def param_count(self, in_shape) -> int:
        return 0

    def init_params(self, in_shape, rng) -> np.ndarray:
        return np.empty(0)

    def forward(self, x, w):
        return x.mean(axis=1), x.shape[1]

    def backward(self, gy, w, cache):
        t = cache
        return np.repeat(gy[:, None, :], t, axis=1) / t, np.empty(0)


@dataclass(frozen=True)
class Softmax:
    """Softmax over the last axis."""

    def out_shape(self, in_shape):
        return in_shape

    def param_count(self, in_shape) -> int:
        return 0

    def init_params(self, in_shape, rng) -> np.ndarray:
        return np.empty(0)

    def forward(self, x, w):
        z = x - x.max(axis=-1, keepdims=True)
        e = np.exp(z)
        y = e / e.sum(axis=-1, keepdims=True)
        return y, y

    def backward(self, gy, w, cache):
        y = cache
        dot = (gy * y).sum(axis=-1, keepdims=True)
        return y * (gy - dot), np.empty(0)


LayerSpec = Conv1D | Dense | Recurrent | ReLU | Tanh | GlobalAvgPool | Softmax

_KINDS = {
    "conv1d": Conv1D,
    "dense": Dense,
    "recurrent": Recurrent,
    "relu": ReLU,
    "tanh": Tanh,
    "global_avg_pool": GlobalAvgPool,
    "softmax": Softmax,
}
_NAMES = {cls: name for name, cls in _KINDS.items()}


def layer_to_dict(layer: LayerSpec) -> dict:
    d = {"kind": _NAMES[type(layer)]}
    for field in getattr(layer, "__dataclass_fields__", {}):
        d[field] = getattr(layer, field)
    return d


def layer_from_dict(d: dict) -> LayerSpec:
    kind = d.get("kind")
    if kind not in _KINDS:
        raise ShapeError(f"unknown layer kind {kind!r}")
    kwargs = {k: v for k, v in d.items() if k != "kind"}
    return _KINDS[kind](**kwargs)
