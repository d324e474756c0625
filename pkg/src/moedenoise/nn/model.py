"""Model container: an ordered layer stack over one flat parameter vector.

Shape compatibility is validated once at build time, parameters are
initialized uniform in +/-sqrt(1/fan_in) from the model seed (biases zero),
and forward passes are pure functions of (params, input). Checkpoints are a
one-line JSON header plus the raw little-endian float64 parameter bytes, so
identical models serialize to identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import FormatError, ShapeError
from .layers import LayerSpec, layer_from_dict, layer_to_dict

__all__ = ["Model", "build_model", "forward", "forward_cached", "backprop",
           "save_model", "load_model"]

_CHECKPOINT_FORMAT = "moedenoise-model"
_CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class Model:
    layers: tuple[LayerSpec, ...]
    input_shape: tuple[int, ...]
    params: np.ndarray = field(repr=False)
    seed: int
    shapes: tuple[tuple[int, ...], ...] = field(repr=False)  # per-layer outputs
    slices: tuple[tuple[int, int], ...] = field(repr=False)  # param (start, stop)

    @property
    def output_shape(self) -> tuple[int, ...]:
        return self.shapes[-1]

    @property
    def num_params(self) -> int:
        return self.params.size

    def layer_params(self, i: int) -> np.ndarray:
        start, stop = self.slices[i]
        return self.params[start:stop]

    def with_params(self, params: np.ndarray) -> "Model":
        if params.size != self.params.size:
            raise ShapeError("parameter vector size mismatch")
        return replace(self, params=np.ascontiguousarray(params, dtype=np.float64))


def build_model(
    layers, input_shape: tuple[int, ...], seed: int = 0
) -> Model:
    """Validate the stack against ``input_shape`` and initialize parameters."""
    layers = tuple(layers)
    if not layers:
        raise ShapeError("model needs at least one layer")
    shapes = []
    slices = []
    rng = np.random.default_rng(seed)
    chunks = []
    shape = tuple(input_shape)
    offset = 0
    for layer in layers:
        chunk = layer.init_params(shape, rng)
        chunks.append(chunk)
        slices.append((offset, offset + chunk.size))
        offset += chunk.size
        shape = layer.out_shape(shape)
        shapes.append(shape)
    params = np.concatenate(chunks) if chunks else np.empty(0)
    return Model(
        layers=layers,
        input_shape=tuple(input_shape),
        params=np.ascontiguousarray(params, dtype=np.float64),
        seed=seed,
        shapes=tuple(shapes),
        slices=tuple(slices),
    )


def _as_batch(model: Model, x) -> tuple[np.ndarray, bool]:
    """Coerce a single input or a batch to (B,) + input_shape."""
    arr = np.asarray(getattr(x, "samples", x), dtype=np.float64)
    want = model.input_shape
    if arr.shape == want:
        return arr[None], True
    if arr.shape == (want[0],) and len(want) == 2 and want[1] == 1:
        return arr[None, :, None], True
    if arr.shape[1:] == want:
        return arr, False
    if arr.ndim == 2 and len(want) == 2 and want[1] == 1 and arr.shape[1] == want[0]:
        return arr[:, :, None], False
    raise ShapeError(f"input shape {arr.shape} incompatible with {want}")


def forward_cached(model: Model, xb: np.ndarray):
    """Batched forward keeping per-layer caches for backprop."""
    if xb.shape[1:] != model.input_shape:
        raise ShapeError(f"batch shape {xb.shape[1:]} != {model.input_shape}")
    caches = []
    act = xb
    for i, layer in enumerate(model.layers):
        act, cache = layer.forward(act, model.layer_params(i))
        caches.append(cache)
    return act, caches


def forward(model: Model, x):
    """Deterministic forward pass; accepts one segment/vector or a batch.

    Single inputs come back without the batch axis; batches keep it.
    """
    xb, single = _as_batch(model, x)
    out, _ = forward_cached(model, xb)
    return out[0] if single else out


def backprop(model: Model, caches, grad_out: np.ndarray) -> np.ndarray:
    """Gradient of the loss w.r.t. the flat parameter vector."""
    grads = np.zeros_like(model.params)
    g = grad_out
    for i in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[i]
        g, gw = layer.backward(g, model.layer_params(i), caches[i])
        start, stop = model.slices[i]
        grads[start:stop] = gw
    return grads


def save_model(model: Model, path) -> None:
    header = {
        "format": _CHECKPOINT_FORMAT,
        "version": _CHECKPOINT_VERSION,
        "seed": model.seed,
        "input_shape": list(model.input_shape),
        "layers": [layer_to_dict(l) for l in model.layers],
        "param_count": int(model.num_params),
        "dtype": "<f8",
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode() + b"\n"
    with open(path, "wb") as fh:
        fh.write(blob)
        fh.write(np.ascontiguousarray(model.params, dtype="<f8").tobytes())


def load_model(path) -> Model:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        raw = fh.read()
    try:
        header = json.loads(header_line)
    except json.JSONDecodeError as exc:
        raise FormatError(f"bad checkpoint header in {path}: {exc}") from exc
    if header.get("format") != _CHECKPOINT_FORMAT:
        raise FormatError(f"{path} is not a model checkpoint")
    if header.get("version") != _CHECKPOINT_VERSION:
        raise FormatError(f"unsupported checkpoint version {header.get('version')}")
    layers = [layer_from_dict(d) for d in header["layers"]]
    model = build_model(layers, tuple(header["input_shape"]), seed=header["seed"])
    params = np.frombuffer(raw, dtype="<f8")
    if params.size != header["param_count"] or params.size != model.num_params:
        raise FormatError(f"{path}: parameter payload size mismatch")
    return model.with_params(params.copy())
