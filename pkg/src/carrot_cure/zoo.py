"""Model architectures, the network executor, and model persistence.

Five fixed architectures are provided for the comparison harness; the
fifth is the proposed one (four 3x3 conv blocks with 2x2 pooling, then a
128-unit hidden layer and a 4-way softmax). Models serialize to a
self-describing binary format (magic ``CCUR``) with a JSON header, raw
little-endian float32 parameter blobs, and a trailing CRC32.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import nn
from .dataset import CLASS_KEYS, NUM_CLASSES
from .tensor import ShapeError, Tensor

FORMAT_MAGIC = b"CCUR"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Base class for model-file load failures."""


class BadMagicError(ModelFormatError):
    pass


class VersionMismatchError(ModelFormatError):
    pass


class TruncatedFileError(ModelFormatError):
    pass


class ChecksumError(ModelFormatError):
    pass


class HeaderMismatchError(ModelFormatError):
    """Header metadata disagrees with the blob contents or the spec."""


@dataclass(frozen=True)
class LayerSpec:
    kind: str  # conv3x3 | maxpool2x2 | flatten | dense | dropout
    filters: Optional[int] = None
    units: Optional[int] = None
    rate: Optional[float] = None
    activation: str = "none"  # relu | softmax | none


def conv3x3(filters: int) -> LayerSpec:
    return LayerSpec(kind="conv3x3", filters=filters, activation="relu")


def maxpool2x2() -> LayerSpec:
    return LayerSpec(kind="maxpool2x2")


def flatten() -> LayerSpec:
    return LayerSpec(kind="flatten")


def dense(units: int, activation: str = "relu") -> LayerSpec:
    return LayerSpec(kind="dense", units=units, activation=activation)


def dropout(rate: float) -> LayerSpec:
    return LayerSpec(kind="dropout", rate=rate)


@dataclass(frozen=True)
class ModelSpec:
    name: str
    layers: tuple[LayerSpec, ...]
    input_shape: tuple[int, int, int] = (128, 128, 3)

    @property
    def maxpool_count(self) -> int:
        return sum(1 for l in self.layers if l.kind == "maxpool2x2")

    @property
    def dense_count(self) -> int:
        return sum(1 for l in self.layers if l.kind == "dense")


def infer_shapes(spec: ModelSpec) -> list[tuple[int, ...]]:
    """Per-layer output shapes (batch dim omitted); raises on inconsistency."""
    shape: tuple[int, ...] = spec.input_shape
    softmax_seen = 0
    out = []
    for li, layer in enumerate(spec.layers):
        if layer.kind == "conv3x3":
            if len(shape) != 3:
                raise ShapeError(f"layer {li}: conv3x3 needs a [H,W,C] input, got {shape}")
            shape = (shape[0], shape[1], layer.filters)
        elif layer.kind == "maxpool2x2":
            if len(shape) != 3 or shape[0] % 2 or shape[1] % 2:
                raise ShapeError(f"layer {li}: maxpool2x2 needs even [H,W,C], got {shape}")
            shape = (shape[0] // 2, shape[1] // 2, shape[2])
        elif layer.kind == "flatten":
            shape = (int(np.prod(shape)),)
        elif layer.kind == "dense":
            if len(shape) != 1:
                raise ShapeError(f"layer {li}: dense needs a flat input, got {shape}")
            shape = (layer.units,)
        elif layer.kind == "dropout":
            pass
        else:
            raise ValueError(f"unknown layer kind {layer.kind!r}")
        if layer.activation == "softmax":
            softmax_seen += 1
            if li != len(spec.layers) - 1 or layer.kind != "dense":
                raise ShapeError("softmax is only valid on the final dense layer")
        out.append(shape)
    if softmax_seen != 1:
        raise ShapeError(f"spec must end in exactly one softmax layer, found {softmax_seen}")
    if shape != (NUM_CLASSES,):
        raise ShapeError(f"final layer must emit {NUM_CLASSES} classes, got {shape}")
    return out


def proposed_spec() -> ModelSpec:
    """The primary architecture: conv 32/64/128/256 blocks, dense 128 -> 4."""
    return ModelSpec(
        name="proposed",
        layers=(
            conv3x3(32), maxpool2x2(),
            conv3x3(64), maxpool2x2(),
            conv3x3(128), maxpool2x2(),
            conv3x3(256), maxpool2x2(),
            dropout(0.5),
            flatten(),
            dense(128, "relu"),
            dropout(0.25),
            dense(NUM_CLASSES, "softmax"),
        ),
    )


def variant_spec(k: int) -> ModelSpec:
    """Comparison architectures 1..5 (pooling/dense counts 5/3, 3/1, 4/1, 2/1, 4/2)."""
    if k == 1:
        convs, denses = (16, 32, 64, 128, 256), (256, 128)
    elif k == 2:
        convs, denses = (32, 64, 128), ()
    elif k == 3:
        convs, denses = (32, 64, 128, 256), ()
    elif k == 4:
        convs, denses = (32, 64), ()
    elif k == 5:
        return replace(proposed_spec(), name="model5")
    else:
        raise ValueError(f"variant index must be in 1..5, got {k}")
    layers: list[LayerSpec] = []
    for c in convs:
        layers += [conv3x3(c), maxpool2x2()]
    layers.append(flatten())
    for u in denses:
        layers.append(dense(u, "relu"))
    layers.append(dense(NUM_CLASSES, "softmax"))
    return ModelSpec(name=f"model{k}", layers=tuple(layers))


def parameter_shapes(spec: ModelSpec) -> list[tuple[str, tuple[int, ...]]]:
    """(name, shape) for every trainable tensor, in traversal order."""
    shapes: list[tuple[str, tuple[int, ...]]] = []
    prev: tuple[int, ...] = spec.input_shape
    for li, (layer, out_shape) in enumerate(zip(spec.layers, infer_shapes(spec))):
        if layer.kind == "conv3x3":
            shapes.append((f"layer{li}.filters", (layer.filters, 3, 3, prev[2])))
            shapes.append((f"layer{li}.bias", (layer.filters,)))
        elif layer.kind == "dense":
            shapes.append((f"layer{li}.weights", (prev[0], layer.units)))
            shapes.append((f"layer{li}.bias", (layer.units,)))
        prev = out_shape
    return shapes


def parameter_count(spec: ModelSpec) -> int:
    return sum(int(np.prod(s)) for _, s in parameter_shapes(spec))


class Model:
    """A spec plus its parameter tensors and training metadata."""

    def __init__(self, spec: ModelSpec, params: list[np.ndarray],
                 metadata: Optional[dict] = None):
        expected = parameter_shapes(spec)
        if len(params) != len(expected):
            raise ShapeError(
                f"expected {len(expected)} parameter tensors, got {len(params)}"
            )
        for arr, (name, shape) in zip(params, expected):
            if arr.shape != shape:
                raise ShapeError(f"{name} must have shape {shape}, got {arr.shape}")
        self.spec = spec
        self.params = params
        self.metadata = dict(metadata or {})
        self.metadata.setdefault("class_keys", list(CLASS_KEYS))

    def parameter_names(self) -> list[str]:
        return [name for name, _ in parameter_shapes(self.spec)]

    def copy_params(self) -> list[np.ndarray]:
        return [p.copy() for p in self.params]

    def set_params(self, params: list[np.ndarray]) -> None:
        for dst, src in zip(self.params, params):
            if dst.shape != src.shape:
                raise ShapeError("parameter snapshot shapes disagree")
            dst[...] = src

    # -- execution ---------------------------------------------------------

    def _layer_params(self):
        """Yield (layer, param object or None) pairing specs with tensors."""
        it = iter(self.params)
        for layer in self.spec.layers:
            if layer.kind == "conv3x3":
                yield layer, nn.Conv2dLayer(Tensor(next(it)), Tensor(next(it)))
            elif layer.kind == "dense":
                yield layer, nn.DenseLayer(Tensor(next(it)), Tensor(next(it)))
            else:
                yield layer, None

    def forward(self, x: Tensor, train: bool = False,
                rng: Optional[np.random.Generator] = None
                ) -> tuple[Tensor, list]:
        """Run the network; returns (probabilities [B,4], backward caches)."""
        h, w, c = self.spec.input_shape
        if x.rank != 4 or x.shape[1:] != (h, w, c):
            raise ShapeError(f"expected input [B,{h},{w},{c}], got {x.shape}")
        caches: list = []
        out = x
        for layer, p in self._layer_params():
            if layer.kind == "conv3x3":
                z = nn.conv2d_forward(out, p)
                y = nn.relu_forward(z) if layer.activation == "relu" else z
                caches.append((out, z))
                out = y
            elif layer.kind == "maxpool2x2":
                out, argmax = nn.maxpool2x2_forward(out)
                caches.append(argmax)
            elif layer.kind == "flatten":
                caches.append(out.shape)
                out = nn.flatten_forward(out)
            elif layer.kind == "dropout":
                mode = "train" if train else "infer"
                out, mask = nn.dropout_forward(out, nn.DropoutSpec(layer.rate), mode, rng)
                caches.append(mask)
            elif layer.kind == "dense":
                z = nn.dense_forward(out, p)
                caches.append((out, z))
                out = nn.relu_forward(z) if layer.activation == "relu" else z
        probs = nn.softmax(out)
        return probs, caches

    def backward(self, caches: list, probs: Tensor,
                 one_hot: Tensor) -> list[np.ndarray]:
        """Gradients for every parameter tensor, aligned with self.params."""
        grad = nn.softmax_cross_entropy_backward(probs, one_hot)
        grads_rev: list[np.ndarray] = []
        pairs = list(self._layer_params())
        for (layer, p), cache in zip(reversed(pairs), reversed(caches)):
            if layer.kind == "dense":
                x_in, z = cache
                if layer.activation == "relu":
                    grad = nn.relu_backward(z, grad)
                grad, gw, gb = nn.dense_backward(x_in, p, grad)
                grads_rev += [gb.data, gw.data]
            elif layer.kind == "dropout":
                grad = nn.dropout_backward(cache, grad)
            elif layer.kind == "flatten":
                grad = nn.flatten_backward(grad, cache)
            elif layer.kind == "maxpool2x2":
                grad = nn.maxpool2x2_backward(cache, grad)
            elif layer.kind == "conv3x3":
                x_in, z = cache
                if layer.activation == "relu":
                    grad = nn.relu_backward(z, grad)
                grad, gw, gb = nn.conv2d_backward(x_in, p, grad)
                grads_rev += [gb.data, gw.data]
        return grads_rev[::-1]

    def predict_probs(self, x: Tensor) -> Tensor:
        probs, _ = self.forward(x, train=False)
        return probs


def init_model(spec: ModelSpec, seed: int = 0,
               metadata: Optional[dict] = None) -> Model:
    """He-uniform weights (fan-in scaled), zero biases, seeded per layer."""
    infer_shapes(spec)
    params: list[np.ndarray] = []
    for li, (name, shape) in enumerate(parameter_shapes(spec)):
        if name.endswith(".bias"):
            params.append(np.zeros(shape, dtype=np.float32))
            continue
        fan_in = int(np.prod(shape[:-1])) if len(shape) == 2 else int(np.prod(shape[1:]))
        limit = np.sqrt(6.0 / fan_in)
        rng = np.random.default_rng(np.random.SeedSequence((seed, 0, li)))
        params.append(rng.uniform(-limit, limit, size=shape).astype(np.float32))
    meta = dict(metadata or {})
    meta.setdefault("seed", seed)
    return Model(spec, params, meta)


# ---------------------------------------------------------------------------
# Persistence (.ccur)
# ---------------------------------------------------------------------------


def _spec_to_json(spec: ModelSpec) -> dict:
    return {
        "name": spec.name,
        "input": list(spec.input_shape),
        "layers": [
            {
                "kind": l.kind,
                "filters": l.filters,
                "units": l.units,
                "rate": l.rate,
                "activation": l.activation,
            }
            for l in spec.layers
        ],
    }


def _spec_from_json(obj: dict) -> ModelSpec:
    try:
        layers = tuple(
            LayerSpec(
                kind=l["kind"],
                filters=l.get("filters"),
                units=l.get("units"),
                rate=l.get("rate"),
                activation=l.get("activation", "none"),
            )
            for l in obj["layers"]
        )
        return ModelSpec(name=obj["name"], layers=layers,
                         input_shape=tuple(obj["input"]))
    except (KeyError, TypeError) as exc:
        raise HeaderMismatchError(f"malformed spec in header: {exc}") from exc


def save_model(model: Model, path: Path | str) -> None:
    """Write the versioned binary format; bit-exact for identical models."""
    tensors = [
        {"name": name, "shape": list(arr.shape)}
        for (name, _), arr in zip(parameter_shapes(model.spec), model.params)
    ]
    header = {
        "spec": _spec_to_json(model.spec),
        "class_keys": model.metadata.get("class_keys", list(CLASS_KEYS)),
        "metadata": {k: v for k, v in model.metadata.items() if k != "class_keys"},
        "tensors": tensors,
    }
    header_bytes = json.dumps(header, ensure_ascii=False, separators=(",", ":")).encode("utf-8")

    out = bytearray()
    out += FORMAT_MAGIC
    out += FORMAT_VERSION.to_bytes(4, "little")
    out += len(header_bytes).to_bytes(8, "little")
    out += header_bytes
    for arr in model.params:
        out += np.ascontiguousarray(arr, dtype="<f4").tobytes()
    out += (zlib.crc32(bytes(out)) & 0xFFFFFFFF).to_bytes(4, "little")
    Path(path).write_bytes(bytes(out))


def load_model(path: Path | str) -> Model:
    """Read and validate a model file; distinct errors per failure mode."""
    blob = Path(path).read_bytes()
    if len(blob) < 4 or blob[:4] != FORMAT_MAGIC:
        raise BadMagicError(f"{path}: not a model file (bad magic)")
    if len(blob) < 16:
        raise TruncatedFileError(f"{path}: file shorter than the fixed header")
    version = int.from_bytes(blob[4:8], "little")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"{path}: format version {version}, expected {FORMAT_VERSION}"
        )
    header_len = int.from_bytes(blob[8:16], "little")
    if 16 + header_len + 4 > len(blob):
        raise TruncatedFileError(f"{path}: header extends past end of file")
    try:
        header = json.loads(blob[16 : 16 + header_len].decode("utf-8"))
        tensor_entries = header["tensors"]
        shapes = [tuple(int(d) for d in t["shape"]) for t in tensor_entries]
    except (ValueError, KeyError, TypeError) as exc:
        raise HeaderMismatchError(f"{path}: unparseable header: {exc}") from exc

    blob_bytes = sum(4 * int(np.prod(s)) for s in shapes)
    expected_len = 16 + header_len + blob_bytes + 4
    if len(blob) < expected_len:
        raise TruncatedFileError(
            f"{path}: expected {expected_len} bytes, found {len(blob)}"
        )
    if len(blob) > expected_len:
        raise HeaderMismatchError(
            f"{path}: {len(blob) - expected_len} trailing bytes beyond declared blobs"
        )
    stored_crc = int.from_bytes(blob[-4:], "little")
    actual_crc = zlib.crc32(blob[:-4]) & 0xFFFFFFFF
    if stored_crc != actual_crc:
        raise ChecksumError(
            f"{path}: CRC32 mismatch (stored {stored_crc:08x}, actual {actual_crc:08x})"
        )

    spec = _spec_from_json(header.get("spec", {}))
    expected_shapes = [s for _, s in parameter_shapes(spec)]
    if shapes != expected_shapes:
        raise HeaderMismatchError(
            f"{path}: tensor shapes in header disagree with the spec"
        )
    params: list[np.ndarray] = []
    offset = 16 + header_len
    for shape in shapes:
        n = 4 * int(np.prod(shape))
        arr = np.frombuffer(blob, dtype="<f4", count=int(np.prod(shape)), offset=offset)
        params.append(arr.reshape(shape).astype(np.float32))
        offset += n
    metadata = dict(header.get("metadata", {}))
    metadata["class_keys"] = header.get("class_keys", list(CLASS_KEYS))
    return Model(spec, params, metadata)
