"""Compact conditional encoder-decoder for cost-map prediction.

Pure numpy inference: 3x3 convs (two per stage), two 2x2 max-pool stages,
nearest-neighbor upsampling with skip concatenation, and a 1x1 sigmoid head.
The instruction embedding enters as k constant planes concatenated to the
four occupancy planes. Weights travel in the IGPW binary container, which is
also reused for forward-parity fixtures.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .envgen import CostMap
from .errors import (
    BadMagic,
    DimensionMismatch,
    ShapeMismatch,
    TruncatedFile,
    VersionUnsupported,
)

MAGIC = b"IGPW"
VERSION = 1


@dataclass(frozen=True)
class NetSpec:
    """Architecture descriptor; fixes the tensor enumeration."""

    k: int = 16
    widths: tuple[int, int, int] = (32, 64, 128)

    @property
    def in_channels(self) -> int:
        return 4 + self.k

    def conv_layers(self) -> list[tuple[str, int, int, int]]:
        """(name, out_ch, in_ch, kernel) in forward order."""
        w1, w2, w3 = self.widths
        return [
            ("enc1.conv1", w1, self.in_channels, 3),
            ("enc1.conv2", w1, w1, 3),
            ("enc2.conv1", w2, w1, 3),
            ("enc2.conv2", w2, w2, 3),
            ("bott.conv1", w3, w2, 3),
            ("bott.conv2", w3, w3, 3),
            ("dec1.conv1", w2, w3 + w2, 3),
            ("dec1.conv2", w2, w2, 3),
            ("dec2.conv1", w1, w2 + w1, 3),
            ("dec2.conv2", w1, w1, 3),
            ("head", 1, w1, 1),
        ]

    def tensor_shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        out = []
        for name, o, i, ksz in self.conv_layers():
            out.append((f"{name}.weight", (o, i, ksz, ksz)))
            out.append((f"{name}.bias", (o,)))
        return out

    def descriptor(self) -> dict:
        return {
            "k": self.k,
            "widths": list(self.widths),
            "tensors": [name for name, _ in self.tensor_shapes()],
        }


@dataclass(frozen=True)
class Model:
    spec: NetSpec
    tensors: dict[str, np.ndarray] = field(repr=False)

    def __post_init__(self):
        frozen = {}
        for name, arr in self.tensors.items():
            arr = np.ascontiguousarray(arr, dtype=np.float32)
            arr.setflags(write=False)
            frozen[name] = arr
        object.__setattr__(self, "tensors", frozen)

    @property
    def k(self) -> int:
        return self.spec.k


def init_model(spec: NetSpec, seed: int, scale: float = 1.0) -> Model:
    """He-style random init; handy for tests and timing runs."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in spec.tensor_shapes():
        if name.endswith(".bias"):
            tensors[name] = np.zeros(shape, dtype=np.float32)
        else:
            fan_in = shape[1] * shape[2] * shape[3]
            std = scale * np.sqrt(2.0 / fan_in)
            tensors[name] = (rng.standard_normal(shape) * std).astype(np.float32)
    return Model(spec=spec, tensors=tensors)


# --- IGPW container ---------------------------------------------------------

def write_igpw(path: str, descriptor: dict, tensors: list[tuple[str, np.ndarray]]) -> None:
    """Write the binary tensor container (magic, version, JSON descriptor,
    then named float32 tensors)."""
    desc_bytes = json.dumps(descriptor).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<I", len(desc_bytes)))
        fh.write(desc_bytes)
        for name, arr in tensors:
            arr = np.ascontiguousarray(arr, dtype=np.float32)
            name_bytes = name.encode("utf-8")
            fh.write(struct.pack("<H", len(name_bytes)))
            fh.write(name_bytes)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.astype("<f4").tobytes())


def read_igpw(path: str) -> tuple[dict, dict[str, np.ndarray]]:
    """Read any IGPW container; returns (descriptor, tensors by name)."""
    with open(path, "rb") as fh:
        data = fh.read()

    def take(n: int, what: str) -> bytes:
        nonlocal pos
        if pos + n > len(data):
            raise TruncatedFile(f"{path}: truncated while reading {what}")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    pos = 0
    if take(4, "magic") != MAGIC:
        raise BadMagic(f"{path}: bad magic")
    (version,) = struct.unpack("<I", take(4, "version"))
    if version != VERSION:
        raise VersionUnsupported(f"{path}: version {version} unsupported")
    (desc_len,) = struct.unpack("<I", take(4, "descriptor length"))
    try:
        descriptor = json.loads(take(desc_len, "descriptor").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise TruncatedFile(f"{path}: unreadable descriptor: {exc}") from exc

    tensors: dict[str, np.ndarray] = {}
    while pos < len(data):
        (name_len,) = struct.unpack("<H", take(2, "tensor name length"))
        name = take(name_len, "tensor name").decode("utf-8")
        (ndim,) = struct.unpack("<B", take(1, f"{name} ndim"))
        dims = struct.unpack(f"<{ndim}I", take(4 * ndim, f"{name} dims"))
        count = int(np.prod(dims)) if ndim else 1
        raw = take(4 * count, f"{name} data")
        tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(dims).copy()
    return descriptor, tensors


def save_weights(model: Model, path: str) -> None:
    ordered = [(name, model.tensors[name]) for name, _ in model.spec.tensor_shapes()]
    write_igpw(path, model.spec.descriptor(), ordered)


def load_weights(path: str) -> Model:
    """Load and validate a weight file against the architecture enumeration."""
    descriptor, tensors = read_igpw(path)
    for key in ("k", "widths", "tensors"):
        if key not in descriptor:
            raise ShapeMismatch(f"{path}: descriptor missing {key!r}")
    spec = NetSpec(k=int(descriptor["k"]), widths=tuple(descriptor["widths"]))

    expected = spec.tensor_shapes()
    expected_names = [name for name, _ in expected]
    if descriptor["tensors"] != expected_names:
        raise ShapeMismatch(f"{path}: tensor order does not match architecture")
    if list(tensors.keys()) != expected_names:
        missing = set(expected_names) - set(tensors)
        extra = set(tensors) - set(expected_names)
        raise ShapeMismatch(f"{path}: tensor set mismatch "
                            f"(missing={sorted(missing)}, extra={sorted(extra)})")
    for name, shape in expected:
        if tensors[name].shape != shape:
            raise ShapeMismatch(
                f"{path}: tensor {name} has shape {tensors[name].shape}, expected {shape}")
    return Model(spec=spec, tensors=tensors)


# --- forward pass -----------------------------------------------------------

def _conv3x3(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    c, h, wd = x.shape
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (3, 3), axis=(1, 2))
    col = win.transpose(1, 2, 0, 3, 4).reshape(h * wd, c * 9)
    out = col @ w.reshape(w.shape[0], -1).T
    out += b
    return np.ascontiguousarray(out.T).reshape(-1, h, wd)


def _conv1x1(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    c, h, wd = x.shape
    out = w.reshape(w.shape[0], c) @ x.reshape(c, h * wd)
    out += b[:, None]
    return out.reshape(-1, h, wd)


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _maxpool2(x: np.ndarray) -> np.ndarray:
    c, h, w = x.shape
    return x.reshape(c, h // 2, 2, w // 2, 2).max(axis=(2, 4))


def _upsample2(x: np.ndarray) -> np.ndarray:
    return np.repeat(np.repeat(x, 2, axis=1), 2, axis=2)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return (1.0 / (1.0 + np.exp(-x))).astype(np.float32)


def forward(model: Model, x: np.ndarray) -> np.ndarray:
    """Run the network on a (4+k, H, W) float32 input; returns (H, W)."""
    t = model.tensors

    def block(prefix: str, h: np.ndarray) -> np.ndarray:
        h = _relu(_conv3x3(h, t[f"{prefix}.conv1.weight"], t[f"{prefix}.conv1.bias"]))
        h = _relu(_conv3x3(h, t[f"{prefix}.conv2.weight"], t[f"{prefix}.conv2.bias"]))
        return h

    h1 = block("enc1", x)
    h2 = block("enc2", _maxpool2(h1))
    hb = block("bott", _maxpool2(h2))
    d1 = block("dec1", np.concatenate([_upsample2(hb), h2], axis=0))
    d2 = block("dec2", np.concatenate([_upsample2(d1), h1], axis=0))
    logits = _conv1x1(d2, t["head.weight"], t["head.bias"])
    return _sigmoid(logits)[0]


def predict(model: Model, channels: np.ndarray, embedding: np.ndarray) -> CostMap:
    """Predict a cost map from occupancy planes and a k-D instruction vector.

    The embedding is broadcast to k constant planes; start/goal never enter,
    so one prediction serves any number of queries on the same map.
    """
    channels = np.asarray(channels, dtype=np.float32)
    if channels.ndim != 3 or channels.shape[0] != 4:
        raise DimensionMismatch(f"expected (4, H, W) channels, got {channels.shape}")
    _, h, w = channels.shape
    if h % 4 or w % 4:
        raise DimensionMismatch(f"H and W must be divisible by 4, got {h}x{w}")
    embedding = np.asarray(embedding, dtype=np.float32).reshape(-1)
    if embedding.shape[0] != model.k:
        raise DimensionMismatch(
            f"embedding length {embedding.shape[0]} != model k {model.k}")

    x = np.empty((4 + model.k, h, w), dtype=np.float32)
    x[:4] = channels
    x[4:] = embedding[:, None, None]
    return CostMap(forward(model, x))
