"""
SHRED network: stacked LSTM encoder over sensor windows, shallow decoder to
latent coefficients. Forward, loss and exact backpropagation through time in
numpy, plus the versioned `.shred` model container.
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from mhd_shred.errors import CorruptFileError, DimensionError, NumericError, VersionMismatchError
from mhd_shred.schemas import OutputMap, ScalingParams, TrainConfig

MODEL_MAGIC = b"SHREDMDL"
MODEL_VERSION = 1
_PREAMBLE = struct.Struct("<8sIQ")


class ShredArchitecture(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_sensors: int = Field(..., ge=1)
    output_width: int = Field(..., ge=1)
    lag: int = Field(30, ge=1)
    hidden: int = Field(64, ge=1)
    lstm_layers: int = Field(2, ge=1)
    decoder_widths: Tuple[int, ...] = (350, 400)
    dropout: float = Field(0.0, ge=0.0, lt=1.0)
    activation: str = Field("relu", description="Decoder hidden activation: 'relu' or 'linear'")

    @classmethod
    def from_train_config(cls, cfg: TrainConfig, n_sensors: int, output_width: int, lag: int) -> "ShredArchitecture":
        return cls(
            n_sensors=n_sensors,
            output_width=output_width,
            lag=lag,
            hidden=cfg.hidden,
            lstm_layers=cfg.lstm_layers,
            decoder_widths=tuple(cfg.decoder_widths),
            dropout=cfg.dropout,
        )

    def tensor_shapes(self) -> Dict[str, Tuple[int, ...]]:
        """Ordered name -> shape table; this order is the file payload order"""
        H = self.hidden
        shapes: Dict[str, Tuple[int, ...]] = {}
        n_in = self.n_sensors
        for layer in range(self.lstm_layers):
            shapes[f"lstm{layer}.W"] = (4 * H, n_in)
            shapes[f"lstm{layer}.U"] = (4 * H, H)
            shapes[f"lstm{layer}.b"] = (4 * H,)
            n_in = H
        widths = [H, *self.decoder_widths, self.output_width]
        for k in range(len(widths) - 1):
            shapes[f"dec{k}.W"] = (widths[k + 1], widths[k])
            shapes[f"dec{k}.b"] = (widths[k + 1],)
        return shapes

    def parameter_count(self) -> int:
        return int(sum(np.prod(s) for s in self.tensor_shapes().values()))


@dataclass
class ShredModel:
    arch: ShredArchitecture
    params: Dict[str, np.ndarray]
    output_map: Optional[OutputMap] = None
    scaling: Optional[ScalingParams] = None
    provenance: Dict[str, str] = field(default_factory=dict)

    @property
    def n_decoder_layers(self) -> int:
        return len(self.arch.decoder_widths) + 1

    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def copy(self) -> "ShredModel":
        return ShredModel(self.arch, {k: v.copy() for k, v in self.params.items()}, self.output_map,
                          self.scaling, dict(self.provenance))


def init_model(arch: ShredArchitecture, seed: int = 0, output_map: Optional[OutputMap] = None,
               scaling: Optional[ScalingParams] = None) -> ShredModel:
    """Uniform fan-in initialization: +-1/sqrt(H) for LSTM tensors, +-1/sqrt(fan_in) for decoder layers"""
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in arch.tensor_shapes().items():
        if name.startswith("lstm"):
            bound = 1.0 / np.sqrt(arch.hidden)
        else:
            layer = int(name[3:name.index(".")])
            fan_in = ([arch.hidden, *arch.decoder_widths])[layer]
            bound = 1.0 / np.sqrt(fan_in)
        params[name] = rng.uniform(-bound, bound, size=shape)
    return ShredModel(arch, params, output_map, scaling)


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _as_windows(windows, arch: ShredArchitecture) -> np.ndarray:
    x = np.asarray(windows, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3 or x.shape[1:] != (arch.lag, arch.n_sensors):
        raise DimensionError(f"Expected windows of shape (lag={arch.lag}, sensors={arch.n_sensors}), got {np.shape(windows)}")
    return x


def lstm_forward(windows, model: ShredModel, return_cache: bool = False):
    """
    Run the stacked LSTM over (N, lag, n_sensors) windows (or one (lag, n_sensors)
    window) and return the top layer's final hidden state (N, H).

    Gate order in the 4H blocks is input, forget, candidate, output.
    """
    x = _as_windows(windows, model.arch)
    H = model.arch.hidden
    n, steps, _ = x.shape
    seq = x
    caches = []
    for layer in range(model.arch.lstm_layers):
        W = model.params[f"lstm{layer}.W"]
        U = model.params[f"lstm{layer}.U"]
        b = model.params[f"lstm{layer}.b"]
        h = np.zeros((n, H))
        c = np.zeros((n, H))
        out = np.empty((n, steps, H))
        layer_cache = []
        for t in range(steps):
            xt = seq[:, t]
            z = xt @ W.T + h @ U.T + b
            i = sigmoid(z[:, :H])
            f = sigmoid(z[:, H:2 * H])
            g = np.tanh(z[:, 2 * H:3 * H])
            o = sigmoid(z[:, 3 * H:])
            c_new = f * c + i * g
            tc = np.tanh(c_new)
            h_new = o * tc
            if not (np.all(np.isfinite(h_new)) and np.all(np.isfinite(c_new))):
                raise NumericError(f"Non-finite LSTM state in layer {layer}", t)
            if return_cache:
                layer_cache.append((xt, h, c, i, f, g, o, tc))
            h, c = h_new, c_new
            out[:, t] = h
        caches.append(layer_cache)
        seq = out
    top = seq[:, -1]
    return (top, caches) if return_cache else top


def sdn_forward(hidden, model: ShredModel, dropout_masks: Optional[List[np.ndarray]] = None,
                return_cache: bool = False):
    """Shallow decoder: affine + activation per hidden layer, final layer linear"""
    a = np.asarray(hidden, dtype=np.float64)
    if a.ndim == 1:
        a = a[None]
    last = model.n_decoder_layers - 1
    cache = []
    for k in range(model.n_decoder_layers):
        a_in = a
        z = a_in @ model.params[f"dec{k}.W"].T + model.params[f"dec{k}.b"]
        mask = None
        if k < last:
            a = np.maximum(z, 0.0) if model.arch.activation == "relu" else z
            if dropout_masks is not None:
                mask = dropout_masks[k]
                a = a * mask
        else:
            a = z
        cache.append((a_in, z, mask))
    return (a, cache) if return_cache else a


def forward(windows, model: ShredModel) -> np.ndarray:
    return sdn_forward(lstm_forward(windows, model), model)


def loss(predictions, targets) -> float:
    """Mean squared error over every component"""
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape:
        raise DimensionError(f"Predictions {p.shape} and targets {t.shape} differ in shape")
    return float(np.mean((p - t) ** 2))


def backward(windows, targets, model: ShredModel,
             dropout_masks: Optional[List[np.ndarray]] = None) -> Tuple[float, Dict[str, np.ndarray]]:
    """Loss and its exact gradient with respect to every parameter tensor"""
    top, lstm_cache = lstm_forward(windows, model, return_cache=True)
    out, sdn_cache = sdn_forward(top, model, dropout_masks, return_cache=True)
    targets = np.asarray(targets, dtype=np.float64)
    if targets.ndim == 1:
        targets = targets[None]
    value = loss(out, targets)

    grads: Dict[str, np.ndarray] = {}
    g = 2.0 * (out - targets) / out.size
    last = model.n_decoder_layers - 1
    for k in range(last, -1, -1):
        a_in, z, mask = sdn_cache[k]
        if k < last:
            if mask is not None:
                g = g * mask
            if model.arch.activation == "relu":
                g = g * (z > 0.0)
        grads[f"dec{k}.W"] = g.T @ a_in
        grads[f"dec{k}.b"] = g.sum(axis=0)
        g = g @ model.params[f"dec{k}.W"]

    H = model.arch.hidden
    n, steps = top.shape[0], model.arch.lag
    d_seq = np.zeros((n, steps, H))
    d_seq[:, -1] = g
    for layer in range(model.arch.lstm_layers - 1, -1, -1):
        W = model.params[f"lstm{layer}.W"]
        U = model.params[f"lstm{layer}.U"]
        dW = np.zeros_like(W)
        dU = np.zeros_like(U)
        db = np.zeros(4 * H)
        d_in = np.zeros((n, steps, W.shape[1]))
        dh_next = np.zeros((n, H))
        dc_next = np.zeros((n, H))
        for t in range(steps - 1, -1, -1):
            xt, h_prev, c_prev, i, f, gg, o, tc = lstm_cache[layer][t]
            dh = d_seq[:, t] + dh_next
            do = dh * tc
            dc = dh * o * (1.0 - tc ** 2) + dc_next
            dz = np.concatenate([
                dc * gg * i * (1.0 - i),
                dc * c_prev * f * (1.0 - f),
                dc * i * (1.0 - gg ** 2),
                do * o * (1.0 - o),
            ], axis=1)
            dc_next = dc * f
            dW += dz.T @ xt
            dU += dz.T @ h_prev
            db += dz.sum(axis=0)
            d_in[:, t] = dz @ W
            dh_next = dz @ U
        grads[f"lstm{layer}.W"] = dW
        grads[f"lstm{layer}.U"] = dU
        grads[f"lstm{layer}.b"] = db
        d_seq = d_in
    return value, {name: grads[name] for name in model.params}


@dataclass
class Prediction:
    latent: Dict[str, np.ndarray]
    parameter: Optional[float]
    raw: np.ndarray


def predict(model: ShredModel, window) -> Prediction:
    """One (lag, n_sensors) window -> latent blocks (+ normalized |B| estimate)"""
    window = np.asarray(window, dtype=np.float64)
    if window.shape != (model.arch.lag, model.arch.n_sensors):
        raise DimensionError(f"Window must be ({model.arch.lag}, {model.arch.n_sensors}), got {window.shape}")
    raw = forward(window, model)[0]
    if model.output_map is None:
        return Prediction(latent={"output": raw}, parameter=None, raw=raw)
    latent = {b.name: raw[b.start:b.stop] for b in model.output_map.blocks}
    idx = model.output_map.param_index
    return Prediction(latent=latent, parameter=None if idx is None else float(raw[idx]), raw=raw)


def predict_batch(model: ShredModel, windows, chunk: int = 256) -> np.ndarray:
    x = _as_windows(windows, model.arch)
    return np.concatenate([forward(x[s:s + chunk], model) for s in range(0, x.shape[0], chunk)])


class _TensorEntry(BaseModel):
    name: str
    shape: List[int]


class ModelHeader(BaseModel):
    architecture: ShredArchitecture
    tensors: List[_TensorEntry]
    parameter_count: int
    output_map: Optional[OutputMap] = None
    scaling: Optional[ScalingParams] = None
    provenance: Dict[str, str] = Field(default_factory=dict)


def save_model(model: ShredModel, path: Union[str, Path]) -> Path:
    """magic, u32 version, u64 header length, JSON header, little-endian f64 tensors"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = ModelHeader(
        architecture=model.arch,
        tensors=[_TensorEntry(name=k, shape=list(v.shape)) for k, v in model.params.items()],
        parameter_count=model.parameter_count(),
        output_map=model.output_map,
        scaling=model.scaling,
        provenance=model.provenance,
    ).model_dump_json().encode("utf-8")
    with open(path, "wb") as f:
        f.write(_PREAMBLE.pack(MODEL_MAGIC, MODEL_VERSION, len(header)))
        f.write(header)
        for v in model.params.values():
            f.write(np.ascontiguousarray(v, dtype="<f8").tobytes())
    return path


def load_model(path: Union[str, Path]) -> ShredModel:
    raw = Path(path).read_bytes()
    if len(raw) < _PREAMBLE.size:
        raise CorruptFileError(f"{path}: shorter than the model preamble")
    magic, version, header_len = _PREAMBLE.unpack_from(raw)
    if magic != MODEL_MAGIC:
        raise CorruptFileError(f"{path}: not a SHRED model file")
    if version != MODEL_VERSION:
        raise VersionMismatchError(f"{path}: model format version {version}, expected {MODEL_VERSION}")
    start = _PREAMBLE.size
    if len(raw) < start + header_len:
        raise CorruptFileError(f"{path}: truncated header")
    try:
        header = ModelHeader.model_validate_json(raw[start:start + header_len])
    except ValidationError as e:
        raise CorruptFileError(f"{path}: unreadable header ({e.error_count()} errors)") from e
    table = [(t.name, tuple(t.shape)) for t in header.tensors]
    if table != list(header.architecture.tensor_shapes().items()):
        raise CorruptFileError(f"{path}: tensor table does not match the stored architecture")

    offset = start + header_len
    expected = offset + 8 * sum(int(np.prod(t.shape)) for t in header.tensors)
    if len(raw) != expected:
        raise CorruptFileError(f"{path}: {len(raw)} bytes, expected {expected}")
    params = {}
    for t in header.tensors:
        count = int(np.prod(t.shape))
        params[t.name] = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(t.shape).astype(np.float64)
        offset += 8 * count
    return ShredModel(header.architecture, params, header.output_map, header.scaling, dict(header.provenance))
