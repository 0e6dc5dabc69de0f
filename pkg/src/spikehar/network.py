"""Network model structure: layer specs, quantized weights, LIF parameters.

Models are feed-forward chains of 3x3 conv (stride 1, zero padding 1, so the
spatial grid is preserved) and dense layers. Weights are signed 8-bit
integers with a per-layer power-of-two scale exponent; axonal delays are
small non-negative integers attached to each neuron's output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ModelError

WEIGHT_MIN, WEIGHT_MAX = -128, 127
DELAY_MAX = 62
STATE_BITS = 24
STATE_MAX = 2 ** (STATE_BITS - 1) - 1
STATE_MIN = -(2 ** (STATE_BITS - 1))
DECAY_SCALE = 4096


@dataclass(frozen=True)
class LifParams:
    """Integer CUBA-LIF parameters shared by every neuron in a model.

    Decay d maps to a per-timestep retention factor (4096 - d) / 4096,
    applied with floor division so both execution backends agree bit-exactly.
    """

    decay_u: int = 1024
    decay_v: int = 128
    v_threshold: int = 64
    refractory_steps: int = 0
    timestep_ms: float = 1.0

    def __post_init__(self):
        if not (0 <= self.decay_u <= DECAY_SCALE):
            raise ConfigError(f"decay_u must be in [0, {DECAY_SCALE}]")
        if not (0 <= self.decay_v <= DECAY_SCALE):
            raise ConfigError(f"decay_v must be in [0, {DECAY_SCALE}]")
        if self.v_threshold <= 0:
            raise ConfigError("v_threshold must be a positive integer")
        if self.refractory_steps < 0:
            raise ConfigError("refractory_steps must be >= 0")
        if self.timestep_ms <= 0:
            raise ConfigError("timestep_ms must be > 0")


@dataclass(frozen=True)
class LayerSpec:
    """Shape contract for one layer.

    conv2d: in_shape/out_shape are (height, width, channels); the 3x3 kernel
    with padding 1 keeps height and width. dense: shapes are (size,).
    """

    kind: str                      # "conv2d" | "dense"
    in_shape: tuple[int, ...]
    out_shape: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in ("conv2d", "dense"):
            raise ConfigError(f"unknown layer kind {self.kind!r}")
        if self.kind == "conv2d" and (len(self.in_shape) != 3 or len(self.out_shape) != 3):
            raise ConfigError("conv2d layers need 3-d (h, w, c) shapes")
        if self.kind == "dense" and (len(self.in_shape) != 1 or len(self.out_shape) != 1):
            raise ConfigError("dense layers need 1-d (size,) shapes")

    @property
    def in_size(self) -> int:
        return int(np.prod(self.in_shape))

    @property
    def out_size(self) -> int:
        return int(np.prod(self.out_shape))

    @property
    def features(self) -> int:
        return self.out_shape[-1] if self.kind == "conv2d" else self.out_shape[0]

    def weight_shape(self) -> tuple[int, ...]:
        if self.kind == "conv2d":
            return (self.out_shape[2], self.in_shape[2], 3, 3)
        return (self.out_shape[0], self.in_shape[0])


@dataclass
class NetworkModel:
    """Quantized feed-forward spiking network.

    weights[l] holds integer weights in [-128, 127] shaped per
    LayerSpec.weight_shape(); exponents[l] is the power-of-two scale mapping
    them back to real values; delays[l] holds one axonal delay per neuron of
    layer l, applied to its outgoing spikes.
    """

    layers: list[LayerSpec]
    weights: list[np.ndarray]
    exponents: list[int]
    delays: list[np.ndarray]
    lif: LifParams = field(default_factory=LifParams)
    class_count: int = 12

    def __post_init__(self):
        self.weights = [np.asarray(w, dtype=np.int64) for w in self.weights]
        self.delays = [np.asarray(d, dtype=np.int64) for d in self.delays]

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    def neuron_counts(self) -> list[int]:
        return [spec.out_size for spec in self.layers]

    def max_delay(self) -> int:
        return max((int(d.max()) for d in self.delays if d.size), default=0)


def validate_model(model: NetworkModel) -> None:
    """Check the full shape chain; raise ModelError at the first problem."""
    if not model.layers:
        raise ModelError("model has no layers")
    if not (len(model.weights) == len(model.exponents) == len(model.delays)
            == model.n_layers):
        raise ModelError("weights/exponents/delays length must match layer count")

    for idx, spec in enumerate(model.layers, start=1):
        if spec.kind == "conv2d":
            if spec.out_shape[:2] != spec.in_shape[:2]:
                raise ModelError(
                    f"shape error at layer {idx}: conv must preserve the "
                    f"{spec.in_shape[:2]} spatial grid, declared {spec.out_shape[:2]}"
                )
        if idx > 1:
            prev = model.layers[idx - 2]
            if spec.kind == "conv2d":
                if prev.kind != "conv2d" or tuple(prev.out_shape) != tuple(spec.in_shape):
                    raise ModelError(
                        f"shape error at layer {idx}: conv input {spec.in_shape} "
                        f"does not match predecessor output {prev.out_shape}"
                    )
            else:
                if spec.in_size != prev.out_size:
                    raise ModelError(
                        f"shape error at layer {idx}: dense input {spec.in_size} "
                        f"does not match flattened predecessor output {prev.out_size}"
                    )

        w = model.weights[idx - 1]
        if tuple(w.shape) != spec.weight_shape():
            raise ModelError(
                f"layer {idx}: weight array shape {w.shape} != {spec.weight_shape()}"
            )
        if w.size and (w.min() < WEIGHT_MIN or w.max() > WEIGHT_MAX):
            raise ModelError(
                f"layer {idx}: weight out of range [{WEIGHT_MIN}, {WEIGHT_MAX}]"
            )
        d = model.delays[idx - 1]
        if d.shape != (spec.out_size,):
            raise ModelError(
                f"layer {idx}: delay array length {d.shape} != neuron count "
                f"({spec.out_size},)"
            )
        if d.size and (d.min() < 0 or d.max() > DELAY_MAX):
            raise ModelError(f"layer {idx}: delay out of range [0, {DELAY_MAX}]")

    last = model.layers[-1]
    if last.out_size != model.class_count:
        raise ModelError(
            f"output size {last.out_size} != class count {model.class_count}"
        )


def classify(counts: np.ndarray) -> int:
    """Argmax over per-class spike counts; ties go to the lowest index."""
    counts = np.asarray(counts)
    if counts.ndim != 1 or counts.size == 0:
        raise ConfigError("counts must be a non-empty vector")
    return int(np.argmax(counts))


def quantize_weights(
    real_weights: list[np.ndarray],
) -> tuple[list[np.ndarray], list[int]]:
    """Quantize real weight arrays to int8 values with power-of-two scales.

    Per layer the exponent e is the smallest integer with max|w| / 2^e <= 127;
    integers are round(w / 2^e) clamped to [-128, 127]. The round-trip error
    |w - int * 2^e| is then at most 2^(e-1) per weight.
    """
    ints, exps = [], []
    for w in real_weights:
        w = np.asarray(w, dtype=np.float64)
        if w.size and not np.all(np.isfinite(w)):
            raise ConfigError("non-finite weight cannot be quantized")
        peak = float(np.max(np.abs(w))) if w.size else 0.0
        if peak == 0.0:
            e = 0
        else:
            e = int(math.ceil(math.log2(peak / WEIGHT_MAX)))
            while peak / 2.0 ** e > WEIGHT_MAX:   # guard log2 rounding
                e += 1
            while e - 1 >= -1074 and peak / 2.0 ** (e - 1) <= WEIGHT_MAX:
                e -= 1
        q = np.clip(np.rint(w / 2.0 ** e), WEIGHT_MIN, WEIGHT_MAX).astype(np.int64)
        ints.append(q)
        exps.append(e)
    return ints, exps


def build_model(
    layer_sizes_or_specs,
    lif: LifParams | None = None,
    weights: list[np.ndarray] | None = None,
    delays: list[np.ndarray] | None = None,
    exponents: list[int] | None = None,
    class_count: int | None = None,
) -> NetworkModel:
    """Assemble a NetworkModel from layer specs, zero-filling missing parts."""
    specs = list(layer_sizes_or_specs)
    lif = lif or LifParams()
    if weights is None:
        weights = [np.zeros(s.weight_shape(), dtype=np.int64) for s in specs]
    if delays is None:
        delays = [np.zeros(s.out_size, dtype=np.int64) for s in specs]
    if exponents is None:
        exponents = [0] * len(specs)
    if class_count is None:
        class_count = specs[-1].out_size
    return NetworkModel(layers=specs, weights=weights, exponents=exponents,
                        delays=delays, lif=lif, class_count=class_count)


def reference_architecture(in_channels: int = 2) -> list[LayerSpec]:
    """The 32C-64C-128D-12D chain over the 7x5 sensor grid."""
    return [
        LayerSpec("conv2d", (7, 5, in_channels), (7, 5, 32)),
        LayerSpec("conv2d", (7, 5, 32), (7, 5, 64)),
        LayerSpec("dense", (2240,), (128,)),
        LayerSpec("dense", (128,), (12,)),
    ]
