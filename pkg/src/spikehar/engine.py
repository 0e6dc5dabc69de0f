"""Integer CUBA-LIF execution: dense reference and event-driven backends.

Both backends step the same per-neuron update in the same order, entirely in
int64 arithmetic, so their outputs are bit-identical by construction:

    u <- floor(u * (4096 - decay_u) / 4096) + sum(w * delivered_spike)
    v <- floor(v * (4096 - decay_v) / 4096) + u
    spike iff v >= v_threshold, then v <- 0

A refractory neuron only decays its current and holds v at 0 until the
countdown ends; synaptic input arriving meanwhile is dropped. Axonal delays
shift each neuron's outgoing spikes; a layer's recorded raster is what the
downstream layer actually sees (post-delay), and spikes delayed past the end
of the run are lost.

The dense backend updates every neuron every timestep. The event-driven
backend touches only neurons that hold non-zero state or receive input this
timestep, which is exact: a neuron at rest with no input stays at rest.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .encoding import SpikeTensor
from .errors import ModelError, SaturationError
from .network import (DECAY_SCALE, STATE_MAX, STATE_MIN, LayerSpec,
                      NetworkModel, validate_model)


def unroll_layer_matrix(spec: LayerSpec, weights: np.ndarray) -> np.ndarray:
    """Expand a layer's weights to a dense (out_size, in_size) int64 matrix.

    Conv layers use 3x3 kernels, stride 1, zero padding 1; cell indices
    flatten (h, w, c) in C order on both sides.
    """
    w = np.asarray(weights, dtype=np.int64)
    if spec.kind == "dense":
        return w.copy()
    h, wd, c_in = spec.in_shape
    c_out = spec.out_shape[2]
    mat = np.zeros((spec.out_size, spec.in_size), dtype=np.int64)
    for oh in range(h):
        for ow in range(wd):
            for kh in range(3):
                ih = oh + kh - 1
                if not 0 <= ih < h:
                    continue
                for kw in range(3):
                    iw = ow + kw - 1
                    if not 0 <= iw < wd:
                        continue
                    o_base = (oh * wd + ow) * c_out
                    i_base = (ih * wd + iw) * c_in
                    mat[o_base:o_base + c_out, i_base:i_base + c_in] = w[:, :, kh, kw]
    return mat


def input_fanout(spec: LayerSpec) -> np.ndarray:
    """Structural fanout of each input cell of a layer (synapses per spike).

    Dense: every input reaches every output. Conv: an input cell reaches the
    output positions whose 3x3 window covers it, times the output channels;
    border cells reach fewer positions.
    """
    if spec.kind == "dense":
        return np.full(spec.in_size, spec.out_size, dtype=np.int64)
    h, wd, c_in = spec.in_shape
    c_out = spec.out_shape[2]
    fan = np.zeros(spec.in_size, dtype=np.int64)
    for ih in range(h):
        rows = sum(1 for kh in range(3) if 0 <= ih - kh + 1 < h)
        for iw in range(wd):
            cols = sum(1 for kw in range(3) if 0 <= iw - kw + 1 < wd)
            base = (ih * wd + iw) * c_in
            fan[base:base + c_in] = rows * cols * c_out
    return fan


@dataclass
class EngineState:
    """Mutable per-run state: neuron variables plus delay ring buffers."""

    u: list[np.ndarray]
    v: list[np.ndarray]
    refractory: list[np.ndarray]
    rings: list[np.ndarray]     # (ring_len, out_size) bool, delivered spikes
    tick: int = 0


class Engine:
    """Precomputed execution context for one immutable NetworkModel."""

    def __init__(self, model: NetworkModel):
        validate_model(model)
        self.model = model
        self.matrices = [unroll_layer_matrix(s, w)
                         for s, w in zip(model.layers, model.weights)]
        self.fanouts = [input_fanout(s) for s in model.layers]
        self.ring_lens = [int(d.max()) + 1 if d.size else 1 for d in model.delays]

    def init_state(self) -> EngineState:
        sizes = self.model.neuron_counts()
        return EngineState(
            u=[np.zeros(n, dtype=np.int64) for n in sizes],
            v=[np.zeros(n, dtype=np.int64) for n in sizes],
            refractory=[np.zeros(n, dtype=np.int64) for n in sizes],
            rings=[np.zeros((rl, n), dtype=bool)
                   for rl, n in zip(self.ring_lens, sizes)],
        )

    def _update_layer(self, state: EngineState, layer: int,
                      syn: np.ndarray, sel: np.ndarray | None = None) -> np.ndarray:
        """Advance one layer one timestep; returns the emitted spike mask.

        `sel` restricts the update to an index subset (event backend); the
        arithmetic is identical either way.
        """
        lif = self.model.lif
        au, av = DECAY_SCALE - lif.decay_u, DECAY_SCALE - lif.decay_v
        u, v, refr = state.u[layer], state.v[layer], state.refractory[layer]
        if sel is None:
            u_s, v_s, refr_s, syn_s = u, v, refr, syn
        else:
            u_s, v_s, refr_s, syn_s = u[sel], v[sel], refr[sel], syn[sel]

        in_refr = refr_s > 0
        u_s = u_s * au // DECAY_SCALE
        u_s = np.where(in_refr, u_s, u_s + syn_s)
        v_s = np.where(in_refr, 0, v_s * av // DECAY_SCALE + u_s)
        refr_s = np.where(in_refr, refr_s - 1, refr_s)

        spikes_s = ~in_refr & (v_s >= lif.v_threshold)
        if spikes_s.any():
            v_s = np.where(spikes_s, 0, v_s)
            if lif.refractory_steps > 0:
                refr_s = np.where(spikes_s, lif.refractory_steps, refr_s)

        bad = (u_s > STATE_MAX) | (u_s < STATE_MIN) | (v_s > STATE_MAX) | (v_s < STATE_MIN)
        if bad.any():
            k = int(np.argmax(bad))
            neuron = k if sel is None else int(sel[k])
            value = int(u_s[k]) if not (STATE_MIN <= u_s[k] <= STATE_MAX) else int(v_s[k])
            raise SaturationError(layer=layer, neuron=neuron, value=value)

        if sel is None:
            state.u[layer], state.v[layer], state.refractory[layer] = u_s, v_s, refr_s
            return spikes_s
        u[sel], v[sel], refr[sel] = u_s, v_s, refr_s
        full = np.zeros(u.shape[0], dtype=bool)
        full[sel[spikes_s]] = True
        return full

    def _schedule(self, state: EngineState, layer: int, emitted: np.ndarray) -> None:
        idx = np.nonzero(emitted)[0]
        if idx.size == 0:
            return
        ring = state.rings[layer]
        slots = (state.tick + self.model.delays[layer][idx]) % ring.shape[0]
        ring[slots, idx] = True

    def step_dense(self, state: EngineState,
                   input_spikes: np.ndarray) -> np.ndarray:
        """One network-wide timestep; returns the delivered output spikes.

        Layers are processed in order within the tick, so a zero-delay chain
        propagates a spike through every layer in the same timestep.
        """
        feed = np.asarray(input_spikes, dtype=bool)
        if feed.shape != (self.model.layers[0].in_size,):
            raise ModelError(
                f"input vector length {feed.shape} != network input size "
                f"({self.model.layers[0].in_size},)"
            )
        for layer in range(self.model.n_layers):
            if layer > 0:
                slot = state.tick % self.ring_lens[layer - 1]
                feed = state.rings[layer - 1][slot].copy()
                state.rings[layer - 1][slot] = False
            syn = self.matrices[layer] @ feed.astype(np.int64)
            emitted = self._update_layer(state, layer, syn)
            self._schedule(state, layer, emitted)
        last = self.model.n_layers - 1
        slot = state.tick % self.ring_lens[last]
        out = state.rings[last][slot].copy()
        state.rings[last][slot] = False
        state.tick += 1
        return out

    def run_dense(self, tensor: SpikeTensor) -> "RunResult":
        frames = self._frames(tensor)
        t_len = frames.shape[0]
        state = self.init_state()
        rasters = [np.zeros((t_len, n), dtype=bool)
                   for n in self.model.neuron_counts()]
        for t in range(t_len):
            feed = frames[t]
            for layer in range(self.model.n_layers):
                if layer > 0:
                    slot = state.tick % self.ring_lens[layer - 1]
                    feed = state.rings[layer - 1][slot].copy()
                    state.rings[layer - 1][slot] = False
                    rasters[layer - 1][t] = feed
                syn = self.matrices[layer] @ feed.astype(np.int64)
                emitted = self._update_layer(state, layer, syn)
                self._schedule(state, layer, emitted)
            last = self.model.n_layers - 1
            slot = state.tick % self.ring_lens[last]
            rasters[last][t] = state.rings[last][slot]
            state.rings[last][slot] = False
            state.tick += 1
        return RunResult(
            counts=rasters[-1].sum(axis=0).astype(np.int64),
            input_frames=frames,
            rasters=rasters,
            backend="dense",
            active_neuron_updates=None,
            model=self.model,
        )

    def run_event_driven(self, tensor: SpikeTensor) -> "RunResult":
        frames = self._frames(tensor)
        t_len = frames.shape[0]
        state = self.init_state()
        n_layers = self.model.n_layers
        sizes = self.model.neuron_counts()
        rasters = [np.zeros((t_len, n), dtype=bool) for n in sizes]
        active = [np.zeros(n, dtype=bool) for n in sizes]
        updates = 0

        for t in range(t_len):
            in_idx = np.nonzero(frames[t])[0]
            for layer in range(n_layers):
                if layer > 0:
                    slot = state.tick % self.ring_lens[layer - 1]
                    delivered = state.rings[layer - 1][slot]
                    rasters[layer - 1][t] = delivered
                    in_idx = np.nonzero(delivered)[0]
                    state.rings[layer - 1][slot] = False
                syn = np.zeros(sizes[layer], dtype=np.int64)
                if in_idx.size:
                    syn = self.matrices[layer][:, in_idx].sum(axis=1)
                touched = active[layer] | (syn != 0)
                sel = np.nonzero(touched)[0]
                if sel.size:
                    updates += sel.size
                    emitted = self._update_layer(state, layer, syn, sel=sel)
                    self._schedule(state, layer, emitted)
                    still = ((state.u[layer][sel] != 0)
                             | (state.v[layer][sel] != 0)
                             | (state.refractory[layer][sel] != 0))
                    active[layer][sel] = still
            last = n_layers - 1
            slot = state.tick % self.ring_lens[last]
            rasters[last][t] = state.rings[last][slot]
            state.rings[last][slot] = False
            state.tick += 1
        return RunResult(
            counts=rasters[-1].sum(axis=0).astype(np.int64),
            input_frames=frames,
            rasters=rasters,
            backend="event",
            active_neuron_updates=updates,
            model=self.model,
        )

    def _frames(self, tensor: SpikeTensor) -> np.ndarray:
        frames = tensor.to_frames()
        if frames.shape[1] != self.model.layers[0].in_size:
            raise ModelError(
                f"spike tensor has {frames.shape[1]} channels, network input "
                f"is {self.model.layers[0].in_size}"
            )
        return frames


@dataclass
class RunResult:
    """Outputs of one inference run.

    rasters[l] holds layer l's delivered spikes, shape (T, neurons); counts
    sums the final layer's raster per class. active_neuron_updates is the
    number of neuron updates the event backend actually performed (None for
    the dense backend, which always performs neurons x timesteps).
    """

    counts: np.ndarray
    input_frames: np.ndarray
    rasters: list[np.ndarray]
    backend: str
    active_neuron_updates: int | None
    model: NetworkModel = field(repr=False, default=None)

    @property
    def timesteps(self) -> int:
        return self.input_frames.shape[0]


def init_state(model: NetworkModel) -> EngineState:
    return Engine(model).init_state()


def step_dense(model: NetworkModel, state: EngineState,
               input_spikes: np.ndarray) -> tuple[EngineState, np.ndarray]:
    """Single-timestep dense update; returns (state, delivered output spikes)."""
    out = Engine(model).step_dense(state, input_spikes)
    return state, out


def run_dense(model: NetworkModel, tensor: SpikeTensor) -> RunResult:
    return Engine(model).run_dense(tensor)


def run_event_driven(model: NetworkModel, tensor: SpikeTensor) -> RunResult:
    return Engine(model).run_event_driven(tensor)
