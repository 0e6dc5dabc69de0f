"""Binary spike-train container (magic "SPK1").

Layout, all little-endian:
    4 bytes  magic "SPK1"
    u16      signal count
    u16      threshold count
    u16      polarity count
    u32      timesteps
    u32      event count
    events   (u16 flat channel, u32 timestep) each

Flat channel = ((signal * thresholds) + threshold) * polarities + polarity
plane, matching SpikeTensor.flat_events().
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .encoding import SpikeTensor
from .errors import ParseError

MAGIC = b"SPK1"
_HEADER = struct.Struct("<HHHII")
_EVENT_DTYPE = np.dtype([("channel", "<u2"), ("timestep", "<u4")])


def write_spikes(path: str | Path, tensor: SpikeTensor) -> None:
    events = tensor.flat_events()
    rec = np.empty(len(events), dtype=_EVENT_DTYPE)
    if len(events):
        rec["channel"] = events[:, 0]
        rec["timestep"] = events[:, 1]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(tensor.n_signals, tensor.n_thresholds,
                              tensor.n_polarities, tensor.timesteps,
                              len(events)))
        fh.write(rec.tobytes())


def read_spikes(path: str | Path) -> SpikeTensor:
    path = Path(path)
    blob = path.read_bytes()
    if blob[:4] != MAGIC:
        raise ParseError(f"{path.name}: bad magic, not a spike file")
    if len(blob) < 4 + _HEADER.size:
        raise ParseError(f"{path.name}: truncated header")
    signals, thresholds, polarities, timesteps, n_events = _HEADER.unpack_from(blob, 4)
    body = blob[4 + _HEADER.size:]
    expected = n_events * _EVENT_DTYPE.itemsize
    if len(body) != expected:
        raise ParseError(
            f"{path.name}: event payload is {len(body)} bytes, expected {expected}"
        )
    rec = np.frombuffer(body, dtype=_EVENT_DTYPE)
    events = np.stack([rec["channel"].astype(np.int64),
                       rec["timestep"].astype(np.int64)], axis=1) \
        if n_events else np.zeros((0, 2), dtype=np.int64)
    if n_events:
        if events[:, 0].max() >= signals * thresholds * polarities:
            raise ParseError(f"{path.name}: event channel out of range")
        if events[:, 1].max() >= timesteps:
            raise ParseError(f"{path.name}: event timestep out of range")
    return SpikeTensor.from_flat_events(events, signals, thresholds,
                                        polarities, timesteps)
