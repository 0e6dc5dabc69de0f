"""Multi-threshold delta-modulation spike encoding.

Each sensor channel is compared sample-to-sample against a ladder of
thresholds; a difference exceeding +/-eps_i emits a spike on the i-th
threshold train with the matching polarity. With 7 channels and 5 thresholds
per channel this yields the 7x5x2 (signal, threshold, polarity) input planes
consumed by the network.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InsufficientDataError

IMU_DEFAULT_BASE = 0.00005
CAP_DEFAULT_BASE = 0.0000125
DEFAULT_THRESHOLD_COUNT = 5

N_SIGNALS = 7
N_POLARITIES = 2  # plane 0 = positive, plane 1 = negative


@dataclass(frozen=True)
class ThresholdBank:
    """Strictly increasing threshold ladder for one sensor modality."""

    base: float
    scheme: str = "geometric"  # "geometric" | "arithmetic"
    count: int = DEFAULT_THRESHOLD_COUNT
    thresholds: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        if self.base <= 0:
            raise ConfigError(f"threshold base must be > 0, got {self.base}")
        if self.count < 1:
            raise ConfigError(f"threshold count must be >= 1, got {self.count}")
        if self.scheme == "geometric":
            values = tuple(self.base * 2 ** i for i in range(self.count))
        elif self.scheme == "arithmetic":
            values = tuple(self.base * (i + 1) for i in range(self.count))
        else:
            raise ConfigError(f"unknown threshold scheme {self.scheme!r}")
        object.__setattr__(self, "thresholds", values)


def build_bank(base: float, scheme: str = "geometric",
               count: int = DEFAULT_THRESHOLD_COUNT) -> ThresholdBank:
    return ThresholdBank(base=base, scheme=scheme, count=count)


def default_banks(scheme: str = "geometric",
                  imu_base: float = IMU_DEFAULT_BASE,
                  cap_base: float = CAP_DEFAULT_BASE,
                  count: int = DEFAULT_THRESHOLD_COUNT) -> dict[str, ThresholdBank]:
    """Bank map for the wrist-sensor layout: IMU channels 0-5, capacitance 6."""
    return {
        "imu": build_bank(imu_base, scheme, count),
        "cap": build_bank(cap_base, scheme, count),
    }


@dataclass(frozen=True)
class SpikeEvent:
    channel: int    # flattened signal*thresholds + threshold index
    timestep: int
    polarity: int   # +1 or -1


class SpikeTensor:
    """Binary spike occupancy of shape (signals, thresholds, polarities, T).

    Cell (s, i, p, t) is True iff channel s crossed threshold i with polarity
    p at timestep t. The dense array and the sparse event list are two views
    of the same data.
    """

    def __init__(self, dense: np.ndarray):
        dense = np.asarray(dense, dtype=bool)
        if dense.ndim != 4:
            raise ConfigError(f"spike tensor must be 4-d, got shape {dense.shape}")
        self.dense = dense

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.dense.shape

    @property
    def n_signals(self) -> int:
        return self.dense.shape[0]

    @property
    def n_thresholds(self) -> int:
        return self.dense.shape[1]

    @property
    def n_polarities(self) -> int:
        return self.dense.shape[2]

    @property
    def timesteps(self) -> int:
        return self.dense.shape[3]

    @property
    def n_channels(self) -> int:
        return self.n_signals * self.n_thresholds * self.n_polarities

    def events(self) -> list[SpikeEvent]:
        """Sparse view: one event per set cell, polarity +1 for plane 0."""
        sig, thr, pol, t = np.nonzero(self.dense)
        order = np.lexsort((pol, thr, sig, t))
        return [
            SpikeEvent(
                channel=int(sig[k]) * self.n_thresholds + int(thr[k]),
                timestep=int(t[k]),
                polarity=+1 if pol[k] == 0 else -1,
            )
            for k in order
        ]

    def flat_events(self) -> np.ndarray:
        """(n_events, 2) array of (flat channel, timestep), sorted by time.

        Flat channel = ((signal * thresholds) + threshold) * polarities +
        polarity plane; the same layout `to_frames` uses and the spike-file
        format stores.
        """
        sig, thr, pol, t = np.nonzero(self.dense)
        chan = ((sig * self.n_thresholds) + thr) * self.n_polarities + pol
        order = np.lexsort((chan, t))
        return np.stack([chan[order], t[order]], axis=1).astype(np.int64)

    def to_frames(self) -> np.ndarray:
        """(T, channels) binary view with C-order channel flattening."""
        s, k, p, t = self.dense.shape
        return self.dense.reshape(s * k * p, t).T

    @classmethod
    def from_flat_events(cls, events: np.ndarray, n_signals: int,
                         n_thresholds: int, n_polarities: int,
                         timesteps: int) -> "SpikeTensor":
        dense = np.zeros((n_signals, n_thresholds, n_polarities, timesteps),
                         dtype=bool)
        if len(events):
            chan = np.asarray(events)[:, 0]
            t = np.asarray(events)[:, 1]
            pol = chan % n_polarities
            rest = chan // n_polarities
            thr = rest % n_thresholds
            sig = rest // n_thresholds
            dense[sig, thr, pol, t] = True
        return cls(dense)

    def __eq__(self, other) -> bool:
        return (isinstance(other, SpikeTensor)
                and self.shape == other.shape
                and bool(np.array_equal(self.dense, other.dense)))


def encode_channel(signal: np.ndarray, bank: ThresholdBank) -> list[SpikeEvent]:
    """Delta-modulate one channel against every threshold in the bank.

    For consecutive raw samples s(t), s(t-1): a difference > eps_i emits a
    positive spike at (threshold i, timestep t-1), a difference < -eps_i the
    negative one. Comparisons are strict, so a difference exactly equal to a
    threshold emits nothing.
    """
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1 or signal.shape[0] < 2:
        raise InsufficientDataError(
            f"signal must be 1-d with >= 2 samples, got shape {signal.shape}"
        )
    diffs = signal[1:] - signal[:-1]
    events: list[SpikeEvent] = []
    for i, eps in enumerate(bank.thresholds):
        for t in np.nonzero(diffs > eps)[0]:
            events.append(SpikeEvent(channel=i, timestep=int(t), polarity=+1))
        for t in np.nonzero(diffs < -eps)[0]:
            events.append(SpikeEvent(channel=i, timestep=int(t), polarity=-1))
    events.sort(key=lambda e: (e.timestep, e.channel, -e.polarity))
    return events


def encode_window(window: np.ndarray,
                  banks: dict[str, ThresholdBank]) -> SpikeTensor:
    """Encode a (rows, 7) sample window into a (7, K, 2, rows-1) tensor."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 2 or window.shape[1] != N_SIGNALS:
        raise ConfigError(f"window must have {N_SIGNALS} columns, got {window.shape}")
    if window.shape[0] < 2:
        raise InsufficientDataError("window needs >= 2 rows to encode")
    for key in ("imu", "cap"):
        if key not in banks:
            raise ConfigError(f"missing threshold bank for modality '{key}'")
    imu, cap = banks["imu"], banks["cap"]
    if imu.count != cap.count:
        raise ConfigError("imu and cap banks must have the same threshold count")

    k = imu.count
    t_len = window.shape[0] - 1
    diffs = window[1:] - window[:-1]              # (T, 7)
    dense = np.zeros((N_SIGNALS, k, N_POLARITIES, t_len), dtype=bool)
    for s in range(N_SIGNALS):
        bank = cap if s == N_SIGNALS - 1 else imu
        eps = np.asarray(bank.thresholds)[:, None]   # (K, 1)
        dense[s, :, 0, :] = diffs[:, s][None, :] > eps
        dense[s, :, 1, :] = diffs[:, s][None, :] < -eps
    return SpikeTensor(dense)


@dataclass(frozen=True)
class SpikeStats:
    counts: np.ndarray  # (signals, thresholds) spike totals over polarity/time
    density: float      # set cells / total cells


def spike_stats(tensor: SpikeTensor) -> SpikeStats:
    counts = tensor.dense.sum(axis=(2, 3)).astype(np.int64)
    total = tensor.dense.size
    density = float(tensor.dense.sum()) / total if total else 0.0
    return SpikeStats(counts=counts, density=density)
