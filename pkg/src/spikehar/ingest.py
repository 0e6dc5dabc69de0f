"""Loading, resampling, and windowing of multi-channel sensor recordings.

A recording is a (time x 7) matrix of IMU + body-capacitance samples with a
per-row activity label. Recordings are resampled to the simulation rate and
sliced into fixed-length classification windows before spike encoding.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, InsufficientDataError, ParseError, SchemaError

CHANNELS = ("acc_x", "acc_y", "acc_z", "gyr_x", "gyr_y", "gyr_z", "cap")
IMU_CHANNELS = CHANNELS[:6]
CAP_CHANNEL = CHANNELS[6]
LABEL_COLUMN = "label"
CLASS_COUNT = 12


@dataclass
class RawRecording:
    subject_id: str
    session_id: str
    sample_rate_hz: float
    channels: tuple[str, ...]
    samples: np.ndarray  # (n_rows, n_channels) float64
    labels: np.ndarray   # (n_rows,) int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.sample_rate_hz <= 0:
            raise ConfigError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
        if self.samples.ndim != 2 or self.samples.shape[1] != len(self.channels):
            raise SchemaError(
                f"samples must be (rows, {len(self.channels)}), got {self.samples.shape}"
            )
        if self.samples.shape[0] < 2:
            raise InsufficientDataError(
                f"recording needs >= 2 rows, got {self.samples.shape[0]}"
            )
        if self.labels.shape[0] != self.samples.shape[0]:
            raise SchemaError("labels length must equal sample row count")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return (self.n_samples - 1) / self.sample_rate_hz


@dataclass(frozen=True)
class ResampleSpec:
    target_rate_hz: float = 1000.0
    method: str = "cubic_spline"  # "cubic_spline" | "linear"

    def __post_init__(self):
        if self.target_rate_hz <= 0:
            raise ConfigError(f"target_rate_hz must be > 0, got {self.target_rate_hz}")
        if self.method not in ("cubic_spline", "linear"):
            raise ConfigError(f"unknown resample method {self.method!r}")


@dataclass(frozen=True)
class WindowSpec:
    window_s: float = 2.0
    stride_s: float = 2.0
    label_rule: str = "majority"  # "majority" | "center_sample"

    def __post_init__(self):
        if self.window_s <= 0 or self.stride_s <= 0:
            raise ConfigError("window_s and stride_s must be > 0")
        if self.label_rule not in ("majority", "center_sample"):
            raise ConfigError(f"unknown label_rule {self.label_rule!r}")


def _parse_ids_from_stem(stem: str) -> tuple[str, str]:
    # File naming convention "<subject>__<session>.csv"; bare stems become
    # subject with session "0".
    if "__" in stem:
        subject, session = stem.split("__", 1)
        return subject, session
    return stem, "0"


def load_csv(
    path: str | Path,
    schema: tuple[str, ...] = CHANNELS,
    rate_hz: float | None = None,
    subject_id: str | None = None,
    session_id: str | None = None,
) -> RawRecording:
    """Parse one recording CSV into a RawRecording.

    The file holds one header row (`<channel...>,label`), numeric body rows,
    and optionally a `# rate_hz=<value>` comment line before the header. An
    explicit `rate_hz` argument overrides the file comment.
    """
    path = Path(path)
    file_rate = None
    header = None
    rows: list[list[float]] = []
    labels: list[int] = []

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row:
                continue
            if row[0].lstrip().startswith("#"):
                text = ",".join(row).lstrip("# ").strip()
                if text.startswith("rate_hz="):
                    try:
                        file_rate = float(text.split("=", 1)[1])
                    except ValueError:
                        raise ParseError(f"{path.name}: bad rate_hz comment on line {lineno}")
                continue
            if header is None:
                header = [c.strip() for c in row]
                for name in schema:
                    if name not in header:
                        raise SchemaError(f"{path.name}: missing column '{name}'")
                if LABEL_COLUMN not in header:
                    raise SchemaError(f"{path.name}: missing column '{LABEL_COLUMN}'")
                col_idx = [header.index(name) for name in schema]
                label_idx = header.index(LABEL_COLUMN)
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{path.name}: line {lineno} has {len(row)} fields, expected {len(header)}"
                )
            try:
                rows.append([float(row[i]) for i in col_idx])
            except ValueError:
                bad = next(name for i, name in zip(col_idx, schema)
                           if not _is_float(row[i]))
                raise ParseError(
                    f"{path.name}: non-numeric value in column '{bad}' on line {lineno}"
                )
            try:
                labels.append(int(float(row[label_idx])))
            except ValueError:
                raise ParseError(
                    f"{path.name}: non-numeric label on line {lineno}"
                )

    if header is None:
        raise SchemaError(f"{path.name}: no header row found")
    if len(rows) < 2:
        raise InsufficientDataError(f"{path.name}: fewer than 2 data rows")

    rate = rate_hz if rate_hz is not None else file_rate
    if rate is None:
        raise ConfigError(
            f"{path.name}: no '# rate_hz=' comment and no rate_hz supplied"
        )

    sub, ses = _parse_ids_from_stem(path.stem)
    return RawRecording(
        subject_id=subject_id if subject_id is not None else sub,
        session_id=session_id if session_id is not None else ses,
        sample_rate_hz=float(rate),
        channels=tuple(schema),
        samples=np.array(rows, dtype=np.float64),
        labels=np.array(labels, dtype=np.int64),
    )


def _is_float(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def save_csv(rec: RawRecording, path: str | Path) -> None:
    """Write a recording in the same CSV dialect load_csv reads.

    Floats are written with 17 significant digits so a load/save/load
    round-trip reproduces bit-identical sample values.
    """
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# rate_hz={rec.sample_rate_hz:.17g}\n")
        fh.write(",".join(rec.channels) + f",{LABEL_COLUMN}\n")
        for row, label in zip(rec.samples, rec.labels):
            fh.write(",".join(f"{x:.17g}" for x in row) + f",{int(label)}\n")


def resample(rec: RawRecording, spec: ResampleSpec) -> RawRecording:
    """Interpolate every channel onto a uniform grid at the target rate.

    The output grid spans exactly the input duration (endpoints included),
    with floor(duration * target_rate) + 1 samples. Labels are carried over
    by nearest-neighbor lookup in time.
    """
    duration = rec.duration_s
    n_out = int(math.floor(duration * spec.target_rate_hz)) + 1
    t_in = np.arange(rec.n_samples) / rec.sample_rate_hz
    t_out = np.linspace(0.0, duration, n_out)

    out = np.empty((n_out, len(rec.channels)), dtype=np.float64)
    for c in range(len(rec.channels)):
        if spec.method == "cubic_spline":
            out[:, c] = CubicSpline(t_in, rec.samples[:, c])(t_out)
        else:
            out[:, c] = np.interp(t_out, t_in, rec.samples[:, c])
    # Endpoints are knots; force exact equality against interpolator noise.
    out[0] = rec.samples[0]
    out[-1] = rec.samples[-1]

    nearest = np.clip(np.rint(t_out * rec.sample_rate_hz).astype(np.int64),
                      0, rec.n_samples - 1)
    return RawRecording(
        subject_id=rec.subject_id,
        session_id=rec.session_id,
        sample_rate_hz=spec.target_rate_hz,
        channels=rec.channels,
        samples=out,
        labels=rec.labels[nearest],
    )


def slice_windows(
    rec: RawRecording, spec: WindowSpec
) -> list[tuple[np.ndarray, int]]:
    """Cut a recording into fixed-length windows with one label each.

    Windows start at 0, stride, 2*stride, ... samples; a recording shorter
    than one window yields an empty list.
    """
    win_len = int(math.floor(spec.window_s * rec.sample_rate_hz))
    stride = int(math.floor(spec.stride_s * rec.sample_rate_hz))
    if win_len < 2:
        raise ConfigError(f"window of {win_len} samples is too short to encode")
    if rec.n_samples < win_len:
        return []

    out = []
    for start in range(0, rec.n_samples - win_len + 1, stride):
        window = rec.samples[start:start + win_len]
        labels = rec.labels[start:start + win_len]
        if spec.label_rule == "majority":
            label = int(np.bincount(labels).argmax())
        else:
            label = int(labels[win_len // 2])
        out.append((window, label))
    return out
