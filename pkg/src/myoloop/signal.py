"""Raw EMG streams, sliding windows, and per-channel feature extraction.

A stream is a contiguous multichannel recording at a fixed sample rate.
Windowing slides a 200 ms window forward in 50 ms steps (defaults); each
window yields one feature vector with six features per channel:

    MAV  mean absolute value
    WL   waveform length (sum of absolute first differences)
    ZC   zero crossings (sign flips, optional amplitude dead-band)
    SSC  slope sign changes (optional dead-band)
    MNF  mean frequency of the mean-removed spectrum
    MDF  median frequency of the mean-removed spectrum

Values are concatenated channel-major: all six features of channel 0 first.
Frequency features of an all-zero (or constant) window are 0 by convention.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .errors import StreamFormatError

FEATURE_NAMES: tuple[str, ...] = ("mav", "wl", "zc", "ssc", "mnf", "mdf")
FEATURES_PER_CHANNEL = len(FEATURE_NAMES)

DEFAULT_SAMPLE_RATE = 200.0
DEFAULT_WINDOW_MS = 200
DEFAULT_STEP_MS = 50

EMG_FORMAT_VERSION = "emg/v1"


@dataclass(frozen=True)
class EmgSample:
    """One multichannel sample: amplitudes plus milliseconds since stream start."""

    channels: tuple[float, ...]
    timestamp_ms: float


@dataclass
class EmgStream:
    """Contiguous recording: ``data`` is (n_samples, n_channels) float64."""

    data: np.ndarray
    rate: float

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise StreamFormatError("stream data must be 2-D (samples x channels)")
        if self.rate <= 0:
            raise StreamFormatError("sample rate must be positive")

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    @property
    def n_channels(self) -> int:
        return self.data.shape[1]

    @property
    def duration_ms(self) -> float:
        return self.n_samples * 1000.0 / self.rate

    def timestamps_ms(self) -> np.ndarray:
        return np.arange(self.n_samples) * (1000.0 / self.rate)

    def samples(self) -> Iterator[EmgSample]:
        step = 1000.0 / self.rate
        for i in range(self.n_samples):
            yield EmgSample(tuple(self.data[i]), i * step)

    @classmethod
    def from_samples(cls, samples: Iterable[EmgSample], rate: float) -> "EmgStream":
        rows = []
        n_channels = None
        last_t = -np.inf
        for i, s in enumerate(samples):
            if n_channels is None:
                n_channels = len(s.channels)
            elif len(s.channels) != n_channels:
                raise StreamFormatError(
                    f"sample {i} has {len(s.channels)} channels, expected {n_channels}"
                )
            if s.timestamp_ms <= last_t:
                raise StreamFormatError(f"timestamps not strictly increasing at sample {i}")
            last_t = s.timestamp_ms
            rows.append(s.channels)
        if not rows:
            return cls(np.empty((0, 0 if n_channels is None else n_channels)), rate)
        return cls(np.asarray(rows, dtype=np.float64), rate)

    def concat(self, other: "EmgStream") -> "EmgStream":
        if other.n_channels != self.n_channels:
            raise StreamFormatError(
                f"cannot concatenate streams with {self.n_channels} and {other.n_channels} channels"
            )
        if other.rate != self.rate:
            raise StreamFormatError("cannot concatenate streams with different rates")
        return EmgStream(np.vstack([self.data, other.data]), self.rate)


@dataclass
class EmgWindow:
    """One analysis window: ``samples`` is (W, n_channels)."""

    samples: np.ndarray
    rate: float
    start_ms: float
    window_ms: int = DEFAULT_WINDOW_MS
    step_ms: int = DEFAULT_STEP_MS

    @property
    def n_channels(self) -> int:
        return self.samples.shape[1]

    @property
    def end_ms(self) -> float:
        return self.start_ms + self.window_ms


@dataclass(frozen=True)
class FeatureConfig:
    """Windowing and feature parameters.

    ``zc_threshold``/``ssc_threshold`` are amplitude dead-bands (0 disables).
    ``window_samples(window_ms)`` must be an integer for the configured rate.
    """

    sample_rate: float = DEFAULT_SAMPLE_RATE
    window_ms: int = DEFAULT_WINDOW_MS
    step_ms: int = DEFAULT_STEP_MS
    zc_threshold: float = 0.0
    ssc_threshold: float = 0.0
    n_channels: int = 8

    @property
    def dim(self) -> int:
        return self.n_channels * FEATURES_PER_CHANNEL

    @property
    def window_samples(self) -> int:
        return _samples_for(self.window_ms, self.sample_rate)

    @property
    def step_samples(self) -> int:
        return _samples_for(self.step_ms, self.sample_rate)

    @property
    def decisions_per_second(self) -> float:
        return 1000.0 / self.step_ms


@dataclass
class FeatureVector:
    """d-dimensional window representation, optionally labeled for calibration."""

    values: np.ndarray
    label: str | None = None
    position: int | None = None
    t_ms: float | None = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature values must be finite")


def _samples_for(ms: int, rate: float) -> int:
    exact = ms * rate / 1000.0
    n = round(exact)
    if abs(exact - n) > 1e-9 or n <= 0:
        raise ValueError(f"{ms} ms is not an integer number of samples at {rate} Hz")
    return int(n)


def window_stream(
    stream: EmgStream | Iterable[EmgSample],
    window_ms: int = DEFAULT_WINDOW_MS,
    step_ms: int = DEFAULT_STEP_MS,
    rate: float | None = None,
) -> list[EmgWindow]:
    """Split a stream into overlapping windows.

    The k-th window starts at ``k * step_ms``; a partial trailing window is
    discarded. ``window_ms`` must be a multiple of ``step_ms``. Returns an
    empty list when the stream is shorter than one window.
    """
    if not isinstance(stream, EmgStream):
        if rate is None:
            raise ValueError("rate is required when passing a raw sample sequence")
        stream = EmgStream.from_samples(stream, rate)
    if window_ms % step_ms != 0:
        raise ValueError(f"window_ms={window_ms} is not a multiple of step_ms={step_ms}")
    w = _samples_for(window_ms, stream.rate)
    s = _samples_for(step_ms, stream.rate)
    n = stream.n_samples
    if n < w:
        return []
    count = (n - w) // s + 1
    out = []
    for k in range(count):
        lo = k * s
        out.append(
            EmgWindow(
                samples=stream.data[lo : lo + w],
                rate=stream.rate,
                start_ms=lo * 1000.0 / stream.rate,
                window_ms=window_ms,
                step_ms=step_ms,
            )
        )
    return out


def features_from_array(arr: np.ndarray, rate: float, config: FeatureConfig) -> np.ndarray:
    """Feature vector for one window given as a (W, C) array.

    Channel-major concatenation of ``FEATURE_NAMES``; see module docstring for
    definitions. The all-zero window is legal: time-domain features are 0 and
    frequency features are defined as 0.
    """
    # fresh C-order copy: keeps results bit-identical regardless of the
    # caller's memory layout (live chunks vs views into replayed files)
    x = np.array(arr, dtype=np.float64, order="C", copy=True)
    if x.ndim != 2 or x.shape[0] < 3:
        raise ValueError("window must be (W, C) with W >= 3")

    mav = np.mean(np.abs(x), axis=0)

    dx = np.diff(x, axis=0)
    wl = np.sum(np.abs(dx), axis=0)

    prod = x[:-1] * x[1:]
    zc = np.sum((prod < 0) & (np.abs(x[:-1] - x[1:]) >= config.zc_threshold), axis=0)

    d1 = x[1:-1] - x[:-2]
    d2 = x[1:-1] - x[2:]
    ssc_mask = (d1 * d2 > 0) & (
        (np.abs(d1) >= config.ssc_threshold) | (np.abs(d2) >= config.ssc_threshold)
    )
    ssc = np.sum(ssc_mask, axis=0)

    # Spectrum of the mean-removed window, rectangular taper.
    xm = x - np.mean(x, axis=0, keepdims=True)
    spec = np.fft.rfft(xm, axis=0)
    power = np.abs(spec) ** 2
    freqs = np.fft.rfftfreq(x.shape[0], d=1.0 / rate)
    total = np.sum(power, axis=0)
    safe_total = np.where(total > 0, total, 1.0)
    mnf = np.where(total > 0, freqs @ power / safe_total, 0.0)

    cum = np.cumsum(power, axis=0)
    half = total / 2.0
    # Smallest bin where cumulative power reaches half the total.
    idx = np.argmax(cum >= half[None, :], axis=0)
    mdf = np.where(total > 0, freqs[idx], 0.0)

    feats = np.stack([mav, wl, zc.astype(np.float64), ssc.astype(np.float64), mnf, mdf])
    return feats.T.reshape(-1)


def extract_features(window: EmgWindow, config: FeatureConfig | None = None) -> FeatureVector:
    """Feature vector for one window (see ``features_from_array``)."""
    cfg = config or FeatureConfig()
    values = features_from_array(window.samples, window.rate, cfg)
    return FeatureVector(values=values, t_ms=window.end_ms)


def feature_matrix(stream: EmgStream, config: FeatureConfig | None = None) -> np.ndarray:
    """(n_windows, d) feature matrix for a stream under the configured windowing."""
    cfg = config or FeatureConfig()
    windows = window_stream(stream, cfg.window_ms, cfg.step_ms)
    if not windows:
        return np.empty((0, stream.n_channels * FEATURES_PER_CHANNEL))
    return np.vstack([features_from_array(w.samples, w.rate, cfg) for w in windows])


def write_emg_file(path, stream: EmgStream) -> None:
    """Write the textual EMG container: header then one CSV line per sample."""
    rate = stream.rate
    rate_repr = int(rate) if float(rate).is_integer() else rate
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{EMG_FORMAT_VERSION} channels={stream.n_channels} rate={rate_repr}\n")
        for row in stream.data:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_emg_file(path) -> EmgStream:
    """Parse the textual EMG container, validating channel counts per line."""
    path = str(path)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        parts = header.split()
        if len(parts) != 3 or parts[0] != EMG_FORMAT_VERSION:
            raise StreamFormatError(f"bad header {header!r}", path=path, line=1)
        try:
            channels = int(parts[1].split("=", 1)[1])
            rate = float(parts[2].split("=", 1)[1])
        except (IndexError, ValueError) as exc:
            raise StreamFormatError(f"bad header fields: {exc}", path=path, line=1)
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != channels:
                raise StreamFormatError(
                    f"expected {channels} channels, got {len(fields)}", path=path, line=lineno
                )
            try:
                rows.append([float(f) for f in fields])
            except ValueError as exc:
                raise StreamFormatError(str(exc), path=path, line=lineno)
    data = np.asarray(rows, dtype=np.float64) if rows else np.empty((0, channels))
    return EmgStream(data=data, rate=rate)
