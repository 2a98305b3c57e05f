"""Multichannel short-time Fourier transform on a shared frame grid."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

WINDOWS = ("hann", "rect")


@dataclass(frozen=True)
class StftConfig:
    """Frame length and hop in samples.

    ``window="rect"`` is a debug mode; the estimation pipeline uses Hann.
    """

    frame_len: int = 128
    hop: int = 64
    window: str = "hann"

    def __post_init__(self):
        n = self.frame_len
        if n < 16 or n & (n - 1):
            raise ValueError(f"frame_len must be a power of two >= 16, got {n}")
        if not 0 < self.hop <= n:
            raise ValueError(f"hop must lie in (0, frame_len], got {self.hop}")
        if self.window not in WINDOWS:
            raise ValueError(f"window must be one of {WINDOWS}, got {self.window!r}")

    @property
    def n_bins(self) -> int:
        """Nyquist bin index K (bins run 0..K)."""
        return self.frame_len // 2

    def bin_hz(self, sample_rate: float) -> float:
        return sample_rate / self.frame_len

    def frequencies(self, sample_rate: float) -> np.ndarray:
        return np.arange(self.n_bins + 1) * self.bin_hz(sample_rate)

    def window_array(self) -> np.ndarray:
        if self.window == "rect":
            return np.ones(self.frame_len)
        n = np.arange(self.frame_len)
        # periodic Hann
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / self.frame_len)

    def n_frames(self, n_samples: int) -> int:
        if n_samples < self.frame_len:
            return 0
        return 1 + (n_samples - self.frame_len) // self.hop

    def frame_times(self, n_frames: int, sample_rate: float) -> np.ndarray:
        """Centre time of each frame in seconds."""
        starts = np.arange(n_frames) * self.hop
        return (starts + self.frame_len / 2.0) / sample_rate


@dataclass
class AudioBlock:
    """Multichannel audio, ``samples`` shaped (channels, n_samples)."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim == 1:
            x = x[np.newaxis, :]
        if x.ndim != 2:
            raise ValueError("samples must be shaped (channels, n_samples)")
        if not self.sample_rate > 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(x)):
            raise ValueError("audio contains NaN or Inf samples")
        self.samples = x

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate


@dataclass
class FrameSpectrum:
    frame_index: int
    bin_values: np.ndarray  # (channels, K + 1) complex
    bin_hz_step: float


def stft(block: AudioBlock, config: StftConfig = StftConfig(), min_channels: int = 1) -> np.ndarray:
    """Return spectra shaped (frames, channels, K + 1).

    Frame ``l`` covers samples ``[l * hop, l * hop + frame_len)``. Trailing
    samples that do not fill a frame are dropped.
    """
    if block.channels < min_channels:
        raise ValueError(f"need at least {min_channels} channels, got {block.channels}")
    n_frames = config.n_frames(block.n_samples)
    if n_frames == 0:
        return np.zeros((0, block.channels, config.n_bins + 1), dtype=np.complex128)
    frames = np.lib.stride_tricks.sliding_window_view(block.samples, config.frame_len, axis=1)
    frames = frames[:, :: config.hop][:, :n_frames]  # (channels, frames, frame_len)
    spec = np.fft.rfft(frames * config.window_array(), axis=-1)
    return np.ascontiguousarray(spec.transpose(1, 0, 2))


def stft_stream(
    block: AudioBlock, config: StftConfig = StftConfig(), min_channels: int = 1
) -> Iterator[FrameSpectrum]:
    """Yield one :class:`FrameSpectrum` per frame, in order."""
    spec = stft(block, config, min_channels)
    step = config.bin_hz(block.sample_rate)
    for l in range(spec.shape[0]):
        yield FrameSpectrum(l, spec[l], step)
