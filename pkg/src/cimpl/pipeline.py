"""End-to-end estimation: STFT, IMPD statistics, delay fits, fusion, tracking."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cimp import ImpdStats, pair_stats
from .config import RunConfig
from .fusion import FusedDoa, Mode, Source, binaural_doa, fuse_frame, monaural_doa
from .geometry import PairId
from .io import TrajectoryRecord
from .stft import AudioBlock, stft
from .tdoa import TdoaEstimate, fit_tdoa
from .tracker import WrappedKalmanTracker


@dataclass
class EstimateResult:
    """Per-frame outputs; angles in radians, NaN where undefined."""

    times: np.ndarray
    raw: np.ndarray
    tracked: np.ndarray
    R: np.ndarray
    dispersion: np.ndarray
    mode: list[Mode]
    active: np.ndarray
    clamped: np.ndarray
    stats: dict[PairId, ImpdStats]
    tdoa: dict[PairId, TdoaEstimate]

    @property
    def n_frames(self) -> int:
        return len(self.times)


def frame_activity(block: AudioBlock, config: RunConfig, n_frames: int) -> np.ndarray:
    """Energy gate: mean frame power over the mapped channels above the threshold."""
    if n_frames == 0:
        return np.zeros(0, dtype=bool)
    x = block.samples[list(config.geometry.channel_map)]
    frames = np.lib.stride_tricks.sliding_window_view(x, config.stft.frame_len, axis=1)
    frames = frames[:, :: config.stft.hop][:, :n_frames]
    power = np.mean(frames * frames, axis=(0, 2))
    with np.errstate(divide="ignore"):
        level = 10.0 * np.log10(power)
    return level > config.io.activity_threshold_db


def local_doas(tdoa: dict[PairId, TdoaEstimate], config: RunConfig, l: int):
    g = config.geometry
    r_floor = config.smoothing.r_floor
    left = monaural_doa(tdoa[PairId.LEFT_MONAURAL].tau[l], tdoa[PairId.LEFT_MONAURAL].var_tau[l],
                        g.d_left, g.c, Source.MONAURAL_LEFT, r_floor)
    right = monaural_doa(tdoa[PairId.RIGHT_MONAURAL].tau[l], tdoa[PairId.RIGHT_MONAURAL].var_tau[l],
                         g.d_right, g.c, Source.MONAURAL_RIGHT, r_floor)
    binaural = binaural_doa(tdoa[PairId.BINAURAL].tau[l], tdoa[PairId.BINAURAL].var_tau[l],
                            g.d_binaural, g.c, r_floor)
    return left, right, binaural


def estimate(block: AudioBlock, config: RunConfig = RunConfig()) -> EstimateResult:
    """Run the full pipeline over a multichannel recording."""
    g = config.geometry
    fs = block.sample_rate
    spectra = stft(block, config.stft, min_channels=g.n_channels_required)
    n_frames = spectra.shape[0]
    sm = config.smoothing
    stats = pair_stats(spectra, g, config.stft, fs, sm.time_constant_s, sm.eps_mag, sm.r_floor)

    tdoa = {}
    for pair, st in stats.items():
        k_fit = config.fit.n_fit_bins(st.k_u, config.stft.n_bins, config.stft.bin_hz(fs))
        tdoa[pair] = fit_tdoa(st, k_fit)

    tracker = WrappedKalmanTracker(config.tracker)
    raw = np.full(n_frames, np.nan)
    tracked = np.full(n_frames, np.nan)
    R = np.zeros(n_frames)
    disp = np.full(n_frames, np.inf)
    clamped = np.zeros(n_frames, dtype=bool)
    modes = []
    for l in range(n_frames):
        fused: FusedDoa = fuse_frame(*local_doas(tdoa, config, l), frame=l,
                                     alpha=config.fusion.alpha, tie_break=config.fusion.tie_break)
        modes.append(fused.mode)
        if fused.valid:
            raw[l] = fused.varphi
            R[l] = fused.R
            disp[l] = fused.dispersion
            clamped[l] = fused.clamped
        az = tracker.step(fused)
        if az is not None:
            tracked[l] = az

    return EstimateResult(
        times=config.stft.frame_times(n_frames, fs),
        raw=raw,
        tracked=tracked,
        R=R,
        dispersion=disp,
        mode=modes,
        active=frame_activity(block, config, n_frames),
        clamped=clamped,
        stats=stats,
        tdoa=tdoa,
    )


def to_degrees(x: np.ndarray) -> np.ndarray:
    """Radians to degrees in [-180, 180); NaN stays NaN."""
    d = np.degrees(x)
    d = np.mod(d + 180.0, 360.0) - 180.0
    return np.where(d >= 180.0, d - 360.0, d)



def records(result: EstimateResult) -> list[TrajectoryRecord]:
    raw = to_degrees(result.raw)
    tracked = to_degrees(result.tracked)
    return [
        TrajectoryRecord(
            float(result.times[l]), float(raw[l]), float(tracked[l]), float(result.R[l]),
            float(result.dispersion[l]), result.mode[l].value, bool(result.active[l]),
            bool(result.clamped[l]),
        )
        for l in range(result.n_frames)
    ]
