"""Synthetic four-channel scenes with known azimuth ground truth.

Sources are far-field plane waves with a time-varying direction; each
channel reads the source signal at its own fractional delay through a
32-tap windowed-sinc interpolator. The optional diffuse field is a sum of
independent white plane waves from random directions in the horizontal
plane, delayed exactly in the frequency domain. No head shadow is
modelled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .geometry import ArrayGeometry, PairId
from .stft import AudioBlock, StftConfig

SIGNALS = ("white_noise", "speech_like", "file")
N_TAPS = 32


def wrap_deg(x):
    w = np.mod(np.asarray(x, dtype=np.float64) + 180.0, 360.0) - 180.0
    w = np.where(w >= 180.0, w - 360.0, w)
    return w if w.ndim else float(w)


@dataclass
class Trajectory:
    """Piecewise-linear azimuth (degrees) against time (seconds).

    Consecutive breakpoints are joined along the shorter arc, so
    ``[(0, 170), (2, -170)]`` passes through 180 degrees.
    """

    times: np.ndarray
    azimuths: np.ndarray

    def __post_init__(self):
        self.times = np.atleast_1d(np.asarray(self.times, dtype=np.float64))
        self.azimuths = np.atleast_1d(np.asarray(self.azimuths, dtype=np.float64))
        if self.times.shape != self.azimuths.shape or self.times.ndim != 1 or not len(self.times):
            raise ValueError("trajectory needs matching 1-D time and azimuth breakpoints")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if np.any(self.azimuths < -180.0) or np.any(self.azimuths >= 180.0):
            raise ValueError("trajectory azimuths must lie in [-180, 180) degrees")
        self._unwrapped = np.unwrap(self.azimuths, period=360.0)

    @classmethod
    def from_points(cls, points: Sequence[Sequence[float]]) -> "Trajectory":
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        return cls(pts[:, 0], pts[:, 1])

    @classmethod
    def static(cls, azimuth: float, duration: float) -> "Trajectory":
        return cls([0.0, duration], [azimuth, azimuth])

    @classmethod
    def sinusoid(cls, amplitude: float, frequency: float, duration: float,
                 center: float = 0.0, step: float = 0.005) -> "Trajectory":
        t = np.arange(0.0, duration + step / 2, step)
        return cls(t, wrap_deg(center + amplitude * np.sin(2.0 * np.pi * frequency * t)))

    def covers(self, duration: float) -> bool:
        return self.times[0] <= 0.0 and self.times[-1] >= duration

    def __call__(self, t) -> np.ndarray:
        return wrap_deg(np.interp(t, self.times, self._unwrapped))


@dataclass
class SourceSpec:
    trajectory: Trajectory
    signal: str = "white_noise"
    level_db: float = -20.0
    path: Optional[str] = None
    modulation_hz: float = 4.0
    modulation_depth: float = 0.8

    def __post_init__(self):
        if self.signal not in SIGNALS:
            raise ValueError(f"signal must be one of {SIGNALS}, got {self.signal!r}")
        if self.signal == "file" and not self.path:
            raise ValueError("file source needs a path")
        if not 0.0 <= self.modulation_depth <= 1.0:
            raise ValueError("modulation depth must lie in [0, 1]")

    def envelope(self, t: np.ndarray) -> np.ndarray:
        if self.signal != "speech_like":
            return np.ones_like(t)
        swing = 0.5 * (1.0 - np.cos(2.0 * np.pi * self.modulation_hz * t))
        return 1.0 - self.modulation_depth * swing

    def active(self, t: np.ndarray) -> np.ndarray:
        """Upper half of the modulation swing counts as active."""
        return self.envelope(t) >= 1.0 - self.modulation_depth / 2.0


@dataclass
class DiffuseSpec:
    level_db: float = -30.0
    n_plane_waves: int = 64

    def __post_init__(self):
        if self.n_plane_waves < 64:
            raise ValueError("diffuse field needs at least 64 plane waves")


@dataclass
class SceneSpec:
    sources: list[SourceSpec]
    geometry: ArrayGeometry = field(default_factory=ArrayGeometry)
    diffuse: Optional[DiffuseSpec] = None
    duration: float = 5.0
    sample_rate: float = 16000.0
    seed: int = 0
    positions: Optional[np.ndarray] = None  # (4, 3) meters in ROLES order

    def __post_init__(self):
        if not self.duration > 0 or not self.sample_rate > 0:
            raise ValueError("duration and sample rate must be positive")
        if not self.sources and self.diffuse is None:
            raise ValueError("scene is empty")
        for src in self.sources:
            if not src.trajectory.covers(self.duration):
                raise ValueError("trajectory must cover [0, duration]")
        if self.positions is not None:
            self.positions = np.asarray(self.positions, dtype=np.float64)
            if self.positions.shape != (4, 3):
                raise ValueError("positions must be shaped (4, 3)")

    def mic_positions(self) -> np.ndarray:
        return self.geometry.mic_positions() if self.positions is None else self.positions


@dataclass
class GroundTruth:
    time_s: np.ndarray
    azimuth_deg: np.ndarray
    active: np.ndarray


def geometric_tdoa(azimuth_deg: float, pair: PairId, geometry: ArrayGeometry) -> float:
    """Plane-wave delay (s) of the pair's channel b behind channel a."""
    pos = geometry.mic_positions()
    ia, ib = {
        PairId.LEFT_MONAURAL: (0, 1),
        PairId.RIGHT_MONAURAL: (2, 3),
        PairId.BINAURAL: (0, 2),
    }[pair]
    a = np.radians(azimuth_deg)
    u = np.array([np.cos(a), np.sin(a), 0.0])
    return float((pos[ia] - pos[ib]) @ u / geometry.c)


def _source_signal(src: SourceSpec, n: int, fs: float, rng: np.random.Generator) -> np.ndarray:
    if src.signal == "file":
        from .io import read_wav

        block = read_wav(src.path)
        if block.sample_rate != fs:
            raise ValueError(f"{src.path}: sample rate {block.sample_rate} != scene rate {fs}")
        x = block.samples[0]
        x = np.resize(x, n) if len(x) else np.zeros(n)
    else:
        x = rng.standard_normal(n)
    rms = np.sqrt(np.mean(x * x))
    if rms > 0:
        x = x / rms
    return x * 10.0 ** (src.level_db / 20.0)


def _interp_taps(frac: np.ndarray) -> np.ndarray:
    """Blackman-windowed sinc weights for taps at offsets -15 .. 16 from floor."""
    offsets = np.arange(-N_TAPS // 2 + 1, N_TAPS // 2 + 1)
    x = offsets[np.newaxis, :] - frac[:, np.newaxis]
    half = N_TAPS / 2.0
    win = 0.42 + 0.5 * np.cos(np.pi * x / half) + 0.08 * np.cos(2.0 * np.pi * x / half)
    return np.sinc(x) * win


def render_source(src: SourceSpec, positions: np.ndarray, c: float, n: int, fs: float,
                  rng: np.random.Generator) -> np.ndarray:
    """Render one moving plane-wave source to (4, n) samples."""
    pad = N_TAPS + int(np.ceil(np.max(np.linalg.norm(positions, axis=1)) / c * fs)) + 1
    s = _source_signal(src, n + 2 * pad, fs, rng)
    t = np.arange(n) / fs
    s_env = s * src.envelope((np.arange(n + 2 * pad) - pad) / fs)
    az = np.radians(src.trajectory(t))
    u = np.stack([np.cos(az), np.sin(az), np.zeros_like(az)], axis=1)
    out = np.empty((4, n))
    offsets = np.arange(-N_TAPS // 2 + 1, N_TAPS // 2 + 1)
    for m in range(4):
        # the wave reaches mic m (p . u) / c earlier than the origin
        advance = (u @ positions[m]) / c * fs
        pos = np.arange(n) + pad + advance
        i0 = np.floor(pos)
        frac = pos - i0
        idx = i0.astype(np.int64)[:, np.newaxis] + offsets[np.newaxis, :]
        out[m] = np.sum(s_env[idx] * _interp_taps(frac), axis=1)
    return out


def render_diffuse(spec: DiffuseSpec, positions: np.ndarray, c: float, n: int, fs: float,
                   rng: np.random.Generator) -> np.ndarray:
    """Sum of independent white plane waves from uniform random azimuths."""
    f = np.fft.rfftfreq(n, 1.0 / fs)
    out = np.zeros((4, len(f)), dtype=np.complex128)
    azimuths = rng.uniform(-np.pi, np.pi, spec.n_plane_waves)
    gain = 10.0 ** (spec.level_db / 20.0) / np.sqrt(spec.n_plane_waves)
    for a in azimuths:
        S = np.fft.rfft(rng.standard_normal(n))
        u = np.array([np.cos(a), np.sin(a), 0.0])
        advance = positions @ u / c
        out += S[np.newaxis, :] * np.exp(2j * np.pi * f[np.newaxis, :] * advance[:, np.newaxis])
    return gain * np.fft.irfft(out, n, axis=1)


def render_scene(spec: SceneSpec, stft_config: StftConfig = StftConfig()) -> tuple[AudioBlock, GroundTruth]:
    """Render the scene; ground truth follows the first source on the
    frame-centre grid of ``stft_config``."""
    fs = spec.sample_rate
    n = int(round(spec.duration * fs))
    rng = np.random.default_rng(spec.seed)
    positions = spec.mic_positions()
    c = spec.geometry.c
    roles = np.zeros((4, n))
    for src in spec.sources:
        roles += render_source(src, positions, c, n, fs, rng)
    if spec.diffuse is not None:
        roles += render_diffuse(spec.diffuse, positions, c, n, fs, rng)

    cmap = spec.geometry.channel_map
    audio = np.zeros((max(cmap) + 1, n))
    for role, ch in enumerate(cmap):
        audio[ch] = roles[role]

    times = stft_config.frame_times(stft_config.n_frames(n), fs)
    if spec.sources:
        first = spec.sources[0]
        truth = GroundTruth(times, first.trajectory(times), first.active(times))
    else:
        truth = GroundTruth(times, np.full(len(times), np.nan), np.zeros(len(times), dtype=bool))
    return AudioBlock(audio, fs), truth


def _geometry_from_dict(d: dict) -> ArrayGeometry:
    kw = dict(d)
    allowed = {"d_left", "d_right", "d_binaural", "c", "channel_map"}
    unknown = set(kw) - allowed
    if unknown:
        raise ValueError(f"unknown geometry keys: {sorted(unknown)}")
    if "channel_map" in kw:
        kw["channel_map"] = tuple(kw["channel_map"])
    return ArrayGeometry(**kw)


def scene_from_dict(d: dict, base_dir: Optional[Path] = None) -> SceneSpec:
    """Build a :class:`SceneSpec` from a parsed TOML/JSON mapping."""
    allowed = {"duration", "sample_rate", "seed", "geometry", "sources", "diffuse", "positions"}
    unknown = set(d) - allowed
    if unknown:
        raise ValueError(f"unknown scene keys: {sorted(unknown)}")
    sources = []
    for s in d.get("sources", []):
        s = dict(s)
        src_allowed = {"signal", "level_db", "trajectory", "path", "modulation_hz", "modulation_depth"}
        bad = set(s) - src_allowed
        if bad:
            raise ValueError(f"unknown source keys: {sorted(bad)}")
        if "trajectory" not in s:
            raise ValueError("source needs a trajectory")
        s["trajectory"] = Trajectory.from_points(s["trajectory"])
        if s.get("path") and base_dir is not None and not Path(s["path"]).is_absolute():
            s["path"] = str(base_dir / s["path"])
        sources.append(SourceSpec(**s))
    diffuse = d.get("diffuse")
    if diffuse is not None:
        bad = set(diffuse) - {"level_db", "n_plane_waves"}
        if bad:
            raise ValueError(f"unknown diffuse keys: {sorted(bad)}")
        diffuse = DiffuseSpec(**diffuse)
    return SceneSpec(
        sources=sources,
        geometry=_geometry_from_dict(d.get("geometry", {})),
        diffuse=diffuse,
        duration=float(d.get("duration", 5.0)),
        sample_rate=float(d.get("sample_rate", 16000.0)),
        seed=int(d.get("seed", 0)),
        positions=d.get("positions"),
    )


def load_scene(path) -> SceneSpec:
    from .config import load_toml

    path = Path(path)
    return scene_from_dict(load_toml(path), path.parent)

