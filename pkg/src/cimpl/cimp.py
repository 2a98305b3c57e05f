"""Circular statistics of inter-microphone phase differences (IMPD).

Per microphone pair and frequency bin two recursive accumulators are kept:
one of the raw unit phasors, giving the mean phase difference, and one of
the phasors with their phase scaled by k_u / k, giving the mapped mean
resultant length. Scaling stretches the phase range a diffuse field can
produce at bin k onto the whole circle, so diffuse noise averages to a
resultant length near zero while a point source keeps its value near one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .geometry import ArrayGeometry, PairId
from .stft import StftConfig

EPS_MAG = 1e-12
R_FLOOR = 1e-4


def wrap_angle(x):
    """Wrap radians to [-pi, pi)."""
    w = np.mod(np.asarray(x, dtype=np.float64) + np.pi, 2.0 * np.pi) - np.pi
    # mod can round up to exactly 2 pi for tiny negative inputs
    w = np.where(w >= np.pi, w - 2.0 * np.pi, w)
    return w if w.ndim else float(w)


def instantaneous_impd(xa, xb, eps_mag: float = EPS_MAG):
    """Normalized cross-spectrum ``Xa conj(Xb) / |Xa Xb|``.

    Returns ``(z, valid)``. Bins where either magnitude is below ``eps_mag``
    are invalid and get ``z = 0`` so they add nothing to a running mean.
    """
    xa = np.asarray(xa, dtype=np.complex128)
    xb = np.asarray(xb, dtype=np.complex128)
    valid = (np.abs(xa) > eps_mag) & (np.abs(xb) > eps_mag)
    cross = xa * np.conj(xb)
    mag = np.abs(cross)
    z = np.divide(cross, mag, out=np.zeros_like(cross), where=valid)
    return z, valid


def update_circular_mean(acc, z, lam: float):
    """One step of the exponential circular mean.

    ``acc <- (1 - lam) acc + lam z``. Returns ``(acc, mean_angle, R)``.
    """
    if not 0.0 < lam <= 1.0:
        raise ValueError(f"smoothing factor must lie in (0, 1], got {lam}")
    acc = (1.0 - lam) * np.asarray(acc) + lam * np.asarray(z)
    return acc, wrap_angle(np.angle(acc)), np.minimum(np.abs(acc), 1.0)


def mapped_phasor(z, k, k_u: int):
    """Unit phasor with its phase multiplied by ``k_u / k``; zero stays zero."""
    z = np.asarray(z)
    scale = k_u / np.asarray(k, dtype=np.float64)
    out = np.exp(1j * np.angle(z) * scale)
    return np.where(z != 0, out, 0.0)


def dispersion(R, r_floor: float = R_FLOOR):
    """Circular dispersion (1 - R^4) / (2 R^2) of a wrapped normal.

    ``R <= r_floor`` maps to ``inf`` (no weight in the fit).
    """
    R = np.asarray(R, dtype=np.float64)
    safe = np.where(R > r_floor, R, 1.0)
    R2 = safe * safe
    d = np.where(R > r_floor, (1.0 - R2 * R2) / (2.0 * R2), np.inf)
    d = np.maximum(d, 0.0)
    return d if d.ndim else float(d)


def wrapped_normal_variance(R, r_floor: float = R_FLOOR):
    """Variance ``-2 ln R`` of a wrapped normal; ``inf`` at or below the floor."""
    R = np.asarray(R, dtype=np.float64)
    safe = np.where(R > r_floor, R, 1.0)
    v = np.where(R > r_floor, -2.0 * np.log(safe), np.inf)
    v = np.maximum(v, 0.0)
    return v if v.ndim else float(v)


def resultant_from_dispersion(delta):
    """Inverse of :func:`dispersion`: ``R = 1 / sqrt(delta + sqrt(1 + delta^2))``."""
    delta = np.asarray(delta, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        R = 1.0 / np.sqrt(delta + np.sqrt(1.0 + delta * delta))
    R = np.where(np.isinf(delta), 0.0, R)
    return R if R.ndim else float(R)


def resultant_from_variance(var):
    """Mean resultant length ``exp(-var / 2)`` of a wrapped normal."""
    R = np.exp(-0.5 * np.asarray(var, dtype=np.float64))
    return R if R.ndim else float(R)


def ambiguity_bin(n_bins: int, f_u: float, sample_rate: float) -> int:
    """Bin index ``floor(2 K f_u / f_s)`` of the ambiguity limit."""
    return int(np.floor(2.0 * n_bins * f_u / sample_rate))


def smoothing_factor(hop: int, sample_rate: float, time_constant: float) -> float:
    return min(1.0, hop / (time_constant * sample_rate))


@dataclass
class ImpdStats:
    """Per-frame IMPD statistics of one pair over bins ``k = 1 .. k_max``.

    Arrays are shaped (frames, bins).
    """

    pair: PairId
    bins: np.ndarray
    freqs: np.ndarray
    mean_impd: np.ndarray
    mapped_R: np.ndarray
    dispersion: np.ndarray
    k_u: int

    @property
    def n_frames(self) -> int:
        return self.mean_impd.shape[0]


def usable_bins(k_u: int, n_bins: int) -> np.ndarray:
    """Bins 1 .. min(k_u, K) - 1; DC and Nyquist are never used."""
    return np.arange(1, min(k_u, n_bins))


def estimate_impd(
    xa: np.ndarray,
    xb: np.ndarray,
    pair: PairId,
    k_u: int,
    bin_hz: float,
    lam: float,
    eps_mag: float = EPS_MAG,
    r_floor: float = R_FLOOR,
) -> ImpdStats:
    """Run both accumulators over whole spectrograms.

    ``xa`` and ``xb`` are (frames, K + 1) spectra of the pair's channels.
    Equivalent to feeding :class:`ImpdEstimator` frame by frame.
    """
    n_bins = xa.shape[1] - 1
    k = usable_bins(k_u, n_bins)
    z, _ = instantaneous_impd(xa[:, k], xb[:, k], eps_mag)
    zm = mapped_phasor(z, k, k_u)
    b, a = [lam], [1.0, -(1.0 - lam)]
    if z.shape[0]:
        acc = lfilter(b, a, z, axis=0)
        acc_m = lfilter(b, a, zm, axis=0)
    else:
        acc = acc_m = z
    mapped_R = np.minimum(np.abs(acc_m), 1.0)
    return ImpdStats(
        pair=pair,
        bins=k,
        freqs=k * bin_hz,
        mean_impd=wrap_angle(np.angle(acc)),
        mapped_R=mapped_R,
        dispersion=dispersion(mapped_R, r_floor),
        k_u=k_u,
    )


class ImpdEstimator:
    """Streaming IMPD statistics for one microphone pair."""

    def __init__(self, pair: PairId, k_u: int, n_bins: int, lam: float,
                 eps_mag: float = EPS_MAG, r_floor: float = R_FLOOR):
        if not 0.0 < lam <= 1.0:
            raise ValueError(f"smoothing factor must lie in (0, 1], got {lam}")
        self.pair = pair
        self.k_u = k_u
        self.bins = usable_bins(k_u, n_bins)
        self.lam = lam
        self.eps_mag = eps_mag
        self.r_floor = r_floor
        self._acc = np.zeros(len(self.bins), dtype=np.complex128)
        self._acc_mapped = np.zeros(len(self.bins), dtype=np.complex128)

    def update(self, xa: np.ndarray, xb: np.ndarray):
        """Consume one frame of (K + 1)-bin spectra; return (theta, R_mapped, delta)."""
        z, _ = instantaneous_impd(xa[self.bins], xb[self.bins], self.eps_mag)
        self._acc, theta, _ = update_circular_mean(self._acc, z, self.lam)
        self._acc_mapped, _, R = update_circular_mean(
            self._acc_mapped, mapped_phasor(z, self.bins, self.k_u), self.lam
        )
        return theta, R, dispersion(R, self.r_floor)


def pair_stats(
    spectra: np.ndarray,
    geometry: ArrayGeometry,
    stft_config: StftConfig,
    sample_rate: float,
    time_constant: float = 0.04,
    eps_mag: float = EPS_MAG,
    r_floor: float = R_FLOOR,
) -> dict[PairId, ImpdStats]:
    """IMPD statistics for all three pairs from (frames, channels, K + 1) spectra."""
    lam = smoothing_factor(stft_config.hop, sample_rate, time_constant)
    K = stft_config.n_bins
    bin_hz = stft_config.bin_hz(sample_rate)
    out = {}
    for pair in PairId:
        a, b = geometry.pair_channels(pair)
        k_u = ambiguity_bin(K, geometry.ambiguity_frequency(pair), sample_rate)
        out[pair] = estimate_impd(spectra[:, a], spectra[:, b], pair, k_u, bin_hz, lam,
                                  eps_mag, r_floor)
    return out
