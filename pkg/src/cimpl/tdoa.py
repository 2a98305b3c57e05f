"""Dispersion-weighted delay fit through the origin of the phase/frequency line."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cimp import ImpdStats
from .geometry import PairId


@dataclass(frozen=True)
class FitPolicy:
    """Number of fitted bins: ``floor(fraction * k_u)``, capped at ``cap_hz``."""

    fraction: float = 0.9
    cap_hz: float = 8000.0

    def __post_init__(self):
        if not 0.0 < self.fraction <= 1.0:
            raise ValueError("fit fraction must lie in (0, 1]")
        if not self.cap_hz > 0:
            raise ValueError("fit cap must be positive")

    def n_fit_bins(self, k_u: int, n_bins: int, bin_hz: float) -> int:
        k = int(np.floor(self.fraction * k_u))
        k = min(k, int(np.floor(self.cap_hz / bin_hz + 1e-9)), k_u - 1, n_bins - 1)
        return max(k, 0)


@dataclass
class TdoaEstimate:
    """Delay track of one pair. Invalid frames hold NaN and ``n_bins_used == 0``."""

    pair: PairId
    tau: np.ndarray
    var_tau: np.ndarray
    n_bins_used: np.ndarray

    @property
    def valid(self) -> np.ndarray:
        return self.n_bins_used > 0


def fit_delay(theta, delta, freqs):
    """Weighted least-squares slope of ``theta = 2 pi f tau`` through the origin.

    ``theta`` and ``delta`` are shaped (..., bins) and ``freqs`` (bins,). Each
    point is weighted by ``1 / delta``; bins with infinite or NaN dispersion
    are skipped. Returns ``(tau, var_tau, n_used)``; ``tau`` and ``var_tau``
    are NaN where no bin is usable.
    """
    theta = np.asarray(theta, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    f = np.asarray(freqs, dtype=np.float64)
    usable = np.isfinite(delta) & (delta > 0) & np.isfinite(theta)
    w = np.divide(1.0, delta, out=np.zeros_like(delta), where=usable)
    sff = np.sum(w * f * f, axis=-1)
    sft = np.sum(w * f * np.where(usable, theta, 0.0), axis=-1)
    n = np.sum(usable, axis=-1)
    ok = (n > 0) & (sff > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = np.where(ok, sft / (2.0 * np.pi * sff), np.nan)
        var = np.where(ok, 1.0 / (4.0 * np.pi ** 2 * sff), np.nan)
    return tau, var, np.where(ok, n, 0)


def fit_tdoa(stats: ImpdStats, n_fit_bins: int) -> TdoaEstimate:
    """Fit bins ``k = 1 .. n_fit_bins`` of every frame of ``stats``."""
    if n_fit_bins > len(stats.bins):
        raise ValueError(
            f"cannot fit {n_fit_bins} bins; only {len(stats.bins)} lie below k_u={stats.k_u}"
        )
    sl = slice(0, n_fit_bins)
    tau, var, n = fit_delay(stats.mean_impd[:, sl], stats.dispersion[:, sl], stats.freqs[sl])
    return TdoaEstimate(stats.pair, tau, var, n)
