"""Azimuth accuracy against ground truth over active frames."""

from __future__ import annotations

import numpy as np


class NoOverlapError(ValueError):
    """No active ground-truth frame matched an estimation frame."""


def circular_abs_deviation(a_deg, b_deg) -> np.ndarray:
    """|a - b| measured on the circle, in degrees within [0, 180]."""
    d = np.mod(np.asarray(a_deg, dtype=np.float64) - np.asarray(b_deg, dtype=np.float64) + 180.0, 360.0) - 180.0
    return np.abs(d)


def match_frames(est_time, truth_time, tolerance: float) -> np.ndarray:
    """Index of the nearest truth sample per estimate, -1 when farther than ``tolerance``."""
    est_time = np.asarray(est_time, dtype=np.float64)
    truth_time = np.asarray(truth_time, dtype=np.float64)
    if not len(truth_time) or not len(est_time):
        return np.full(len(est_time), -1)
    order = np.argsort(truth_time)
    ts = truth_time[order]
    pos = np.searchsorted(ts, est_time)
    lo = np.clip(pos - 1, 0, len(ts) - 1)
    hi = np.clip(pos, 0, len(ts) - 1)
    pick = np.where(np.abs(est_time - ts[lo]) <= np.abs(ts[hi] - est_time), lo, hi)
    idx = order[pick]
    ok = np.abs(truth_time[idx] - est_time) <= tolerance + 1e-9
    return np.where(ok, idx, -1)


def accuracy(est_time, est_az_deg, truth_time, truth_az_deg, truth_active, hop_s=None) -> dict:
    """Mean absolute circular deviation and its standard deviation.

    Frames are paired by nearest time within half a hop (``hop_s`` defaults
    to the median spacing of ``est_time``). Only active truth frames count;
    the deviation statistics use those with a finite estimate, and
    ``pct_valid`` is the share of active frames that had one.
    """
    est_time = np.asarray(est_time, dtype=np.float64)
    est_az = np.asarray(est_az_deg, dtype=np.float64)
    if hop_s is None:
        hop_s = float(np.median(np.diff(est_time))) if len(est_time) > 1 else 0.0
    idx = match_frames(est_time, truth_time, hop_s / 2.0)
    matched = idx >= 0
    truth_active = np.asarray(truth_active, dtype=bool)
    truth_az = np.asarray(truth_az_deg, dtype=np.float64)
    active = np.zeros(len(est_time), dtype=bool)
    active[matched] = truth_active[idx[matched]] & np.isfinite(truth_az[idx[matched]])
    n_active = int(active.sum())
    if n_active == 0:
        raise NoOverlapError("no active ground-truth frames overlap the estimate")
    valid = active & np.isfinite(est_az)
    n_valid = int(valid.sum())
    if n_valid == 0:
        raise NoOverlapError("no active frame carries an azimuth estimate")
    dev = circular_abs_deviation(est_az[valid], truth_az[idx[valid]])
    return {
        "mad_deg": float(np.mean(dev)),
        "std_deg": float(np.std(dev)),
        "pct_valid": 100.0 * n_valid / n_active,
        "n_active": n_active,
        "n_valid": n_valid,
    }
