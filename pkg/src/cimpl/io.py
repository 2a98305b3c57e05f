"""WAV and CSV input/output."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .scenegen import GroundTruth
from .stft import AudioBlock

TRAJECTORY_COLUMNS = (
    "time_s", "azimuth_raw_deg", "azimuth_tracked_deg", "R", "dispersion", "mode", "active", "clamped",
)
TRUTH_COLUMNS = ("time_s", "azimuth_deg", "active")


class WavError(ValueError):
    pass


class CsvFormatError(ValueError):
    pass


def read_wav(path) -> AudioBlock:
    """Read PCM 8/16/24/32-bit or float WAV into full-scale +-1 samples."""
    try:
        fs, data = wavfile.read(str(path))
    except Exception as exc:  # scipy surfaces malformed headers as assorted error types
        raise WavError(f"cannot read {path}: {exc!r}") from exc
    if data.ndim == 1:
        data = data[:, np.newaxis]
    if data.dtype == np.uint8:
        x = (data.astype(np.float64) - 128.0) / 128.0
    elif data.dtype == np.int16:
        x = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        # scipy left-justifies 24-bit samples into int32
        x = data.astype(np.float64) / 2147483648.0
    elif np.issubdtype(data.dtype, np.floating):
        x = data.astype(np.float64)
    else:
        raise WavError(f"{path}: unsupported sample type {data.dtype}")
    try:
        return AudioBlock(x.T, float(fs))
    except ValueError as exc:
        raise WavError(f"{path}: {exc}") from exc


def write_wav(path, block: AudioBlock) -> None:
    """Write 32-bit float WAV."""
    wavfile.write(str(path), int(round(block.sample_rate)), block.samples.T.astype(np.float32))


@dataclass
class TrajectoryRecord:
    time_s: float
    azimuth_raw_deg: float
    azimuth_tracked_deg: float
    R: float
    dispersion: float
    mode: str
    active: bool
    clamped: bool = False


def _fmt(x: float, spec: str) -> str:
    return "" if not math.isfinite(x) else format(x, spec)


def write_trajectory_csv(path_or_file, records) -> None:
    own = isinstance(path_or_file, (str, Path))
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for r in records:
            w.writerow([
                format(r.time_s, ".6f"),
                _fmt(r.azimuth_raw_deg, ".4f"),
                _fmt(r.azimuth_tracked_deg, ".4f"),
                format(r.R, ".6f"),
                _fmt(r.dispersion, ".6g"),
                r.mode,
                int(bool(r.active)),
                int(bool(r.clamped)),
            ])
    finally:
        if own:
            fh.close()


def _float(s: str) -> float:
    return float(s) if s.strip() else math.nan


def _read_rows(path, columns) -> list[dict]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            missing = set(columns) - set(reader.fieldnames or ())
            if missing:
                raise CsvFormatError(f"{path}: missing columns {sorted(missing)}")
            return list(reader)
    except OSError as exc:
        raise CsvFormatError(f"cannot read {path}: {exc}") from exc


def read_trajectory_csv(path) -> list[TrajectoryRecord]:
    out = []
    try:
        for row in _read_rows(path, TRAJECTORY_COLUMNS):
            out.append(TrajectoryRecord(
                float(row["time_s"]),
                _float(row["azimuth_raw_deg"]),
                _float(row["azimuth_tracked_deg"]),
                float(row["R"]),
                _float(row["dispersion"]),
                row["mode"],
                row["active"].strip() == "1",
                row["clamped"].strip() == "1",
            ))
    except (TypeError, ValueError, AttributeError) as exc:
        if isinstance(exc, CsvFormatError):
            raise
        raise CsvFormatError(f"{path}: {exc}") from exc
    return out


def write_truth_csv(path, truth: GroundTruth) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRUTH_COLUMNS)
        for t, az, act in zip(truth.time_s, truth.azimuth_deg, truth.active):
            w.writerow([format(t, ".6f"), _fmt(az, ".6f"), int(bool(act))])


def read_truth_csv(path) -> GroundTruth:
    try:
        rows = _read_rows(path, TRUTH_COLUMNS)
        t = np.array([float(r["time_s"]) for r in rows])
        az = np.array([_float(r["azimuth_deg"]) for r in rows])
        active = np.array([r["active"].strip() == "1" for r in rows], dtype=bool)
    except (TypeError, ValueError, AttributeError) as exc:
        if isinstance(exc, CsvFormatError):
            raise
        raise CsvFormatError(f"{path}: {exc}") from exc
    return GroundTruth(t, az, active)
