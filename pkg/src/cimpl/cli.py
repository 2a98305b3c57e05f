"""Command line entry point.

Commands::

    cimpl estimate RECORDING.wav [--config run.toml] [--output track.csv]
    cimpl metrics track.csv truth.csv [--column tracked|raw]
    cimpl synth scene.toml [--output PREFIX] [--seed N] [--config run.toml]
    cimpl bench RECORDING.wav [--config run.toml] [--repeat N]

Exit codes: 0 ok, 2 unreadable input, 3 invalid config or scene, 4 too few
channels, 5 no overlapping active frames.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import io as _io
import json
import logging
import sys
import time
from pathlib import Path

from .config import ConfigError, RunConfig, load_config
from .io import (
    CsvFormatError,
    WavError,
    read_trajectory_csv,
    read_truth_csv,
    read_wav,
    write_trajectory_csv,
    write_truth_csv,
    write_wav,
)
from .metrics import NoOverlapError, accuracy
from .pipeline import estimate, records
from .scenegen import load_scene, render_scene
from .stft import AudioBlock

log = logging.getLogger("cimpl")

EXIT_INPUT = 2
EXIT_CONFIG = 3
EXIT_CHANNELS = 4
EXIT_NO_OVERLAP = 5


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _load_config(path) -> RunConfig:
    try:
        return load_config(path)
    except ConfigError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from exc


def _load_recording(path, config: RunConfig) -> AudioBlock:
    try:
        block = read_wav(path)
    except WavError as exc:
        raise CliError(str(exc), EXIT_INPUT) from exc
    need = config.geometry.n_channels_required
    if block.channels < need:
        raise CliError(f"{path}: {block.channels} channels, channel map needs {need}", EXIT_CHANNELS)
    if config.stft.n_frames(block.n_samples) == 0:
        raise CliError(f"{path}: shorter than one analysis frame", EXIT_INPUT)
    return block


def _trajectory_text(block: AudioBlock, config: RunConfig) -> str:
    buf = _io.StringIO()
    write_trajectory_csv(buf, records(estimate(block, config)))
    return buf.getvalue()


def cmd_estimate(args) -> int:
    config = _load_config(args.config)
    block = _load_recording(args.wav, config)
    text = _trajectory_text(block, config)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_metrics(args) -> int:
    try:
        est = read_trajectory_csv(args.trajectory)
        truth = read_truth_csv(args.truth)
    except CsvFormatError as exc:
        raise CliError(str(exc), EXIT_INPUT) from exc
    column = "azimuth_tracked_deg" if args.column == "tracked" else "azimuth_raw_deg"
    try:
        summary = accuracy(
            [r.time_s for r in est],
            [getattr(r, column) for r in est],
            truth.time_s, truth.azimuth_deg, truth.active,
        )
    except NoOverlapError as exc:
        raise CliError(str(exc), EXIT_NO_OVERLAP) from exc
    summary["column"] = args.column
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_synth(args) -> int:
    config = _load_config(args.config)
    try:
        spec = load_scene(args.scene)
        if args.seed is not None:
            spec = dataclasses.replace(spec, seed=args.seed)
        block, truth = render_scene(spec, config.stft)
    except (OSError, ValueError) as exc:
        raise CliError(f"invalid scene {args.scene}: {exc}", EXIT_CONFIG) from exc
    prefix = Path(args.output) if args.output else Path(args.scene).with_suffix("")
    wav_path = prefix.with_name(prefix.name + ".wav")
    truth_path = prefix.with_name(prefix.name + "_truth.csv")
    write_wav(wav_path, block)
    write_truth_csv(truth_path, truth)
    log.info("wrote %s and %s", wav_path, truth_path)
    return 0


def cmd_bench(args) -> int:
    config = _load_config(args.config)
    block = _load_recording(args.wav, config)
    timings = []
    digests = set()
    for _ in range(max(1, args.repeat)):
        t0 = time.perf_counter()
        text = _trajectory_text(block, config)
        timings.append(time.perf_counter() - t0)
        digests.add(hashlib.sha256(text.encode()).hexdigest())
    wall = min(timings)
    report = {
        "audio_seconds": block.duration,
        "wall_seconds": wall,
        "real_time_factor": block.duration / wall if wall > 0 else float("inf"),
        "runs": len(timings),
        "output_sha256": sorted(digests),
        "deterministic": len(digests) == 1,
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cimpl", description="Binaural hearing-aid DOA estimation and tracking")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("estimate", help="estimate per-frame azimuth from a 4+ channel WAV")
    e.add_argument("wav")
    e.add_argument("--config")
    e.add_argument("--output", help="CSV path (default stdout)")
    e.set_defaults(func=cmd_estimate)

    m = sub.add_parser("metrics", help="accuracy of a trajectory CSV against ground truth")
    m.add_argument("trajectory")
    m.add_argument("truth")
    m.add_argument("--column", choices=("tracked", "raw"), default="tracked")
    m.set_defaults(func=cmd_metrics)

    s = sub.add_parser("synth", help="render a scene spec to WAV + ground-truth CSV")
    s.add_argument("scene")
    s.add_argument("--output", help="output prefix (default: scene path without suffix)")
    s.add_argument("--seed", type=int)
    s.add_argument("--config", help="run config whose STFT grid sets the truth time stamps")
    s.set_defaults(func=cmd_synth)

    b = sub.add_parser("bench", help="measure the real-time factor of the pipeline")
    b.add_argument("wav")
    b.add_argument("--config")
    b.add_argument("--repeat", type=int, default=3)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        log.error("%s", exc)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
