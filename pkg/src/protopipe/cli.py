"""Command-line entry point.

Subcommands cover the whole pipeline: generate a synthetic dataset,
personalize (build prototypes for one user), recognize (classify one clutter
video frame by frame), evaluate (ablation report over all users), and
bench-loader (threaded-loader timing table).

Exit codes: 0 success, 2 configuration error (bad config/flags/weights),
3 data error (bad dataset, missing files, unknown ids). The effective seed
is resolved as: --seed flag, else the PROTOPIPE_SEED environment variable,
else the config file's seed.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import adaptation, embedding, protonet
from .clip_sampling import InsufficientFrames
from .config import ConfigError, build_runtime, effective_seed, load_config
from .evaluation import ARM_ORDER, UnknownArm, evaluate_users, write_report
from .frame_validity import FrameTooSmall, UnsupportedChannels
from .media_io.bench import bench_loader
from .media_io.loader import DecodeError, LoaderConfig
from .media_io.manifest import DatasetManifest, ManifestError, VideoRecord, load_manifest
from .media_io.pnm import PnmError
from .media_io.synthetic import GeneratorSpec, generate_synthetic_dataset
from .numerics import DimensionMismatch, EmptyInput
from .protonet import (
    build_episode,
    load_prototypes,
    personalize,
    recognize_video,
    save_predictions,
    save_prototypes,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

_CONFIG_ERRORS = (
    ConfigError,
    UnknownArm,
    DimensionMismatch,
    adaptation.ParseError,
    adaptation.ShapeMismatch,
    embedding.ParseError,
    embedding.InconsistentDim,
)
_DATA_ERRORS = (
    ManifestError,
    PnmError,
    DecodeError,
    InsufficientFrames,
    FrameTooSmall,
    UnsupportedChannels,
    EmptyInput,
    embedding.MissingFrameEmbedding,
    embedding.EmptyClip,
    protonet.EmptyClass,
    protonet.LengthMismatch,
    protonet.ParseError,
    OSError,
)


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _load_dataset(path_arg: str) -> DatasetManifest:
    path = Path(path_arg)
    if path.is_dir():
        path = path / "manifest.json"
    return load_manifest(path)


def _find_video(manifest: DatasetManifest, video_id: str) -> VideoRecord:
    for video in manifest.all_videos():
        if video.video_id == video_id:
            return video
    raise KeyError(video_id)


def cmd_gen_synthetic(args) -> int:
    spec = GeneratorSpec(
        num_users=args.users,
        objects_per_user=args.objects,
        videos_per_object=args.videos,
        frames_per_video=args.frames,
        frame_size=args.size,
        blank_fraction=args.blank_fraction,
        seed=args.seed,
    )
    manifest = generate_synthetic_dataset(spec, args.out)
    total = len(manifest.all_videos())
    print(f"wrote {len(manifest.users)} users, {total} videos to {args.out}")
    return EXIT_OK


def cmd_personalize(args) -> int:
    config = load_config(args.config)
    seed = effective_seed(config, args.seed)
    runtime = build_runtime(config, seed=seed)
    manifest = _load_dataset(args.dataset)
    try:
        episode = build_episode(manifest, args.user)
    except KeyError:
        return _fail(EXIT_DATA, f"unknown user {args.user!r} in dataset")
    protos, audits = personalize(episode, runtime)
    save_prototypes(protos, args.out)
    if args.audit:
        Path(args.audit).write_text(
            "".join(
                json.dumps(a.to_json_obj(), sort_keys=True) + "\n" for a in audits
            ),
            encoding="utf-8",
        )
    removed = sum(1 for a in audits if a.removed)
    print(
        f"user {args.user}: {len(protos.labels)} prototypes "
        f"({removed} clips removed) -> {args.out}"
    )
    return EXIT_OK


def cmd_recognize(args) -> int:
    config = load_config(args.config)
    seed = effective_seed(config, args.seed)
    runtime = build_runtime(config, seed=seed)
    protos = load_prototypes(args.prototypes)
    if protos.dim != runtime.embedder.dim:
        raise DimensionMismatch(
            f"prototypes dim {protos.dim} != embedder dim {runtime.embedder.dim}"
        )
    manifest = _load_dataset(args.dataset)
    try:
        video = _find_video(manifest, args.video)
    except KeyError:
        return _fail(EXIT_DATA, f"unknown video {args.video!r} in dataset")
    predictions = recognize_video(video, protos, runtime)
    save_predictions(video.video_id, protos.labels, predictions, args.out)
    print(f"video {args.video}: {len(predictions)} frame predictions -> {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    config = load_config(args.config)
    seed = effective_seed(config, args.seed)
    runtime = build_runtime(config, seed=seed)
    manifest = _load_dataset(args.dataset)
    arms = tuple(a.strip() for a in args.ablation.split(",") if a.strip())
    if not arms:
        raise ConfigError("--ablation named no arms")
    report = evaluate_users(manifest, runtime, arms)
    write_report(report, args.out)
    for row in report["arms"]:
        print(
            f"{row['name']:<8} accuracy {row['aggregate']:.4f} "
            f"(delta {row['delta_vs_previous']:+.4f})"
        )
    print(f"report -> {args.out}")
    return EXIT_OK


def cmd_bench_loader(args) -> int:
    manifest = _load_dataset(args.dataset)
    try:
        threads = [int(t) for t in args.threads.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --threads list: {args.threads!r}") from exc
    if not threads:
        raise ConfigError("--threads named no thread counts")
    configs = [
        LoaderConfig(num_threads=t, injected_latency_ms=args.latency_ms)
        for t in threads
    ]
    report = bench_loader(manifest, configs, repetitions=args.reps)
    for row in report.rows:
        print(f"{row.threads:>3} threads: {row.format_cell()}")
    if args.out:
        report.write(args.out)
        print(f"report -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="protopipe",
        description="Few-shot per-frame video object recognition pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synthetic", help="generate a synthetic dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--users", type=int, default=2)
    p.add_argument("--objects", type=int, default=3, help="objects per user")
    p.add_argument("--videos", type=int, default=1, help="videos per object and kind")
    p.add_argument("--frames", type=int, default=16, help="frames per video")
    p.add_argument("--size", type=int, default=32, help="square frame edge, pixels")
    p.add_argument("--blank-fraction", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("personalize", help="build one user's prototypes")
    p.add_argument("--dataset", required=True, help="dataset dir or manifest path")
    p.add_argument("--user", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="prototypes JSON path")
    p.add_argument("--audit", help="optional clip-filter audit JSONL path")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_personalize)

    p = sub.add_parser("recognize", help="classify one clutter video per frame")
    p.add_argument("--prototypes", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--video", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="predictions JSON path")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_recognize)

    p = sub.add_parser("evaluate", help="ablation report over every user")
    p.add_argument("--dataset", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--ablation", default=",".join(ARM_ORDER), help="comma list of arms")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench-loader", help="time the frame loader")
    p.add_argument("--dataset", required=True)
    p.add_argument("--threads", default="1,16", help="comma list of thread counts")
    p.add_argument("--latency-ms", type=float, default=0.0)
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--out", help="optional report JSON path")
    p.set_defaults(func=cmd_bench_loader)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CONFIG_ERRORS as exc:
        return _fail(EXIT_CONFIG, str(exc))
    except _DATA_ERRORS as exc:
        return _fail(EXIT_DATA, str(exc))
    except ValueError as exc:
        # Residual validation failures (bad generator/sampler parameters,
        # malformed weights) are all misconfiguration.
        return _fail(EXIT_CONFIG, str(exc))


if __name__ == "__main__":
    sys.exit(main())
