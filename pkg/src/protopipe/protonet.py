"""Prototype construction, cosine classification, and the episode protocol.

An episode is one user's data split two ways: their clean videos form the
support set and their clutter videos the query set. Personalization samples
clips from each support video, drops clips dominated by invalid frames,
embeds the survivors and averages them per class into prototypes, then
optionally refines the stacked prototypes with a set-to-set adapter.
Recognition slides a causal window over a query video and classifies every
frame's clip against the adapted prototypes by cosine similarity.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path

from .adaptation import TransformerWeights, adapt_prototypes
from .clip_sampling import SamplerConfig, causal_sliding_window, sample_clips
from .embedding import ClipEmbedding, EmbedderSpec, PrecomputedTable, embed_frame
from .frame_validity import ClipAudit, EdgeFilterConfig, SampledClip, filter_clips
from .media_io.loader import LoaderConfig, load_frames_parallel
from .media_io.manifest import DatasetManifest, UserRecord, VideoRecord
from .media_io.pnm import Frame
from .numerics import (
    DimensionMismatch,
    Matrix,
    Vector,
    cosine_similarity,
    mean_vectors,
)


class EmptyClass(ValueError):
    def __init__(self, label: str):
        super().__init__(f"class {label!r} has no clip embeddings")
        self.label = label


class LengthMismatch(ValueError):
    pass


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class Prototypes:
    user_id: str
    labels: tuple[str, ...]
    raw: Matrix
    adapted: Matrix
    config_digest: str

    def __post_init__(self):
        n = len(self.labels)
        if n < 2:
            raise ValueError("need at least two classes")
        if len(set(self.labels)) != n:
            raise ValueError("class labels must be distinct")
        if self.raw.rows != n or self.adapted.rows != n:
            raise DimensionMismatch(
                f"{n} labels but {self.raw.rows}/{self.adapted.rows} prototype rows"
            )
        if self.raw.cols != self.adapted.cols:
            raise DimensionMismatch("raw/adapted dimension disagree")

    @property
    def dim(self) -> int:
        return self.raw.cols


@dataclass(frozen=True)
class Episode:
    user_id: str
    support: tuple[tuple[str, tuple[VideoRecord, ...]], ...]  # (label, clean videos)
    query: tuple[tuple[VideoRecord, tuple[str, ...]], ...]  # (video, per-frame truth)

    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.support)


def build_episode(manifest: DatasetManifest, user_id: str) -> Episode:
    """Split one user's videos: clean -> support, clutter -> query.

    Every frame of a clutter video is labeled with the video's object —
    the benchmark convention; frames where the object happens to be absent
    still count against accuracy.
    """
    user: UserRecord = manifest.user(user_id)
    support = []
    query = []
    for obj in user.objects:
        support.append((obj.label, tuple(obj.videos_of_kind("clean"))))
        for video in obj.videos_of_kind("clutter"):
            query.append((video, (obj.label,) * video.num_frames))
    return Episode(user_id, tuple(support), tuple(query))


def compute_prototypes(per_class: list[tuple[str, list[ClipEmbedding]]]) -> Matrix:
    """Row k = mean of class k's clip vectors, in the given class order."""
    rows = []
    for label, clips in per_class:
        if not clips:
            raise EmptyClass(label)
        rows.append(mean_vectors([c.vector for c in clips]))
    return Matrix.from_rows(rows)


def classify_clip(
    q: Vector, protos: Prototypes, use_adapted: bool = True
) -> tuple[str, list[float]]:
    """Cosine against every prototype row; ties go to the lowest class index."""
    m = protos.adapted if use_adapted else protos.raw
    if len(q) != m.cols:
        raise DimensionMismatch(f"query dim {len(q)} != prototype dim {m.cols}")
    scores = [cosine_similarity(q, m.row(k)) for k in range(m.rows)]
    best = max(range(len(scores)), key=lambda k: scores[k])
    return protos.labels[best], scores


def derive_video_seed(pipeline_seed: int, video_id: str) -> int:
    """Stable per-video sampling seed; independent of hash randomization."""
    digest = hashlib.sha256(f"{pipeline_seed}/{video_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class PipelineRuntime:
    """Everything personalize/recognize need, loaded and immutable."""

    sampler: SamplerConfig
    edge_filter: EdgeFilterConfig
    embedder: EmbedderSpec
    table: PrecomputedTable | None
    adapter: TransformerWeights | None
    seed: int
    digest: str
    loader: LoaderConfig = LoaderConfig()

    def frame_vector(self, video: VideoRecord, index: int, frame: Frame | None) -> Vector:
        if self.table is not None:
            return self.table.vector(video.video_id, index)
        if frame is None:
            raise ValueError("pixel embedder needs a decoded frame")
        return embed_frame(frame, self.embedder)

    @property
    def needs_pixels(self) -> bool:
        return self.table is None


def _decode_frames(
    video: VideoRecord, indices: list[int], loader: LoaderConfig
) -> dict[int, Frame]:
    paths = [video.frame_paths[i] for i in indices]
    frames = load_frames_parallel(paths, loader)
    return dict(zip(indices, frames))


def personalize(
    episode: Episode, runtime: PipelineRuntime
) -> tuple[Prototypes, list[ClipAudit]]:
    """Support-side stage: sample, filter, embed, average, adapt."""
    # Pixels are only touched when something downstream needs them: the
    # edge filter always does, the patch embedder does, a precomputed
    # table with the filter off does not.
    decode = runtime.needs_pixels or runtime.edge_filter.enabled
    per_class: list[tuple[str, list[ClipEmbedding]]] = []
    audits: list[ClipAudit] = []
    for label, videos in episode.support:
        sampled: list[SampledClip] = []
        for video in videos:
            cfg = replace(runtime.sampler, seed=derive_video_seed(runtime.seed, video.video_id))
            clips = sample_clips(video.num_frames, cfg)
            needed = sorted({i for clip in clips for i in clip.frame_indices()})
            frames = _decode_frames(video, needed, runtime.loader) if decode else {}
            for clip in clips:
                sampled.append(
                    SampledClip(
                        video.video_id,
                        clip,
                        [frames[i] for i in clip.frame_indices()] if decode else [],
                    )
                )
        retained, class_audits = filter_clips(sampled, runtime.edge_filter)
        audits.extend(class_audits)
        by_video = {v.video_id: v for v in videos}
        embeddings = []
        for sc in retained:
            video = by_video[sc.video_id]
            vectors = [
                runtime.frame_vector(video, idx, sc.frames[j] if sc.frames else None)
                for j, idx in enumerate(sc.clip.frame_indices())
            ]
            embeddings.append(
                ClipEmbedding(mean_vectors(vectors), (sc.video_id, sc.clip.start))
            )
        per_class.append((label, embeddings))
    raw = compute_prototypes(per_class)
    adapted = adapt_prototypes(raw, runtime.adapter) if runtime.adapter else raw
    protos = Prototypes(
        episode.user_id, episode.labels(), raw, adapted, runtime.digest
    )
    return protos, audits


@dataclass(frozen=True)
class FramePrediction:
    pred: str
    scores: tuple[float, ...]


def video_frame_vectors(video: VideoRecord, runtime: PipelineRuntime) -> list[Vector]:
    """Embed every frame of a video once (decoding only if pixels are needed)."""
    if runtime.needs_pixels:
        frames = load_frames_parallel(video.frame_paths, runtime.loader)
        return [embed_frame(f, runtime.embedder) for f in frames]
    return [
        runtime.table.vector(video.video_id, i) for i in range(video.num_frames)
    ]


def recognize_video(
    video: VideoRecord,
    protos: Prototypes,
    runtime: PipelineRuntime,
    frame_vectors: list[Vector] | None = None,
) -> list[FramePrediction]:
    """Query-side stage: one causal clip, one prediction, per frame."""
    if frame_vectors is None:
        frame_vectors = video_frame_vectors(video, runtime)
    windows = causal_sliding_window(video.num_frames, runtime.sampler.clip_length)
    out = []
    for window in windows:
        clip_vec = mean_vectors([frame_vectors[i] for i in window])
        label, scores = classify_clip(clip_vec, protos, use_adapted=True)
        out.append(FramePrediction(label, tuple(scores)))
    return out


def frame_accuracy(predicted: list[str], truth: list[str]) -> float:
    if len(predicted) != len(truth):
        raise LengthMismatch(f"{len(predicted)} predictions vs {len(truth)} labels")
    if not truth:
        raise LengthMismatch("no frames to score")
    hits = sum(1 for p, t in zip(predicted, truth) if p == t)
    return hits / len(truth)


def per_user_accuracy(results: dict[str, list[tuple[list[str], list[str]]]]) -> dict[str, float]:
    """Micro-average within each user: pooled frames, one fraction per user."""
    out = {}
    for user_id, pairs in results.items():
        hits = total = 0
        for predicted, truth in pairs:
            if len(predicted) != len(truth):
                raise LengthMismatch(
                    f"user {user_id}: {len(predicted)} predictions vs {len(truth)} labels"
                )
            hits += sum(1 for p, t in zip(predicted, truth) if p == t)
            total += len(truth)
        if total == 0:
            raise LengthMismatch(f"user {user_id}: no frames to score")
        out[user_id] = hits / total
    return out


def save_prototypes(protos: Prototypes, path) -> None:
    doc = {
        "user_id": protos.user_id,
        "labels": list(protos.labels),
        "dim": protos.dim,
        "raw": protos.raw.to_rows(),
        "adapted": protos.adapted.to_rows(),
        "config_digest": protos.config_digest,
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_prototypes(path) -> Prototypes:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read prototypes file {path}: {exc}") from exc
    try:
        labels = tuple(str(x) for x in doc["labels"])
        raw = Matrix.from_rows(doc["raw"])
        adapted = Matrix.from_rows(doc["adapted"])
        protos = Prototypes(
            str(doc["user_id"]), labels, raw, adapted, str(doc["config_digest"])
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DimensionMismatch):
            raise
        raise ParseError(f"bad prototypes file {path}: {exc}") from exc
    if doc.get("dim") != protos.dim:
        raise ParseError(f"declared dim {doc.get('dim')} != matrix dim {protos.dim}")
    return protos


def save_predictions(
    video_id: str, labels: tuple[str, ...], predictions: list[FramePrediction], path
) -> None:
    doc = {
        "video_id": video_id,
        "labels": list(labels),
        "per_frame": [
            {"pred": p.pred, "scores": list(p.scores)} for p in predictions
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
