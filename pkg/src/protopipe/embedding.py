"""Frame and clip embedding.

The trained CNN backbone is out of scope here; frames are embedded by a
deterministic linear map instead: box-average the frame down to a G x G
grid per channel, scale samples to [0, 1], flatten channel-major and
multiply by a fixed projection matrix. The default projection is a seeded
Gaussian with orthonormalized columns (a near-isometry, so distinct
textures stay distinct). Users with real features can load them through
the precomputed table instead.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .media_io.pnm import Frame
from .numerics import DimensionMismatch, Matrix, Vector, matmul, mean_vectors

KIND_PATCH_PROJECTION = "patch_projection"
KIND_PRECOMPUTED = "precomputed"


class EmptyClip(ValueError):
    pass


class ParseError(ValueError):
    pass


class MissingFrameEmbedding(ValueError):
    def __init__(self, video_id: str, index: int):
        super().__init__(f"no embedding for frame {index} of video {video_id!r}")
        self.video_id = video_id
        self.index = index


class InconsistentDim(ValueError):
    pass


@dataclass(frozen=True)
class EmbedderSpec:
    kind: str
    grid: int
    channels: int
    dim: int
    projection: Matrix | None = None

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("embedding dim must be >= 2")
        if self.kind == KIND_PATCH_PROJECTION:
            if self.grid < 1 or self.channels not in (1, 3):
                raise ValueError("bad grid/channels for patch projection")
            n = self.grid * self.grid * self.channels
            p = self.projection
            if p is None or (p.rows, p.cols) != (n, self.dim):
                got = None if p is None else (p.rows, p.cols)
                raise DimensionMismatch(
                    f"projection must be {n}x{self.dim}, got {got}"
                )
        elif self.kind != KIND_PRECOMPUTED:
            raise ValueError(f"unknown embedder kind {self.kind!r}")


@dataclass(frozen=True)
class ClipEmbedding:
    vector: Vector
    source: tuple[str, int]  # (video_id, clip_start)


def _orthonormal_columns(n: int, d: int, seed: int) -> Matrix:
    # Seeded Gaussian, then modified Gram-Schmidt over the d columns.
    rng = random.Random(f"projection/{seed}")
    cols = [[rng.gauss(0.0, 1.0) for _ in range(n)] for _ in range(d)]
    for j in range(d):
        col = cols[j]
        for p in range(j):
            prev = cols[p]
            dot = sum(a * b for a, b in zip(col, prev))
            for i in range(n):
                col[i] -= dot * prev[i]
        norm = sum(a * a for a in col) ** 0.5
        if norm < 1e-12:
            raise ValueError("degenerate projection draw")  # pragma: no cover
        for i in range(n):
            col[i] /= norm
    values = [0.0] * (n * d)
    for j, col in enumerate(cols):
        for i in range(n):
            values[i * d + j] = col[i]
    return Matrix(n, d, values)


def make_patch_projection_spec(
    grid: int = 8, channels: int = 3, dim: int = 16, seed: int = 0
) -> EmbedderSpec:
    n = grid * grid * channels
    if dim > n:
        raise DimensionMismatch(f"dim {dim} exceeds flattened size {n}")
    return EmbedderSpec(
        KIND_PATCH_PROJECTION, grid, channels, dim, _orthonormal_columns(n, dim, seed)
    )


def load_projection_spec(path) -> EmbedderSpec:
    """Projection weights JSON: {"grid", "channels", "dim", "projection"}."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read projection file {path}: {exc}") from exc
    try:
        grid, channels, dim = int(doc["grid"]), int(doc["channels"]), int(doc["dim"])
        projection = Matrix.from_rows(doc["projection"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad projection file {path}: {exc}") from exc
    return EmbedderSpec(KIND_PATCH_PROJECTION, grid, channels, dim, projection)


def downsample_boxes(frame: Frame, grid: int) -> Vector:
    """Box-average to grid x grid per channel, scaled to [0, 1].

    Returns the channel-major flattening: all cells of channel 0, then
    channel 1, and so on.
    """
    w, h, c = frame.width, frame.height, frame.channels
    if w < grid or h < grid:
        raise DimensionMismatch(f"{w}x{h} frame is smaller than grid {grid}")
    xbin = [min(grid - 1, x * grid // w) for x in range(w)]
    ybin = [min(grid - 1, y * grid // h) for y in range(h)]
    cells = grid * grid
    sums = [0.0] * (cells * c)
    counts = [0] * cells
    px = frame.pixels
    for y in range(h):
        yb = ybin[y] * grid
        row = y * w
        for x in range(w):
            cell = yb + xbin[x]
            base = (row + x) * c
            for ch in range(c):
                sums[ch * cells + cell] += px[base + ch]
    for y in range(h):
        yb = ybin[y] * grid
        for x in range(w):
            counts[yb + xbin[x]] += 1
    return [
        sums[ch * cells + cell] / (counts[cell] * 255.0)
        for ch in range(c)
        for cell in range(cells)
    ]


def embed_frame(frame: Frame, spec: EmbedderSpec) -> Vector:
    """Project the normalized downsampled frame through spec.projection."""
    if spec.kind != KIND_PATCH_PROJECTION:
        raise ValueError("embed_frame requires a patch_projection spec")
    if frame.channels != spec.channels:
        raise DimensionMismatch(
            f"frame has {frame.channels} channels, spec expects {spec.channels}"
        )
    flat = downsample_boxes(frame, spec.grid)
    return matmul(Matrix(1, len(flat), flat), spec.projection).values


def embed_clip(
    frames: list[Frame], spec: EmbedderSpec, source: tuple[str, int] = ("", 0)
) -> ClipEmbedding:
    """Mean of the per-frame embeddings."""
    if not frames:
        raise EmptyClip("cannot embed an empty clip")
    vectors = [embed_frame(f, spec) for f in frames]
    return ClipEmbedding(mean_vectors(vectors), source)


@dataclass(frozen=True)
class PrecomputedTable:
    dim: int
    videos: dict[str, list[Vector]]

    def vector(self, video_id: str, frame_index: int) -> Vector:
        rows = self.videos.get(video_id)
        if rows is None or not 0 <= frame_index < len(rows):
            raise MissingFrameEmbedding(video_id, frame_index)
        return rows[frame_index]


def load_precomputed(path) -> PrecomputedTable:
    """Precomputed embeddings JSON: {"dim", "videos": {id: [[...], ...]}}.

    Every frame row must be present and of the declared dimension; holes are
    a load-time error, not a lookup-time surprise.
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read embeddings file {path}: {exc}") from exc
    if not isinstance(doc, dict) or "dim" not in doc or "videos" not in doc:
        raise ParseError(f"embeddings file {path} needs 'dim' and 'videos'")
    dim = doc["dim"]
    if not isinstance(dim, int) or dim < 2:
        raise ParseError(f"bad dim {dim!r}")
    videos: dict[str, list[Vector]] = {}
    for video_id, rows in doc["videos"].items():
        if not isinstance(rows, list):
            raise ParseError(f"video {video_id!r}: frame rows must be an array")
        table_rows: list[Vector] = []
        for idx, row in enumerate(rows):
            if row is None:
                raise MissingFrameEmbedding(video_id, idx)
            if not isinstance(row, list):
                raise ParseError(f"video {video_id!r} frame {idx}: not an array")
            if len(row) != dim:
                raise InconsistentDim(
                    f"video {video_id!r} frame {idx} has dim {len(row)}, "
                    f"expected {dim}"
                )
            table_rows.append([float(x) for x in row])
        videos[video_id] = table_rows
    return PrecomputedTable(dim, videos)


def validate_coverage(table: PrecomputedTable, videos) -> None:
    """Check the table covers every frame of the given VideoRecords."""
    for video in videos:
        rows = table.videos.get(video.video_id)
        have = 0 if rows is None else len(rows)
        if have < video.num_frames:
            raise MissingFrameEmbedding(video.video_id, have)
