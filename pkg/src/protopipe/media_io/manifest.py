"""Dataset manifest: users own objects, objects own clean/clutter videos.

The on-disk form is JSON with frame paths relative to the manifest file;
loading resolves them and validates every structural invariant eagerly so
later stages never see a half-formed dataset.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path


class ManifestError(ValueError):
    pass


class ParseError(ManifestError):
    pass


class SchemaViolation(ManifestError):
    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer}: {message}")
        self.pointer = pointer


class InvariantViolation(ManifestError):
    pass


KIND_CLEAN = "clean"
KIND_CLUTTER = "clutter"


@dataclass(frozen=True)
class VideoRecord:
    video_id: str
    kind: str  # "clean" (support candidate) or "clutter" (query candidate)
    frame_paths: list[str]

    @property
    def num_frames(self) -> int:
        return len(self.frame_paths)


@dataclass(frozen=True)
class ObjectRecord:
    label: str
    videos: list[VideoRecord]

    def videos_of_kind(self, kind: str) -> list[VideoRecord]:
        return [v for v in self.videos if v.kind == kind]


@dataclass(frozen=True)
class UserRecord:
    user_id: str
    objects: list[ObjectRecord]

    def labels(self) -> list[str]:
        return [o.label for o in self.objects]


@dataclass(frozen=True)
class DatasetManifest:
    users: list[UserRecord]
    base_dir: Path = field(default_factory=Path)

    def user(self, user_id: str) -> UserRecord:
        for u in self.users:
            if u.user_id == user_id:
                return u
        raise KeyError(user_id)

    def user_ids(self) -> list[str]:
        return [u.user_id for u in self.users]

    def all_videos(self) -> list[VideoRecord]:
        return [v for u in self.users for o in u.objects for v in o.videos]


def _expect(value, typ, pointer: str, what: str):
    if not isinstance(value, typ):
        raise SchemaViolation(pointer, f"expected {what}, got {type(value).__name__}")
    return value


def _expect_str(value, pointer: str) -> str:
    s = _expect(value, str, pointer, "string")
    if not s:
        raise SchemaViolation(pointer, "empty string")
    return s


def _parse_video(node, pointer: str, base_dir: Path) -> VideoRecord:
    obj = _expect(node, dict, pointer, "object")
    video_id = _expect_str(obj.get("video_id"), f"{pointer}/video_id")
    kind = _expect_str(obj.get("kind"), f"{pointer}/kind")
    if kind not in (KIND_CLEAN, KIND_CLUTTER):
        raise SchemaViolation(f"{pointer}/kind", f"must be 'clean' or 'clutter', got {kind!r}")
    frames = _expect(obj.get("frames"), list, f"{pointer}/frames", "array")
    paths = [
        str(base_dir / _expect_str(p, f"{pointer}/frames/{i}"))
        for i, p in enumerate(frames)
    ]
    if not paths:
        raise InvariantViolation(f"video {video_id!r} has no frames")
    return VideoRecord(video_id, kind, paths)


def _parse_object(node, pointer: str, base_dir: Path) -> ObjectRecord:
    obj = _expect(node, dict, pointer, "object")
    label = _expect_str(obj.get("label"), f"{pointer}/label")
    videos_node = _expect(obj.get("videos"), list, f"{pointer}/videos", "array")
    videos = [
        _parse_video(v, f"{pointer}/videos/{i}", base_dir)
        for i, v in enumerate(videos_node)
    ]
    return ObjectRecord(label, videos)


def _check_user_invariants(user: UserRecord) -> None:
    labels = user.labels()
    if len(set(labels)) != len(labels):
        dupes = sorted({l for l in labels if labels.count(l) > 1})
        raise InvariantViolation(
            f"user {user.user_id!r} has duplicate labels {dupes}"
        )
    if len(user.objects) < 2:
        raise InvariantViolation(
            f"user {user.user_id!r} has {len(user.objects)} object(s); "
            "an episode needs at least 2"
        )
    for obj in user.objects:
        if not obj.videos_of_kind(KIND_CLEAN):
            raise InvariantViolation(
                f"object {obj.label!r} of user {user.user_id!r} has no clean video"
            )
        if not obj.videos_of_kind(KIND_CLUTTER):
            raise InvariantViolation(
                f"object {obj.label!r} of user {user.user_id!r} has no clutter video"
            )


def parse_manifest(document, base_dir: Path) -> DatasetManifest:
    root = _expect(document, dict, "", "object")
    users_node = _expect(root.get("users"), list, "/users", "array")
    users = []
    for i, u in enumerate(users_node):
        pointer = f"/users/{i}"
        obj = _expect(u, dict, pointer, "object")
        user_id = _expect_str(obj.get("user_id"), f"{pointer}/user_id")
        objects_node = _expect(obj.get("objects"), list, f"{pointer}/objects", "array")
        objects = [
            _parse_object(o, f"{pointer}/objects/{j}", base_dir)
            for j, o in enumerate(objects_node)
        ]
        users.append(UserRecord(user_id, objects))
    ids = [u.user_id for u in users]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise InvariantViolation(f"duplicate user_ids {dupes}")
    for user in users:
        _check_user_invariants(user)
    return DatasetManifest(users, base_dir)


def load_manifest(path) -> DatasetManifest:
    """Load and validate a manifest JSON file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read manifest {path}: {exc}") from exc
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"manifest {path} is not valid JSON: {exc}") from exc
    return parse_manifest(document, path.parent)
