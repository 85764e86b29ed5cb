from __future__ import annotations

import pytest

from protopipe.media_io.pnm import Frame
from protopipe.media_io.synthetic import GeneratorSpec, generate_synthetic_dataset


def gray_frame(rows):
    """Build a grayscale Frame from a list of row lists."""
    h = len(rows)
    w = len(rows[0])
    return Frame(w, h, 1, bytes(v for row in rows for v in row))


def rgb_frame(rows):
    """Build an RGB Frame from rows of (r, g, b) tuples."""
    h = len(rows)
    w = len(rows[0])
    return Frame(w, h, 3, bytes(v for row in rows for px in row for v in px))


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """2 users x 2 objects, 16-frame videos, no blanks. Shared read-only."""
    root = tmp_path_factory.mktemp("small_ds")
    spec = GeneratorSpec(
        num_users=2,
        objects_per_user=2,
        videos_per_object=1,
        frames_per_video=16,
        frame_size=32,
        blank_fraction=0.0,
        seed=3,
    )
    manifest = generate_synthetic_dataset(spec, root)
    return manifest, root
