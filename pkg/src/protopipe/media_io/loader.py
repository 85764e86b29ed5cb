"""Multi-threaded frame loading.

Episode assembly is dominated by per-file read latency, so reads are fanned
out over a bounded thread pool and the results are stitched back into input
order. An optional injected per-read latency simulates slow disks, which
keeps speedup measurements deterministic across machines.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .pnm import Frame, PnmError, decode_pnm


class DecodeError(ValueError):
    def __init__(self, path: str, cause: Exception):
        super().__init__(f"{path}: {cause}")
        self.path = path


@dataclass(frozen=True)
class LoaderConfig:
    num_threads: int = 1
    injected_latency_ms: float = 0.0
    decode_after_read: bool = True

    def __post_init__(self):
        if self.num_threads < 1:
            raise ValueError("num_threads must be >= 1")
        if self.injected_latency_ms < 0:
            raise ValueError("injected_latency_ms must be >= 0")


def _read_one(path: str, cfg: LoaderConfig) -> Frame | bytes:
    if cfg.injected_latency_ms > 0:
        time.sleep(cfg.injected_latency_ms / 1000.0)
    with open(path, "rb") as fh:
        data = fh.read()
    if not cfg.decode_after_read:
        return data
    try:
        return decode_pnm(data)
    except PnmError as exc:
        raise DecodeError(str(path), exc) from exc


def load_frames_parallel(
    paths: list[str], cfg: LoaderConfig
) -> list[Frame] | list[bytes]:
    """Load every path, in input order, using cfg.num_threads workers.

    The first failure (by input position, so the report is deterministic
    regardless of completion order) aborts the batch.
    """
    if not paths:
        return []
    if cfg.num_threads == 1:
        return [_read_one(p, cfg) for p in paths]
    with ThreadPoolExecutor(max_workers=cfg.num_threads) as pool:
        futures = [pool.submit(_read_one, p, cfg) for p in paths]
        results = []
        for future in futures:
            results.append(future.result())  # re-raises earliest-index error
        return results
