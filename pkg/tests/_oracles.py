"""Independent numpy reference implementations used to cross-check results.

Nothing here imports from protopipe's internals beyond plain data (lists of
floats, weight containers), so a bug in the package cannot hide inside its
own oracle.
"""
from __future__ import annotations

import numpy as np


def np_softmax_rows(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def np_layer_norm_rows(
    x: np.ndarray, gain: np.ndarray, bias: np.ndarray, eps: float
) -> np.ndarray:
    mean = x.mean(axis=1, keepdims=True)
    var = x.var(axis=1, keepdims=True)  # population variance
    return gain * ((x - mean) / np.sqrt(var + eps)) + bias


def np_transformer_block(p: np.ndarray, w) -> np.ndarray:
    """Straight-line re-derivation of the post-norm encoder block.

    `w` is a protopipe TransformerWeights; only its raw lists are read.
    """
    def mat(m):
        return np.array(m.values, dtype=np.float64).reshape(m.rows, m.cols)

    d, h = w.d, w.h
    dk = d // h
    heads = []
    for i in range(h):
        q = p @ mat(w.w_q[i])
        k = p @ mat(w.w_k[i])
        v = p @ mat(w.w_v[i])
        logits = (q @ k.T) / np.sqrt(dk)
        heads.append(np_softmax_rows(logits) @ v)
    attn = np.concatenate(heads, axis=1) @ mat(w.w_o)
    ln1 = np_layer_norm_rows(
        p + attn, np.array(w.ln1_gain), np.array(w.ln1_bias), w.eps
    )
    hidden = np.maximum(ln1 @ mat(w.w1) + np.array(w.b1), 0.0)
    ffn = hidden @ mat(w.w2) + np.array(w.b2)
    return np_layer_norm_rows(
        ln1 + ffn, np.array(w.ln2_gain), np.array(w.ln2_bias), w.eps
    )


def np_sobel_magnitude(gray: np.ndarray) -> np.ndarray:
    """3x3 Sobel gradient magnitude on the interior (no padding)."""
    g = gray.astype(np.float64)
    h, w = g.shape
    gx = np.zeros((h - 2, w - 2))
    gy = np.zeros((h - 2, w - 2))
    for dy, dx, cx, cy in (
        (-1, -1, -1.0, -1.0),
        (-1, 0, 0.0, -2.0),
        (-1, 1, 1.0, -1.0),
        (0, -1, -2.0, 0.0),
        (0, 1, 2.0, 0.0),
        (1, -1, -1.0, 1.0),
        (1, 0, 0.0, 2.0),
        (1, 1, 1.0, 1.0),
    ):
        patch = g[1 + dy : h - 1 + dy, 1 + dx : w - 1 + dx]
        gx += cx * patch
        gy += cy * patch
    return np.sqrt(gx * gx + gy * gy)


def np_downsample_boxes(pixels: np.ndarray, grid: int) -> np.ndarray:
    """Channel-major box-average matching the embedder's binning rule."""
    h, w, c = pixels.shape
    sums = np.zeros((c, grid, grid))
    counts = np.zeros((grid, grid))
    for y in range(h):
        yb = min(grid - 1, y * grid // h)
        for x in range(w):
            xb = min(grid - 1, x * grid // w)
            counts[yb, xb] += 1
            for ch in range(c):
                sums[ch, yb, xb] += pixels[y, x, ch]
    return (sums / counts / 255.0).reshape(-1)
