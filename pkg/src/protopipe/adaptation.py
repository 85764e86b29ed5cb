"""Set-to-set prototype adaptation.

A single post-norm transformer encoder block applied to the stacked class
prototypes: multi-head self-attention with a residual connection and layer
norm, then a two-layer relu feed-forward with another residual and layer
norm. Each prototype is refined in the context of the full set, so the
output is permutation-equivariant in the rows.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from pathlib import Path

from .numerics import (
    Matrix,
    Vector,
    add,
    hconcat,
    layer_norm_rows,
    matmul,
    relu,
    scale,
    softmax_rows,
)


class ParseError(ValueError):
    pass


class ShapeMismatch(ValueError):
    def __init__(self, field_name: str, expected: tuple, got: tuple):
        super().__init__(f"{field_name}: expected shape {expected}, got {got}")
        self.field_name = field_name


@dataclass(frozen=True)
class TransformerWeights:
    d: int
    h: int
    d_ff: int
    w_q: list[Matrix]  # one d x (d/h) matrix per head
    w_k: list[Matrix]
    w_v: list[Matrix]
    w_o: Matrix  # d x d
    w1: Matrix  # d x d_ff
    b1: Vector
    w2: Matrix  # d_ff x d
    b2: Vector
    ln1_gain: Vector
    ln1_bias: Vector
    ln2_gain: Vector
    ln2_bias: Vector
    eps: float = 1e-5

    def __post_init__(self):
        d, h, d_ff = self.d, self.h, self.d_ff
        if d < 1 or h < 1 or d_ff < 1:
            raise ValueError("d, h and d_ff must be positive")
        if d % h:
            raise ValueError(f"d={d} is not divisible by h={h}")
        if self.eps <= 0.0:
            raise ValueError("eps must be positive")
        d_head = d // h
        for name in ("w_q", "w_k", "w_v"):
            mats = getattr(self, name)
            if len(mats) != h:
                raise ShapeMismatch(name, (h,), (len(mats),))
            for i, m in enumerate(mats):
                if (m.rows, m.cols) != (d, d_head):
                    raise ShapeMismatch(f"{name}[{i}]", (d, d_head), (m.rows, m.cols))
        checks = [
            ("w_o", self.w_o, (d, d)),
            ("w1", self.w1, (d, d_ff)),
            ("w2", self.w2, (d_ff, d)),
        ]
        for name, m, shape in checks:
            if (m.rows, m.cols) != shape:
                raise ShapeMismatch(name, shape, (m.rows, m.cols))
        vectors = [
            ("b1", self.b1, d_ff),
            ("b2", self.b2, d),
            ("ln1_gain", self.ln1_gain, d),
            ("ln1_bias", self.ln1_bias, d),
            ("ln2_gain", self.ln2_gain, d),
            ("ln2_bias", self.ln2_bias, d),
        ]
        for name, v, n in vectors:
            if len(v) != n:
                raise ShapeMismatch(name, (n,), (len(v),))


def attention_matrices(p: Matrix, w: TransformerWeights) -> list[Matrix]:
    """Per-head attention: softmax(Q Kᵀ / sqrt(d/h)) with Q = P·W_Qi, K = P·W_Ki.

    Every row of every returned matrix sums to one.
    """
    if p.cols != w.d:
        raise ShapeMismatch("prototypes", (p.rows, w.d), (p.rows, p.cols))
    inv_sqrt = 1.0 / math.sqrt(w.d / w.h)
    out = []
    for i in range(w.h):
        q = matmul(p, w.w_q[i])
        k = matmul(p, w.w_k[i])
        logits = scale(matmul(q, k.transpose()), inv_sqrt)
        out.append(softmax_rows(logits))
    return out


def self_attention(p: Matrix, w: TransformerWeights) -> Matrix:
    """Concatenate the per-head values A_i·(P·W_Vi), then project by W_O."""
    heads = attention_matrices(p, w)
    mixed = [matmul(a, matmul(p, w.w_v[i])) for i, a in enumerate(heads)]
    return matmul(hconcat(mixed), w.w_o)


def _ffn(z: Matrix, w: TransformerWeights) -> Matrix:
    hidden = relu(_add_row_bias(matmul(z, w.w1), w.b1))
    return _add_row_bias(matmul(hidden, w.w2), w.b2)


def _add_row_bias(m: Matrix, bias: Vector) -> Matrix:
    values = list(m.values)
    for r in range(m.rows):
        base = r * m.cols
        for j, b in enumerate(bias):
            values[base + j] += b
    return Matrix(m.rows, m.cols, values)


def adapt_prototypes(p: Matrix, w: TransformerWeights) -> Matrix:
    """Post-norm encoder block: LN(Z + FFN(Z)) where Z = LN(P + attn(P))."""
    z = layer_norm_rows(add(p, self_attention(p, w)), w.ln1_gain, w.ln1_bias, w.eps)
    return layer_norm_rows(add(z, _ffn(z, w)), w.ln2_gain, w.ln2_bias, w.eps)


def random_transformer_weights(
    d: int, h: int = 1, d_ff: int | None = None, seed: int = 0
) -> TransformerWeights:
    """Gaussian init scaled by 1/sqrt(fan_in); zero biases, identity norms."""
    if d_ff is None:
        d_ff = 2 * d
    rng = random.Random(f"transformer/{seed}")

    def draw(rows: int, cols: int) -> Matrix:
        s = 1.0 / math.sqrt(rows)
        return Matrix(rows, cols, [rng.gauss(0.0, s) for _ in range(rows * cols)])

    d_head = d // h
    return TransformerWeights(
        d=d,
        h=h,
        d_ff=d_ff,
        w_q=[draw(d, d_head) for _ in range(h)],
        w_k=[draw(d, d_head) for _ in range(h)],
        w_v=[draw(d, d_head) for _ in range(h)],
        w_o=draw(d, d),
        w1=draw(d, d_ff),
        b1=[0.0] * d_ff,
        w2=draw(d_ff, d),
        b2=[0.0] * d,
        ln1_gain=[1.0] * d,
        ln1_bias=[0.0] * d,
        ln2_gain=[1.0] * d,
        ln2_bias=[0.0] * d,
    )


def centering_adapter_weights(d: int, strength: float = 1.0) -> TransformerWeights:
    """A hand-built block that pushes each prototype away from the set mean.

    Zero Q/K make attention uniform, so the attention output is the set mean;
    W_V = -strength*I and W_O = I turn the residual into P - strength*mean(P).
    The feed-forward stage is zeroed, leaving only the two layer norms. The
    effect is to strip the component the classes share, which widens the
    angles between prototypes.
    """
    zeros = Matrix.zeros(d, d)
    neg_eye = scale(Matrix.identity(d), -strength)
    return TransformerWeights(
        d=d,
        h=1,
        d_ff=d,
        w_q=[zeros],
        w_k=[zeros],
        w_v=[neg_eye],
        w_o=Matrix.identity(d),
        w1=Matrix.zeros(d, d),
        b1=[0.0] * d,
        w2=Matrix.zeros(d, d),
        b2=[0.0] * d,
        ln1_gain=[1.0] * d,
        ln1_bias=[0.0] * d,
        ln2_gain=[1.0] * d,
        ln2_bias=[0.0] * d,
    )


def _matrix_field(doc: dict, name: str) -> Matrix:
    try:
        return Matrix.from_rows(doc[name])
    except KeyError as exc:
        raise ParseError(f"missing field {name!r}") from exc
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad matrix in field {name!r}: {exc}") from exc


def _vector_field(doc: dict, name: str) -> Vector:
    try:
        return [float(x) for x in doc[name]]
    except KeyError as exc:
        raise ParseError(f"missing field {name!r}") from exc
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad vector in field {name!r}: {exc}") from exc


def load_transformer_weights(path) -> TransformerWeights:
    """Adapter weights JSON; shapes are validated on construction."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read adapter weights {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("adapter weights must be a JSON object")
    try:
        d, h, d_ff = int(doc["d"]), int(doc["h"]), int(doc["d_ff"])
        heads = doc["heads"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad adapter header: {exc}") from exc
    if not isinstance(heads, list):
        raise ParseError("'heads' must be an array")
    w_q, w_k, w_v = [], [], []
    for i, head in enumerate(heads):
        if not isinstance(head, dict):
            raise ParseError(f"heads[{i}] must be an object")
        w_q.append(_matrix_field(head, "w_q"))
        w_k.append(_matrix_field(head, "w_k"))
        w_v.append(_matrix_field(head, "w_v"))
    ln1 = doc.get("ln1", {})
    ln2 = doc.get("ln2", {})
    if not isinstance(ln1, dict) or not isinstance(ln2, dict):
        raise ParseError("'ln1' and 'ln2' must be objects")
    return TransformerWeights(
        d=d,
        h=h,
        d_ff=d_ff,
        w_q=w_q,
        w_k=w_k,
        w_v=w_v,
        w_o=_matrix_field(doc, "w_o"),
        w1=_matrix_field(doc, "w1"),
        b1=_vector_field(doc, "b1"),
        w2=_matrix_field(doc, "w2"),
        b2=_vector_field(doc, "b2"),
        ln1_gain=_vector_field(ln1, "gain"),
        ln1_bias=_vector_field(ln1, "bias"),
        ln2_gain=_vector_field(ln2, "gain"),
        ln2_bias=_vector_field(ln2, "bias"),
        eps=float(doc.get("eps", 1e-5)),
    )


def save_transformer_weights(w: TransformerWeights, path) -> None:
    doc = {
        "d": w.d,
        "h": w.h,
        "d_ff": w.d_ff,
        "heads": [
            {
                "w_q": w.w_q[i].to_rows(),
                "w_k": w.w_k[i].to_rows(),
                "w_v": w.w_v[i].to_rows(),
            }
            for i in range(w.h)
        ],
        "w_o": w.w_o.to_rows(),
        "w1": w.w1.to_rows(),
        "b1": list(w.b1),
        "w2": w.w2.to_rows(),
        "b2": list(w.b2),
        "ln1": {"gain": list(w.ln1_gain), "bias": list(w.ln1_bias)},
        "ln2": {"gain": list(w.ln2_gain), "bias": list(w.ln2_bias)},
        "eps": w.eps,
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
