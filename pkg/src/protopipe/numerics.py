"""Dense linear algebra and activation kernels, stdlib only.

Everything here operates on 64-bit Python floats. Matrices are row-major
and small (prototype stacks, attention weights), so plain loops are fast
enough and keep results bit-reproducible across platforms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

Vector = list[float]


class DimensionMismatch(ValueError):
    """Operand shapes are incompatible."""


class EmptyInput(ValueError):
    """Operation needs at least one row/element."""


@dataclass(frozen=True)
class Matrix:
    """Immutable row-major float64 matrix."""

    rows: int
    cols: int
    values: list[float]

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0:
            raise DimensionMismatch(f"negative shape {self.rows}x{self.cols}")
        if len(self.values) != self.rows * self.cols:
            raise DimensionMismatch(
                f"{self.rows}x{self.cols} matrix needs {self.rows * self.cols} "
                f"values, got {len(self.values)}"
            )
        for v in self.values:
            if not math.isfinite(v):
                raise ValueError(f"non-finite matrix entry {v!r}")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]]) -> "Matrix":
        n = len(rows)
        m = len(rows[0]) if n else 0
        flat: list[float] = []
        for r in rows:
            if len(r) != m:
                raise DimensionMismatch("ragged rows")
            flat.extend(float(x) for x in r)
        return cls(n, m, flat)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "Matrix":
        return cls(rows, cols, [0.0] * (rows * cols))

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        values = [0.0] * (n * n)
        for i in range(n):
            values[i * n + i] = 1.0
        return cls(n, n, values)

    def row(self, i: int) -> Vector:
        return self.values[i * self.cols : (i + 1) * self.cols]

    def to_rows(self) -> list[Vector]:
        return [self.row(i) for i in range(self.rows)]

    def at(self, i: int, j: int) -> float:
        return self.values[i * self.cols + j]

    def transpose(self) -> "Matrix":
        out = [0.0] * (self.rows * self.cols)
        for i in range(self.rows):
            base = i * self.cols
            for j in range(self.cols):
                out[j * self.rows + i] = self.values[base + j]
        return Matrix(self.cols, self.rows, out)


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Standard matrix product."""
    if a.cols != b.rows:
        raise DimensionMismatch(
            f"cannot multiply {a.rows}x{a.cols} by {b.rows}x{b.cols}"
        )
    n, k, m = a.rows, a.cols, b.cols
    av, bv = a.values, b.values
    out = [0.0] * (n * m)
    for i in range(n):
        arow = av[i * k : (i + 1) * k]
        obase = i * m
        for p in range(k):
            x = arow[p]
            if x == 0.0:
                continue
            bbase = p * m
            for j in range(m):
                out[obase + j] += x * bv[bbase + j]
    return Matrix(n, m, out)


def add(a: Matrix, b: Matrix) -> Matrix:
    if (a.rows, a.cols) != (b.rows, b.cols):
        raise DimensionMismatch(
            f"cannot add {a.rows}x{a.cols} and {b.rows}x{b.cols}"
        )
    return Matrix(a.rows, a.cols, [x + y for x, y in zip(a.values, b.values)])


def softmax_rows(m: Matrix) -> Matrix:
    """Row-wise softmax, max-shifted so large logits cannot overflow."""
    if m.rows == 0 or m.cols == 0:
        raise EmptyInput("softmax_rows needs a nonempty matrix")
    out: list[float] = []
    for i in range(m.rows):
        row = m.row(i)
        top = max(row)
        exps = [math.exp(x - top) for x in row]
        total = sum(exps)
        out.extend(e / total for e in exps)
    return Matrix(m.rows, m.cols, out)


def layer_norm_rows(m: Matrix, gain: Vector, bias: Vector, eps: float) -> Matrix:
    """Per-row normalization to zero mean / unit variance, then gain and bias.

    Uses population (biased) variance with eps added inside the square root.
    """
    if len(gain) != m.cols or len(bias) != m.cols:
        raise DimensionMismatch(
            f"gain/bias length {len(gain)}/{len(bias)} vs {m.cols} columns"
        )
    if eps <= 0:
        raise ValueError("eps must be positive")
    out: list[float] = []
    for i in range(m.rows):
        row = m.row(i)
        mean = sum(row) / m.cols
        var = sum((x - mean) ** 2 for x in row) / m.cols
        denom = math.sqrt(var + eps)
        out.extend(
            g * ((x - mean) / denom) + b for x, g, b in zip(row, gain, bias)
        )
    return Matrix(m.rows, m.cols, out)


def cosine_similarity(a: Vector, b: Vector) -> float:
    """Cosine of the angle between two vectors, 0.0 if either is ~zero."""
    if len(a) != len(b):
        raise DimensionMismatch(f"vector lengths {len(a)} vs {len(b)}")
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    if na < 1e-12 or nb < 1e-12:
        return 0.0
    return max(-1.0, min(1.0, dot / (na * nb)))


def mean_rows(m: Matrix) -> Vector:
    """Column-wise arithmetic mean."""
    if m.rows == 0:
        raise EmptyInput("mean_rows of an empty matrix")
    acc = [0.0] * m.cols
    for i in range(m.rows):
        base = i * m.cols
        for j in range(m.cols):
            acc[j] += m.values[base + j]
    return [x / m.rows for x in acc]


def mean_vectors(vectors: Sequence[Vector]) -> Vector:
    """Arithmetic mean of same-length vectors."""
    if not vectors:
        raise EmptyInput("mean of no vectors")
    n = len(vectors[0])
    acc = [0.0] * n
    for v in vectors:
        if len(v) != n:
            raise DimensionMismatch(f"vector lengths {len(v)} vs {n}")
        for j, x in enumerate(v):
            acc[j] += x
    return [x / len(vectors) for x in acc]


def relu(m: Matrix) -> Matrix:
    """Entry-wise max(0, x)."""
    return Matrix(m.rows, m.cols, [x if x > 0.0 else 0.0 for x in m.values])


def scale(m: Matrix, c: float) -> Matrix:
    return Matrix(m.rows, m.cols, [c * x for x in m.values])


def hconcat(blocks: Sequence[Matrix]) -> Matrix:
    """Concatenate matrices with equal row counts along columns."""
    if not blocks:
        raise EmptyInput("hconcat of no blocks")
    rows = blocks[0].rows
    for b in blocks:
        if b.rows != rows:
            raise DimensionMismatch("hconcat row counts differ")
    out: list[float] = []
    for i in range(rows):
        for b in blocks:
            out.extend(b.row(i))
    return Matrix(rows, sum(b.cols for b in blocks), out)
