"""Dense matrices over GF(2).

Rows are stored as Python ints used as packed bit words: bit ``j`` of
``rows[i]`` is entry ``(i, j)``.  Python ints give arbitrary width for
free, so the configurable size bound is a sanity check rather than a
storage limit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InvalidArgument

# Bound on either dimension; exponents in practice stay near 20.
Q_MAX = 64
MAX_DIM = 4 * Q_MAX


@dataclass(frozen=True)
class BitMatrix:
    nrows: int
    ncols: int
    rows: tuple[int, ...]

    def __post_init__(self):
        if self.nrows < 0 or self.ncols < 0:
            raise InvalidArgument("negative dimension")
        if self.nrows > MAX_DIM or self.ncols > MAX_DIM:
            raise InvalidArgument(f"dimension exceeds {MAX_DIM}")
        if len(self.rows) != self.nrows:
            raise InvalidArgument("row count does not match nrows")
        limit = 1 << self.ncols
        for r in self.rows:
            if r < 0 or r >= limit:
                raise InvalidArgument("row has bits outside the column range")

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "BitMatrix":
        return cls(nrows, ncols, (0,) * nrows)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(n, n, tuple(1 << i for i in range(n)))

    @classmethod
    def from_lists(cls, data: Sequence[Sequence[int]], ncols: int | None = None) -> "BitMatrix":
        if ncols is None:
            ncols = len(data[0]) if data else 0
        rows = []
        for row in data:
            if len(row) != ncols:
                raise InvalidArgument("ragged row")
            word = 0
            for j, bit in enumerate(row):
                if bit not in (0, 1):
                    raise InvalidArgument(f"entry {bit!r} is not a bit")
                word |= bit << j
            rows.append(word)
        return cls(len(rows), ncols, tuple(rows))

    @classmethod
    def from_strings(cls, data: Sequence[str], ncols: int | None = None) -> "BitMatrix":
        return cls.from_lists([[int(c) for c in s] for s in data], ncols)

    def to_lists(self) -> list[list[int]]:
        return [[(r >> j) & 1 for j in range(self.ncols)] for r in self.rows]

    def to_strings(self) -> list[str]:
        return ["".join(str(b) for b in row) for row in self.to_lists()]

    def __getitem__(self, idx: tuple[int, int]) -> int:
        i, j = idx
        if not (0 <= i < self.nrows and 0 <= j < self.ncols):
            raise IndexError(idx)
        return (self.rows[i] >> j) & 1

    def row_slice(self, start: int, stop: int) -> "BitMatrix":
        return BitMatrix(stop - start, self.ncols, self.rows[start:stop])

    def apply(self, vec: int) -> int:
        """Multiply by a column vector packed as an int (bit j = entry j)."""
        out = 0
        for i, r in enumerate(self.rows):
            out |= (bin(r & vec).count("1") & 1) << i
        return out

    def __repr__(self) -> str:
        body = "; ".join(self.to_strings())
        return f"BitMatrix({self.nrows}x{self.ncols}: {body})"


def shift_channel(q: int, n: int) -> BitMatrix:
    """The q x q matrix S^(q-n): input bit i lands in row i + (q - n)."""
    if q < 0 or n < 0 or n > q:
        raise InvalidArgument(f"need 0 <= n <= q, got n={n}, q={q}")
    s = q - n
    return BitMatrix(q, q, tuple((1 << (i - s)) if i >= s else 0 for i in range(q)))


def rank(m: BitMatrix) -> int:
    pivots: dict[int, int] = {}
    r = 0
    for row in m.rows:
        while row:
            top = row.bit_length() - 1
            if top in pivots:
                row ^= pivots[top]
            else:
                pivots[top] = row
                r += 1
                break
    return r


def multiply(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    if a.ncols != b.nrows:
        raise InvalidArgument(f"cannot multiply {a.nrows}x{a.ncols} by {b.nrows}x{b.ncols}")
    out = []
    for row in a.rows:
        acc = 0
        j = 0
        while row:
            if row & 1:
                acc ^= b.rows[j]
            row >>= 1
            j += 1
        out.append(acc)
    return BitMatrix(a.nrows, b.ncols, tuple(out))


def hstack(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    if a.nrows != b.nrows:
        raise InvalidArgument(f"hstack row mismatch {a.nrows} vs {b.nrows}")
    return BitMatrix(a.nrows, a.ncols + b.ncols,
                     tuple(x | (y << a.ncols) for x, y in zip(a.rows, b.rows)))


def vstack(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    if a.ncols != b.ncols:
        raise InvalidArgument(f"vstack column mismatch {a.ncols} vs {b.ncols}")
    return BitMatrix(a.nrows + b.nrows, a.ncols, a.rows + b.rows)


def vstack_all(parts: Iterable[BitMatrix], ncols: int) -> BitMatrix:
    out = BitMatrix.zeros(0, ncols)
    for p in parts:
        out = vstack(out, p)
    return out
