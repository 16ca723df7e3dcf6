"""Bit-packed linear algebra over GF(2).

Vectors and matrices store their bits in 64-bit words (LSB-first within a
word), so syndrome computation in the Monte Carlo inner loop reduces to
AND + popcount. All values are immutable; operations return new objects.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

WORD_BITS = 64


def _words_needed(nbits: int) -> int:
    return max(1, (nbits + WORD_BITS - 1) // WORD_BITS)


def _pack(dense: np.ndarray) -> np.ndarray:
    """Pack a (..., nbits) uint8 array of 0/1 into (..., nwords) uint64."""
    nbits = dense.shape[-1]
    pad = _words_needed(nbits) * WORD_BITS - nbits
    if pad:
        pad_shape = dense.shape[:-1] + (pad,)
        dense = np.concatenate([dense, np.zeros(pad_shape, dtype=np.uint8)], axis=-1)
    packed = np.packbits(np.ascontiguousarray(dense, dtype=np.uint8), axis=-1, bitorder="little")
    return packed.view(np.uint64)


def _unpack(words: np.ndarray, nbits: int) -> np.ndarray:
    """Inverse of _pack; returns uint8 array of 0/1 of logical width nbits."""
    as_bytes = np.ascontiguousarray(words).view(np.uint8)
    return np.unpackbits(as_bytes, axis=-1, bitorder="little")[..., :nbits]


class BitVector:
    """Immutable GF(2) vector of fixed length."""

    __slots__ = ("length", "words")

    def __init__(self, length: int, words: np.ndarray, _trusted: bool = False):
        if length < 0:
            raise ValueError("length must be nonnegative")
        if not _trusted:
            words = np.array(words, dtype=np.uint64).reshape(_words_needed(length))
        words.flags.writeable = False
        self.length = length
        self.words = words

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitVector":
        dense = np.asarray(list(bits), dtype=np.uint8)
        if dense.size and not np.isin(dense, (0, 1)).all():
            raise ValueError("bits must be 0 or 1")
        return cls.from_dense(dense)

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "BitVector":
        dense = np.atleast_1d(np.asarray(dense))
        if dense.ndim != 1:
            raise ValueError("expected a 1-D array of bits")
        dense = (dense.astype(np.uint8)) & 1
        return cls(dense.shape[0], _pack(dense).copy(), _trusted=True)

    @classmethod
    def zeros(cls, length: int) -> "BitVector":
        return cls(length, np.zeros(_words_needed(length), dtype=np.uint64), _trusted=True)

    # -- views -------------------------------------------------------------

    def to_dense(self) -> np.ndarray:
        return _unpack(self.words, self.length)

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError(i)
        return int((self.words[i // WORD_BITS] >> np.uint64(i % WORD_BITS)) & np.uint64(1))

    def weight(self) -> int:
        """Number of set bits."""
        return int(np.bitwise_count(self.words).sum())

    # -- algebra -----------------------------------------------------------

    def __xor__(self, other: "BitVector") -> "BitVector":
        if self.length != other.length:
            raise ValueError(f"length mismatch: {self.length} vs {other.length}")
        return BitVector(self.length, (self.words ^ other.words).copy(), _trusted=True)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, BitVector)
            and self.length == other.length
            and bool(np.array_equal(self.words, other.words))
        )

    def __hash__(self) -> int:
        return hash((self.length, self.words.tobytes()))

    def __repr__(self) -> str:
        return f"BitVector({self.to_dense().tolist()})"


class BitMatrix:
    """Immutable GF(2) matrix, rows packed into 64-bit words."""

    __slots__ = ("rows", "cols", "words")

    def __init__(self, rows: int, cols: int, words: np.ndarray, _trusted: bool = False):
        if rows < 0 or cols < 0:
            raise ValueError("dimensions must be nonnegative")
        if not _trusted:
            words = np.array(words, dtype=np.uint64).reshape(rows, _words_needed(cols))
        words.flags.writeable = False
        self.rows = rows
        self.cols = cols
        self.words = words

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "BitMatrix":
        dense = np.asarray(rows, dtype=np.uint8)
        if dense.ndim != 2:
            raise ValueError("expected a 2-D sequence of bits")
        return cls.from_dense(dense)

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "BitMatrix":
        dense = np.asarray(dense)
        if dense.ndim != 2:
            raise ValueError("expected a 2-D array of bits")
        dense = dense.astype(np.uint8) & 1
        r, c = dense.shape
        if r == 0:
            return cls.zeros(0, c)
        return cls(r, c, _pack(dense).copy(), _trusted=True)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols, np.zeros((rows, _words_needed(cols)), dtype=np.uint64), _trusted=True)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls.from_dense(np.eye(n, dtype=np.uint8))

    # -- views -------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def to_dense(self) -> np.ndarray:
        if self.rows == 0:
            return np.zeros((0, self.cols), dtype=np.uint8)
        return _unpack(self.words, self.cols)

    def row(self, i: int) -> BitVector:
        if not 0 <= i < self.rows:
            raise IndexError(i)
        return BitVector(self.cols, self.words[i].copy(), _trusted=True)

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(ij)
        return int((self.words[i, j // WORD_BITS] >> np.uint64(j % WORD_BITS)) & np.uint64(1))

    def transpose(self) -> "BitMatrix":
        return BitMatrix.from_dense(self.to_dense().T)

    @property
    def T(self) -> "BitMatrix":
        return self.transpose()

    def select_rows(self, indices: Sequence[int]) -> "BitMatrix":
        idx = np.asarray(indices, dtype=np.intp)
        if idx.size and (idx.min() < 0 or idx.max() >= self.rows):
            raise IndexError("row index out of range")
        return BitMatrix(len(indices), self.cols, self.words[idx].copy(), _trusted=True)

    def select_cols(self, indices: Sequence[int]) -> "BitMatrix":
        dense = self.to_dense()
        idx = np.asarray(indices, dtype=np.intp)
        return BitMatrix.from_dense(dense[:, idx])

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, BitMatrix)
            and self.shape == other.shape
            and bool(np.array_equal(self.words, other.words))
        )

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.words.tobytes()))

    def __repr__(self) -> str:
        return f"BitMatrix({self.to_dense().tolist()})"


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def gf2_matvec(m: BitMatrix, v: BitVector) -> BitVector:
    """Matrix-vector product over GF(2): result[i] = parity(row_i AND v)."""
    if v.length != m.cols:
        raise ValueError(f"dimension mismatch: matrix is {m.rows}x{m.cols}, vector has length {v.length}")
    if m.rows == 0:
        return BitVector.zeros(0)
    parities = (np.bitwise_count(m.words & v.words[None, :]).sum(axis=1) & 1).astype(np.uint8)
    return BitVector.from_dense(parities)


def gf2_matmul(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    """Matrix product over GF(2)."""
    if a.cols != b.rows:
        raise ValueError(f"dimension mismatch: {a.rows}x{a.cols} times {b.rows}x{b.cols}")
    out = np.zeros((a.rows, _words_needed(b.cols)), dtype=np.uint64)
    a_dense = a.to_dense()
    for i in range(a.rows):
        idx = np.flatnonzero(a_dense[i])
        if idx.size:
            out[i] = np.bitwise_xor.reduce(b.words[idx], axis=0)
    return BitMatrix(a.rows, b.cols, out, _trusted=True)


def kronecker_power(base: BitMatrix, exponent: int) -> BitMatrix:
    """exponent-fold Kronecker power of base; exponent 0 gives [[1]]."""
    if exponent < 0:
        raise ValueError("exponent must be nonnegative")
    acc = np.ones((1, 1), dtype=np.uint8)
    dense = base.to_dense()
    for _ in range(exponent):
        acc = np.kron(acc, dense) & 1
    return BitMatrix.from_dense(acc)


def gf2_rref_rows(m: BitMatrix) -> tuple[BitMatrix, list[int]]:
    """Reduced row-echelon form using row operations only (no column swaps).

    Pivot selection is deterministic: for each column left to right, the
    first unprocessed row holding a 1 becomes the pivot row. Returns the
    reduced matrix and the pivot column indices. Row space is preserved.
    """
    words = m.words.copy()
    pivots: list[int] = []
    pivot_row = 0
    for col in range(m.cols):
        if pivot_row >= m.rows:
            break
        w, bit = col // WORD_BITS, np.uint64(1) << np.uint64(col % WORD_BITS)
        hits = np.flatnonzero((words[pivot_row:, w] & bit) != 0)
        if hits.size == 0:
            continue
        r = pivot_row + int(hits[0])
        if r != pivot_row:
            words[[pivot_row, r]] = words[[r, pivot_row]]
        mask = (words[:, w] & bit) != 0
        mask[pivot_row] = False
        if mask.any():
            words[mask] ^= words[pivot_row]
        pivots.append(col)
        pivot_row += 1
    return BitMatrix(m.rows, m.cols, words, _trusted=True), pivots


def gf2_rank(m: BitMatrix) -> int:
    """Rank over GF(2) (number of RREF pivots)."""
    return len(gf2_rref_rows(m)[1])


def gf2_solve(m: BitMatrix, rhs: BitVector) -> BitVector | None:
    """One solution x of m x = rhs, or None if the system is inconsistent."""
    if rhs.length != m.rows:
        raise ValueError("dimension mismatch")
    aug = np.concatenate([m.to_dense(), rhs.to_dense()[:, None]], axis=1)
    reduced, pivots = gf2_rref_rows(BitMatrix.from_dense(aug))
    if m.cols in pivots:
        return None
    dense = reduced.to_dense()
    x = np.zeros(m.cols, dtype=np.uint8)
    for row, col in enumerate(pivots):
        x[col] = dense[row, m.cols]
    return BitVector.from_dense(x)
