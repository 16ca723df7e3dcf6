"""Linear block code construction and validation.

Polar codes are built from the Kronecker powers of the [[1,0],[1,1]] kernel:
the generator takes the rows of P_n selected by the information set, the
parity-check matrix takes the complementary columns of P_n, and the message
recovery matrix takes the selected columns. Codes defined only by a
parity-check matrix (e.g. loaded from a file) get a systematic generator
built on the non-pivot positions of the reduced H.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .gf2 import (
    BitMatrix,
    BitVector,
    gf2_matmul,
    gf2_matvec,
    gf2_rank,
    gf2_rref_rows,
    kronecker_power,
)

ARIKAN_KERNEL = BitMatrix.from_rows([[1, 0], [1, 1]])


class PcFileError(ValueError):
    """Raised when a parity-check matrix file cannot be parsed or is invalid."""


@dataclass(frozen=True)
class LinearCode:
    """An (n, k) binary linear code bundle.

    G is k x n, H is (n-k) x n, and A is the k x n message recovery matrix
    satisfying A G^T = I_k, so A maps any valid codeword back to its message
    (its output on invalid words carries no guarantee). info_set lists the
    k systematic coordinate positions when the construction provides them.
    """

    n: int
    k: int
    G: BitMatrix
    H: BitMatrix
    A: BitMatrix
    info_set: tuple[int, ...] | None = None
    name: str = field(default="code", compare=False)

    def __post_init__(self):
        n, k = self.n, self.k
        if self.G.shape != (k, n):
            raise ValueError(f"G must be {k}x{n}, got {self.G.shape}")
        if self.H.shape != (n - k, n):
            raise ValueError(f"H must be {n - k}x{n}, got {self.H.shape}")
        if self.A.shape != (k, n):
            raise ValueError(f"A must be {k}x{n}, got {self.A.shape}")
        if gf2_matmul(self.G, self.H.T) != BitMatrix.zeros(k, n - k):
            raise ValueError("G H^T != 0: H is not a parity-check matrix for G")
        if gf2_rank(self.H) != n - k:
            raise ValueError("H is rank deficient")
        if gf2_rank(self.G) != k:
            raise ValueError("G is rank deficient")
        if gf2_matmul(self.A, self.G.T) != BitMatrix.identity(k):
            raise ValueError("A G^T != I: A does not invert the encoder")

    @property
    def rate(self) -> float:
        return self.k / self.n


@dataclass(frozen=True)
class PolarSpec:
    """Polar code parameters: block length, message length, row selection.

    The information set may be given explicitly as 1-based row indices of
    P_n, or left to the erasure-channel reliability recursion with design
    parameter ``design_erasure``.
    """

    n: int
    k: int
    info_rows: tuple[int, ...] | None = None
    design_erasure: float = 0.5

    def __post_init__(self):
        if self.n < 2 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 2, got {self.n}")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"k must be in 1..{self.n}, got {self.k}")
        if self.info_rows is not None:
            rows = tuple(sorted(self.info_rows))
            if len(rows) != self.k:
                raise ValueError(f"explicit info set has {len(rows)} indices, expected k={self.k}")
            if len(set(rows)) != len(rows) or rows[0] < 1 or rows[-1] > self.n:
                raise ValueError("info set indices must be distinct and within 1..n")
            object.__setattr__(self, "info_rows", rows)
        if not 0.0 < self.design_erasure < 1.0:
            raise ValueError("design erasure parameter must be in (0, 1)")


def bhattacharyya_parameters(n: int, erasure: float) -> np.ndarray:
    """Leaf reliability parameters of the erasure recursion z -> (2z - z^2, z^2)."""
    z = np.array([erasure], dtype=np.float64)
    while z.size < n:
        nxt = np.empty(2 * z.size, dtype=np.float64)
        nxt[0::2] = 2.0 * z - z * z
        nxt[1::2] = z * z
        z = nxt
    return z


def polar_select_rows(spec: PolarSpec) -> tuple[int, ...]:
    """Information-row indices (1-based) of P_n for the given spec.

    Explicit sets pass through verbatim; otherwise the k most reliable leaves
    of the erasure recursion are kept, ties resolved toward the larger index.
    """
    if spec.info_rows is not None:
        return spec.info_rows
    z = bhattacharyya_parameters(spec.n, spec.design_erasure)
    order = sorted(range(spec.n), key=lambda i: (z[i], -i))
    chosen = sorted(order[: spec.k])
    return tuple(i + 1 for i in chosen)


def polar_build(spec: PolarSpec) -> LinearCode:
    """Construct the (n, k) polar code for the given row selection.

    G stacks the selected rows of P_n; H stacks (transposed) the columns of
    P_n with complementary indices; A stacks the selected columns, which
    inverts the encoder because P_n is involutory.
    """
    n, k = spec.n, spec.k
    rows_1based = polar_select_rows(spec)
    idx = [r - 1 for r in rows_1based]
    comp = sorted(set(range(n)) - set(idx))
    p = kronecker_power(ARIKAN_KERNEL, n.bit_length() - 1)
    pt = p.T
    return LinearCode(
        n=n,
        k=k,
        G=p.select_rows(idx),
        H=pt.select_rows(comp),
        A=pt.select_rows(idx),
        info_set=None,
        name=f"polar_{n}_{k}",
    )


# ---------------------------------------------------------------------------
# parity-check matrix ingestion
# ---------------------------------------------------------------------------

def parse_pc_text(text: str) -> BitMatrix:
    """Dense text format: first line "rows cols", then rows of 0/1 tokens."""
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines or len(lines[0]) != 2:
        raise PcFileError("expected header line 'rows cols'")
    try:
        rows, cols = (int(t) for t in lines[0])
    except ValueError as exc:
        raise PcFileError(f"bad header: {lines[0]}") from exc
    if rows < 1 or cols < 1:
        raise PcFileError("matrix dimensions must be positive")
    if len(lines) - 1 != rows:
        raise PcFileError(f"expected {rows} matrix rows, found {len(lines) - 1}")
    dense = np.zeros((rows, cols), dtype=np.uint8)
    for i, tokens in enumerate(lines[1:]):
        if len(tokens) != cols:
            raise PcFileError(f"row {i}: expected {cols} entries, found {len(tokens)}")
        for j, tok in enumerate(tokens):
            if tok not in ("0", "1"):
                raise PcFileError(f"row {i}: non-binary token {tok!r}")
            dense[i, j] = tok == "1"
    return BitMatrix.from_dense(dense)


def parse_alist(text: str) -> BitMatrix:
    """Sparse alist format (header "cols rows", per-column 1-based row lists)."""
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    try:
        data = [[int(t) for t in ln] for ln in lines]
    except ValueError as exc:
        raise PcFileError("alist file contains a non-integer token") from exc
    if len(data) < 4 or len(data[0]) != 2:
        raise PcFileError("truncated alist file")
    cols, rows = data[0]
    if cols < 1 or rows < 1:
        raise PcFileError("matrix dimensions must be positive")
    if len(data) < 4 + cols:
        raise PcFileError("alist file is missing per-column index lists")
    col_degrees = data[2]
    if len(col_degrees) != cols:
        raise PcFileError(f"expected {cols} column degrees, found {len(col_degrees)}")
    dense = np.zeros((rows, cols), dtype=np.uint8)
    for j in range(cols):
        entries = [e for e in data[4 + j] if e != 0]
        if len(entries) != col_degrees[j]:
            raise PcFileError(f"column {j}: degree {col_degrees[j]} declared, {len(entries)} entries")
        for r in entries:
            if not 1 <= r <= rows:
                raise PcFileError(f"column {j}: row index {r} out of range")
            dense[r - 1, j] = 1
    return BitMatrix.from_dense(dense)


def load_pc_matrix(path: str | os.PathLike) -> BitMatrix:
    """Load a parity-check matrix from a dense-text or .alist file.

    The matrix must have full row rank; n and k follow as n = cols and
    k = cols - rows.
    """
    with open(path) as fh:
        text = fh.read()
    if str(path).endswith(".alist"):
        h = parse_alist(text)
    else:
        h = parse_pc_text(text)
    if gf2_rank(h) != h.rows:
        raise PcFileError(f"parity-check matrix in {path} is rank deficient")
    return h


def code_from_pc(H: BitMatrix, name: str | None = None) -> LinearCode:
    """Build a code from a full-row-rank parity-check matrix.

    The k positions outside the pivot columns of the reduced H become the
    systematic information set; G places the identity there, and A simply
    extracts those coordinates.
    """
    reduced, pivots = gf2_rref_rows(H)
    if len(pivots) != H.rows:
        raise ValueError("parity-check matrix is rank deficient")
    n = H.cols
    k = n - H.rows
    hr = reduced.to_dense()
    info = [c for c in range(n) if c not in set(pivots)]
    g = np.zeros((k, n), dtype=np.uint8)
    a = np.zeros((k, n), dtype=np.uint8)
    for i, f in enumerate(info):
        g[i, f] = 1
        for row, p in enumerate(pivots):
            g[i, p] = hr[row, f]
        a[i, f] = 1
    return LinearCode(
        n=n,
        k=k,
        G=BitMatrix.from_dense(g),
        H=H,
        A=BitMatrix.from_dense(a),
        info_set=tuple(info),
        name=name or f"pc_{n}_{k}",
    )


def standardize_pc(H: BitMatrix) -> BitMatrix:
    """Row-reduce H so an identity submatrix appears, without column swaps.

    The row space (hence the code) is unchanged; only the syndrome map is.
    The identity columns may be scattered since columns never move.
    """
    reduced, pivots = gf2_rref_rows(H)
    if len(pivots) != H.rows:
        raise ValueError("parity-check matrix is rank deficient")
    return reduced


# ---------------------------------------------------------------------------
# encoding and message recovery
# ---------------------------------------------------------------------------

def encode(code: LinearCode, u: BitVector) -> BitVector:
    """Codeword x = G^T u for a k-bit message."""
    if len(u) != code.k:
        raise ValueError(f"message length {len(u)} != k={code.k}")
    return gf2_matvec(code.G.T, u)


def pseudo_inverse(code: LinearCode, v: BitVector) -> BitVector:
    """A v: recovers the message of a valid codeword; unconstrained otherwise."""
    if len(v) != code.n:
        raise ValueError(f"vector length {len(v)} != n={code.n}")
    return gf2_matvec(code.A, v)


def encode_batch(code: LinearCode, u: np.ndarray) -> np.ndarray:
    """Vectorized encoder for a (batch, k) bit array; returns (batch, n)."""
    g = code.G.to_dense()
    return (u.astype(np.uint8) @ g) & 1


def pseudo_inverse_batch(code: LinearCode, v: np.ndarray) -> np.ndarray:
    """Vectorized A v for a (batch, n) bit array; returns (batch, k)."""
    a = code.A.to_dense()
    return (v.astype(np.uint8) @ a.T) & 1


def all_messages(k: int) -> np.ndarray:
    """All 2^k messages as a (2^k, k) bit array, row index = message integer.

    The first message bit is the most significant, so row m spells m in
    binary; ties broken by message integer elsewhere rely on this layout.
    """
    if k > 24:
        raise ValueError("refusing to enumerate more than 2^24 messages")
    ints = np.arange(2**k, dtype=np.uint32)
    shifts = np.arange(k - 1, -1, -1, dtype=np.uint32)
    return ((ints[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
