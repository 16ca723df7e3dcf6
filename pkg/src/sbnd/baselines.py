"""Classical reference decoders: hard-decision, exhaustive MAP, ordered statistics.

The MAP decoder enumerates the whole codebook and is guarded to small k;
it serves as the optimality floor in comparisons. The OSD re-encodes hard
decisions taken on the most reliable independent positions and reprocesses
them with all error patterns up to the requested order.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb
from typing import Callable

import numpy as np

from .channel import SnrPoint, bpsk_map, hard_decision, hard_decision_bits
from .codes import LinearCode, all_messages, encode_batch, pseudo_inverse
from .gf2 import BitMatrix, BitVector, gf2_rref_rows

MAP_MAX_K = 20


@dataclass(frozen=True)
class DecodeResult:
    """Estimated message plus a decoder-specific score."""

    u_hat: BitVector
    metric: float = 0.0


@dataclass(frozen=True)
class Decoder:
    """A named batch decoder: maps (frames, n) channel outputs to (frames, k) bits."""

    name: str
    decode_batch: Callable[[np.ndarray, SnrPoint], np.ndarray]


# ---------------------------------------------------------------------------
# hard decision + message recovery
# ---------------------------------------------------------------------------

def hard_decode(code: LinearCode, y: np.ndarray) -> DecodeResult:
    """Threshold the channel output and map it back through A."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (code.n,):
        raise ValueError(f"expected length-{code.n} vector, got {y.shape}")
    return DecodeResult(u_hat=pseudo_inverse(code, hard_decision(y)), metric=0.0)


def hard_decode_batch(code: LinearCode, y: np.ndarray) -> np.ndarray:
    a_dense = code.A.to_dense()
    return (hard_decision_bits(y) @ a_dense.T) & 1


def hard_decoder(code: LinearCode) -> Decoder:
    return Decoder(name="hard", decode_batch=lambda y, snr: hard_decode_batch(code, y))


# ---------------------------------------------------------------------------
# exhaustive MAP oracle
# ---------------------------------------------------------------------------

@lru_cache(maxsize=8)
def _codebook(code: LinearCode) -> tuple[np.ndarray, np.ndarray]:
    """All messages (row index = message integer) and their BPSK codewords."""
    messages = all_messages(code.k)
    signs = bpsk_map(encode_batch(code, messages))
    return messages, signs


def _map_batch(code: LinearCode, y: np.ndarray, sigma: float, mode: str) -> np.ndarray:
    if code.k > MAP_MAX_K:
        raise ValueError(f"MAP enumeration requires k <= {MAP_MAX_K}, got k={code.k}")
    if mode not in ("block", "bitwise"):
        raise ValueError(f"unknown MAP mode {mode!r}")
    messages, signs = _codebook(code)
    y = np.asarray(y, dtype=np.float64)
    # squared distances to every codeword, one row per frame
    d2 = (y**2).sum(axis=1)[:, None] - 2.0 * (y @ signs.T) + float(code.n)
    if mode == "block":
        best = np.argmin(d2, axis=1)  # ties: lowest message integer
        return messages[best]
    logw = -d2 / (2.0 * sigma**2)
    logw -= logw.max(axis=1, keepdims=True)
    w = np.exp(logw)
    p1 = w @ messages.astype(np.float64)
    p0 = w.sum(axis=1)[:, None] - p1
    return (p1 > p0).astype(np.uint8)  # ties resolve to bit 0


def map_decode(
    code: LinearCode, y: np.ndarray, sigma: float, mode: str = "block"
) -> DecodeResult:
    """Exhaustive MAP estimate; block picks the most likely message,
    bitwise maximizes each bit's marginal posterior."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (code.n,):
        raise ValueError(f"expected length-{code.n} vector, got {y.shape}")
    u_hat = _map_batch(code, y[None, :], sigma, mode)[0]
    metric = 0.0
    if mode == "block":
        x_hat = (u_hat @ code.G.to_dense()) & 1
        metric = float(((y - bpsk_map(x_hat)) ** 2).sum())
    return DecodeResult(u_hat=BitVector.from_dense(u_hat), metric=metric)


def map_decoder(code: LinearCode, mode: str = "block") -> Decoder:
    name = "map" if mode == "block" else "map-bitwise"
    return Decoder(
        name=name, decode_batch=lambda y, snr: _map_batch(code, y, snr.sigma, mode)
    )


# ---------------------------------------------------------------------------
# ordered statistics decoding
# ---------------------------------------------------------------------------

def osd_candidate_count(k: int, order: int) -> int:
    """Number of reprocessed patterns: sum of C(k, i) for i = 0..order."""
    return sum(comb(k, i) for i in range(order + 1))


@lru_cache(maxsize=32)
def _error_patterns(k: int, order: int) -> np.ndarray:
    """All weight <= order patterns over k bits, weight-then-lexicographic order."""
    rows = [np.zeros(k, dtype=np.uint8)]
    for wt in range(1, order + 1):
        for pos in combinations(range(k), wt):
            p = np.zeros(k, dtype=np.uint8)
            p[list(pos)] = 1
            rows.append(p)
    return np.stack(rows)


def _most_reliable_basis(g_dense: np.ndarray, reliability_order: np.ndarray) -> list[int]:
    """Greedy scan for k independent generator columns in reliability order."""
    k = g_dense.shape[0]
    basis: list[tuple[int, np.ndarray]] = []  # (pivot row, reduced column)
    mrb: list[int] = []
    for pos in reliability_order:
        col = g_dense[:, pos].copy()
        for piv, vec in basis:
            if col[piv]:
                col ^= vec
        nz = np.flatnonzero(col)
        if nz.size:
            basis.append((int(nz[0]), col))
            mrb.append(int(pos))
            if len(mrb) == k:
                break
    return mrb


def _systematic_on(g_dense: np.ndarray, positions: list[int]) -> np.ndarray:
    """Row-reduce G so the submatrix on the given positions is the identity."""
    k, n = g_dense.shape
    aug = np.concatenate([g_dense[:, positions], g_dense], axis=1)
    reduced, pivots = gf2_rref_rows(BitMatrix.from_dense(aug))
    if pivots[:k] != list(range(k)):
        raise ValueError("positions do not index an invertible generator submatrix")
    return reduced.to_dense()[:, k:]


def osd_decode(code: LinearCode, y: np.ndarray, order: int) -> DecodeResult:
    """Order-`order` OSD: hard decisions on the most reliable basis, then
    exhaustive low-weight reprocessing scored by Euclidean distance."""
    if order < 0:
        raise ValueError("order must be nonnegative")
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (code.n,):
        raise ValueError(f"expected length-{code.n} vector, got {y.shape}")
    g_dense = code.G.to_dense()
    reliability_order = np.argsort(-np.abs(y), kind="stable")
    mrb = _most_reliable_basis(g_dense, reliability_order)
    g_sys = _systematic_on(g_dense, mrb)
    base = hard_decision_bits(y[mrb])
    patterns = _error_patterns(code.k, order)
    candidates = ((base[None, :] ^ patterns) @ g_sys) & 1
    dists = ((y[None, :] - (1.0 - 2.0 * candidates)) ** 2).sum(axis=1)
    best = int(np.argmin(dists))  # ties: earliest pattern in enumeration order
    best_cw = BitVector.from_dense(candidates[best])
    return DecodeResult(u_hat=pseudo_inverse(code, best_cw), metric=float(dists[best]))


def osd_decode_batch(code: LinearCode, y: np.ndarray, order: int) -> np.ndarray:
    out = np.empty((y.shape[0], code.k), dtype=np.uint8)
    for i in range(y.shape[0]):
        out[i] = osd_decode(code, y[i], order).u_hat.to_dense()
    return out


def osd_decoder(code: LinearCode, order: int) -> Decoder:
    return Decoder(
        name=f"osd{order}", decode_batch=lambda y, snr: osd_decode_batch(code, y, order)
    )
