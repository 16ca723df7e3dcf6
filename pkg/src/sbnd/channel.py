"""BPSK mapping, AWGN in additive and multiplicative form, estimator inputs.

The multiplicative form y = x * z with z ~ N(1, sigma^2) is statistically
equivalent to y = x + n with n ~ N(0, sigma^2) for unit-energy BPSK, and
makes the decoder input (|y|, syndrome) independent of the transmitted
codeword for a fixed noise draw.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codes import LinearCode, encode
from .gf2 import BitMatrix, BitVector, gf2_matvec


def sigma_from_ebn0(ebn0_db: float, rate: float) -> float:
    """Noise standard deviation for a normalized SNR, unit-energy BPSK.

    sigma = 1 / sqrt(2 * rate * 10^(ebn0_db / 10)).
    """
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"rate must be in (0, 1], got {rate}")
    return float(1.0 / np.sqrt(2.0 * rate * 10.0 ** (ebn0_db / 10.0)))


@dataclass(frozen=True)
class SnrPoint:
    """A normalized SNR operating point with its derived noise deviation."""

    ebn0_db: float
    rate: float
    sigma: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "sigma", sigma_from_ebn0(self.ebn0_db, self.rate))


def bpsk_map(v) -> np.ndarray:
    """Sign mapping 0 -> +1, 1 -> -1 for a bit vector or bit array."""
    bits = v.to_dense() if isinstance(v, BitVector) else np.asarray(v)
    return 1.0 - 2.0 * bits.astype(np.float64)


def hard_decision_bits(v: np.ndarray) -> np.ndarray:
    """Elementwise threshold as a uint8 array: 0 if x > 0, 1 otherwise."""
    return (np.asarray(v) <= 0).astype(np.uint8)


def hard_decision(v: np.ndarray) -> BitVector:
    """Elementwise threshold: bit is 0 if x > 0 and 1 otherwise."""
    return BitVector.from_dense(hard_decision_bits(v))


def transmit_additive(x_s: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """y = x + n with iid n ~ N(0, sigma^2)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    x_s = np.asarray(x_s, dtype=np.float64)
    return x_s + sigma * rng.standard_normal(x_s.shape)


def transmit_multiplicative(
    x_s: np.ndarray, sigma: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """y = x * z with iid z ~ N(1, sigma^2); returns (y, z)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    x_s = np.asarray(x_s, dtype=np.float64)
    z = 1.0 + sigma * rng.standard_normal(x_s.shape)
    return x_s * z, z


@dataclass(frozen=True)
class ChannelSample:
    """One transmitted frame: message, codeword, signals, optional noise."""

    u: BitVector
    x_b: BitVector
    x_s: np.ndarray
    y: np.ndarray
    z: np.ndarray | None = None


def transmit_frame(
    code: LinearCode,
    u: BitVector,
    snr: SnrPoint,
    rng: np.random.Generator,
    multiplicative: bool = False,
) -> ChannelSample:
    """Encode, modulate and push one message through the channel."""
    x_b = encode(code, u)
    x_s = bpsk_map(x_b)
    if multiplicative:
        y, z = transmit_multiplicative(x_s, snr.sigma, rng)
        return ChannelSample(u=u, x_b=x_b, x_s=x_s, y=y, z=z)
    return ChannelSample(u=u, x_b=x_b, x_s=x_s, y=transmit_additive(x_s, snr.sigma, rng))


def estimator_input(y: np.ndarray, H: BitMatrix) -> np.ndarray:
    """Decoder input (|y|, sign-mapped syndrome of the hard decision).

    The result has length 2n - k: n magnitudes followed by n - k syndrome
    entries mapped through 0 -> +1, 1 -> -1. It is invariant to which
    codeword was sent, for a fixed multiplicative noise draw.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] != H.cols:
        raise ValueError(f"received vector length {y.shape} does not match n={H.cols}")
    syndrome = gf2_matvec(H, hard_decision(y))
    return np.concatenate([np.abs(y), 1.0 - 2.0 * syndrome.to_dense().astype(np.float64)])


def estimator_inputs_batch(y: np.ndarray, h_dense: np.ndarray) -> np.ndarray:
    """Batch form of estimator_input for a (frames, n) array of channel outputs."""
    y = np.asarray(y, dtype=np.float64)
    y_b = hard_decision_bits(y)
    syndromes = (y_b @ h_dense.T) & 1
    return np.concatenate([np.abs(y), 1.0 - 2.0 * syndromes.astype(np.float64)], axis=1)
