"""Full decode pipeline and Monte Carlo BER/FER estimation.

The neural pipeline recovers a noisy message from the hard-decided channel
output, asks the estimator which of its bits were flipped, and XORs the
predicted flips back in. Error rates are counted message-wise against
uniformly random messages; a fixed noise draw therefore produces the same
error pattern regardless of the message, which the tests check exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines import DecodeResult, Decoder, hard_decode_batch
from .channel import SnrPoint, bpsk_map, estimator_input, estimator_inputs_batch, hard_decision
from .codes import LinearCode, encode_batch, pseudo_inverse
from .estimator import EstimatorParams, forward, predict_flips

CSV_HEADER = "ebn0_db,frames,bit_errors,frame_errors,ber,fer,decoder,code,seed"


@dataclass(frozen=True)
class StopRule:
    """Stop once enough frame errors have been seen and enough frames sent.

    Both conditions must hold; the hard cap bounds runtime at low-error
    operating points. Counting happens at batch granularity and always
    includes the whole last batch.
    """

    target_frame_errors: int = 300
    min_frames: int = 10_000
    max_frames: int = 10_000_000
    batch_frames: int = 256

    def __post_init__(self):
        if self.min_frames < 1 or self.max_frames < self.min_frames:
            raise ValueError("need 1 <= min_frames <= max_frames")
        if self.batch_frames < 1:
            raise ValueError("batch_frames must be >= 1")


@dataclass(frozen=True)
class EvalRow:
    """Counters and rates for one decoder at one SNR point."""

    ebn0_db: float
    frames: int
    bit_errors: int
    frame_errors: int
    ber: float
    fer: float
    decoder: str
    code: str
    seed: int

    def csv_line(self) -> str:
        return (
            f"{self.ebn0_db:g},{self.frames},{self.bit_errors},{self.frame_errors},"
            f"{self.ber:.8e},{self.fer:.8e},{self.decoder},{self.code},{self.seed}"
        )


@dataclass
class EvalReport:
    rows: list[EvalRow]

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(CSV_HEADER + "\n")
            for row in self.rows:
                fh.write(row.csv_line() + "\n")


# ---------------------------------------------------------------------------
# neural decode pipeline
# ---------------------------------------------------------------------------

def sbnd_decode(code: LinearCode, params: EstimatorParams, y: np.ndarray) -> DecodeResult:
    """Hard-decide, recover the noisy message, and correct predicted flips."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (code.n,):
        raise ValueError(f"expected length-{code.n} vector, got {y.shape}")
    _check_params_match(code, params)
    noisy = pseudo_inverse(code, hard_decision(y))
    flips = predict_flips(params, estimator_input(y, code.H))
    return DecodeResult(u_hat=noisy ^ flips, metric=0.0)


def sbnd_decode_batch(code: LinearCode, params: EstimatorParams, y: np.ndarray) -> np.ndarray:
    _check_params_match(code, params)
    noisy = hard_decode_batch(code, y)
    inputs = estimator_inputs_batch(y, code.H.to_dense()).astype(params.dtype)
    w_soft, _ = forward(params, inputs)
    flips = (w_soft <= 0).astype(np.uint8)
    return noisy ^ flips


def sbnd_decoder(code: LinearCode, params: EstimatorParams, name: str = "sbnd") -> Decoder:
    _check_params_match(code, params)
    return Decoder(name=name, decode_batch=lambda y, snr: sbnd_decode_batch(code, params, y))


def _check_params_match(code: LinearCode, params: EstimatorParams) -> None:
    if params.input_dim != 2 * code.n - code.k or params.k != code.k:
        raise ValueError(
            f"estimator expects input {params.input_dim} and k={params.k}, "
            f"but the code needs input {2 * code.n - code.k} and k={code.k}"
        )


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

def monte_carlo(
    code: LinearCode,
    decoder: Decoder,
    snr: SnrPoint,
    stop: StopRule,
    rng: np.random.Generator,
    seed: int = 0,
) -> EvalRow:
    """Simulate random messages through AWGN until the stop rule fires."""
    frames = 0
    bit_errors = 0
    frame_errors = 0
    while frames < stop.max_frames:
        size = min(stop.batch_frames, stop.max_frames - frames)
        if frames < stop.min_frames:
            size = min(size, stop.min_frames - frames)
        u = rng.integers(0, 2, size=(size, code.k), dtype=np.uint8)
        x_s = bpsk_map(encode_batch(code, u))
        y = x_s + snr.sigma * rng.standard_normal(x_s.shape)
        u_hat = decoder.decode_batch(y, snr)
        diff = u_hat.astype(np.uint8) ^ u
        bit_errors += int(diff.sum())
        frame_errors += int(diff.any(axis=1).sum())
        frames += size
        if frames >= stop.min_frames and frame_errors >= stop.target_frame_errors:
            break
    return EvalRow(
        ebn0_db=snr.ebn0_db,
        frames=frames,
        bit_errors=bit_errors,
        frame_errors=frame_errors,
        ber=bit_errors / (frames * code.k),
        fer=frame_errors / frames,
        decoder=decoder.name,
        code=code.name,
        seed=seed,
    )


def sweep(
    code: LinearCode,
    decoder: Decoder,
    ebn0_list: list[float],
    stop: StopRule,
    seed: int,
) -> EvalReport:
    """One Monte Carlo row per SNR point, each from its own (seed, index) stream."""
    if not ebn0_list:
        raise ValueError("ebn0_list must not be empty")
    rows = []
    for idx, ebn0_db in enumerate(ebn0_list):
        rng = np.random.default_rng((seed, idx))
        snr = SnrPoint(ebn0_db=ebn0_db, rate=code.k / code.n)
        rows.append(monte_carlo(code, decoder, snr, stop, rng, seed=seed))
    return EvalReport(rows=rows)


def compare_on_shared_stream(
    code: LinearCode,
    decoders: list[Decoder],
    snr: SnrPoint,
    frames: int,
    rng: np.random.Generator,
    batch_frames: int = 256,
) -> dict[str, EvalRow]:
    """Run several decoders over the identical (message, noise) stream."""
    counts = {d.name: [0, 0] for d in decoders}  # bit errors, frame errors
    done = 0
    while done < frames:
        size = min(batch_frames, frames - done)
        u = rng.integers(0, 2, size=(size, code.k), dtype=np.uint8)
        x_s = bpsk_map(encode_batch(code, u))
        y = x_s + snr.sigma * rng.standard_normal(x_s.shape)
        for dec in decoders:
            diff = dec.decode_batch(y, snr).astype(np.uint8) ^ u
            counts[dec.name][0] += int(diff.sum())
            counts[dec.name][1] += int(diff.any(axis=1).sum())
        done += size
    return {
        name: EvalRow(
            ebn0_db=snr.ebn0_db,
            frames=frames,
            bit_errors=bits,
            frame_errors=frame,
            ber=bits / (frames * code.k),
            fer=frame / frames,
            decoder=name,
            code=code.name,
            seed=0,
        )
        for name, (bits, frame) in counts.items()
    }
