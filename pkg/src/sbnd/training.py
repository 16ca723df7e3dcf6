"""Single-message on-the-fly training of the bit-flip estimator.

Every batch encodes one fixed message (all ones by default), pushes it
through the AWGN channel at the training SNR, and asks the network to
predict which message bits the hard-decision + pseudo-inverse front end got
wrong. The input/target joint distribution is invariant to the chosen
message, so one message suffices as long as the noise stays random.

The loss is a binary cross-entropy rescaled to sign-domain targets and
outputs: both are mapped through (1 - w) / 2 into [0, 1] first. Per-sample
coordinate losses are summed; the batch loss is their mean.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .channel import SnrPoint, bpsk_map, estimator_inputs_batch, hard_decision_bits
from .codes import LinearCode, encode_batch
from .estimator import (
    EstimatorConfig,
    EstimatorParams,
    GruCellParams,
    backward,
    forward,
    init_params,
    param_arrays,
    params_from_arrays,
)

CHECKPOINT_MAGIC = b"SBND"
CHECKPOINT_VERSION = 1


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss stops being finite."""


class CheckpointError(ValueError):
    """Raised on malformed or mismatched checkpoint files."""


@dataclass(frozen=True)
class TrainConfig:
    """Estimator and optimization hyperparameters."""

    batch_size: int = 4096
    train_ebn0_db: float = 3.0
    learning_rate: float = 1e-3
    steps: int = 20_000
    seed: int = 0
    scale: int = 6
    time_steps: int = 5
    depth: int = 5
    loss_epsilon: float = 1e-7
    log_every: int = 100

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 < self.loss_epsilon < 0.5:
            raise ValueError("loss_epsilon must lie in (0, 0.5)")
        if self.steps < 0:
            raise ValueError("steps must be nonnegative")

    def estimator_config(self, code: LinearCode) -> EstimatorConfig:
        return EstimatorConfig(
            n=code.n, k=code.k, scale=self.scale, time_steps=self.time_steps, depth=self.depth
        )


@dataclass
class Batch:
    """Training samples: estimator inputs and sign-domain flip targets."""

    inputs: np.ndarray  # (batch, 2n-k) float32
    targets: np.ndarray  # (batch, k) float32, entries in {-1, +1}


def assemble_batch(code: LinearCode, y: np.ndarray, messages: np.ndarray) -> Batch:
    """Build inputs and targets from channel outputs and the sent messages."""
    h_dense = code.H.to_dense()
    a_dense = code.A.to_dense()
    inputs = estimator_inputs_batch(y, h_dense).astype(np.float32)
    noisy = (hard_decision_bits(y) @ a_dense.T) & 1
    flips = noisy ^ messages.astype(np.uint8)
    targets = (1.0 - 2.0 * flips).astype(np.float32)
    return Batch(inputs=inputs, targets=targets)


def make_batch(
    code: LinearCode,
    snr: SnrPoint,
    size: int,
    rng: np.random.Generator,
    messages: np.ndarray | None = None,
) -> Batch:
    """Synthesize one training batch at the given SNR.

    By default every sample carries the all-ones message; an explicit
    (size, k) message array is accepted for validation runs.
    """
    if messages is None:
        messages = np.ones((size, code.k), dtype=np.uint8)
    x_s = bpsk_map(encode_batch(code, messages))
    y = x_s + snr.sigma * rng.standard_normal((size, code.n))
    return assemble_batch(code, y, messages)


# ---------------------------------------------------------------------------
# loss
# ---------------------------------------------------------------------------

def _to_unit(w: np.ndarray) -> np.ndarray:
    return (1.0 - w) / 2.0


def loss(w_target: np.ndarray, w_soft: np.ndarray, eps: float = 1e-7) -> float:
    """Scaled binary cross-entropy between sign-domain targets and outputs.

    Coordinates are summed per sample; 2-D inputs are averaged over the
    leading (batch) axis. The predicted probabilities are clamped to
    [eps, 1 - eps] before the logs.
    """
    w_target = np.asarray(w_target, dtype=np.float64)
    w_soft = np.asarray(w_soft, dtype=np.float64)
    if w_target.shape != w_soft.shape:
        raise ValueError(f"shape mismatch: {w_target.shape} vs {w_soft.shape}")
    a = _to_unit(w_target)
    a_hat = np.clip(_to_unit(w_soft), eps, 1.0 - eps)
    per_coord = -(a * np.log(a_hat) + (1.0 - a) * np.log(1.0 - a_hat))
    total = per_coord.sum(axis=-1)
    return float(total.mean()) if total.ndim else float(total)


def loss_grad(w_target: np.ndarray, w_soft: np.ndarray, eps: float = 1e-7) -> np.ndarray:
    """d(loss)/d(w_soft), zero where the clamp is active."""
    w_target = np.asarray(w_target, dtype=np.float64)
    w_soft = np.asarray(w_soft, dtype=np.float64)
    a = _to_unit(w_target)
    a_hat_raw = _to_unit(w_soft)
    a_hat = np.clip(a_hat_raw, eps, 1.0 - eps)
    grad = (a / a_hat - (1.0 - a) / (1.0 - a_hat)) / 2.0
    grad = np.where((a_hat_raw > eps) & (a_hat_raw < 1.0 - eps), grad, 0.0)
    if w_soft.ndim == 2:
        grad = grad / w_soft.shape[0]
    return grad


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    """First/second moment accumulators, one per parameter array."""

    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def adam_init(params: EstimatorParams, beta1=0.9, beta2=0.999, epsilon=1e-8) -> AdamState:
    arrays = param_arrays(params)
    return AdamState(
        first_moment=[np.zeros_like(a) for a in arrays],
        second_moment=[np.zeros_like(a) for a in arrays],
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
    )


def adam_step(
    params: EstimatorParams,
    grads: EstimatorParams,
    state: AdamState,
    lr: float,
) -> tuple[EstimatorParams, AdamState]:
    """One bias-corrected Adam update; returns fresh params and state."""
    p_arrays = param_arrays(params)
    g_arrays = param_arrays(grads)
    if len(p_arrays) != len(state.first_moment):
        raise ValueError("optimizer state does not match the parameter layout")
    t = state.step_count + 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    new_m, new_v, new_p = [], [], []
    for p, g, m, v in zip(p_arrays, g_arrays, state.first_moment, state.second_moment):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        step = lr * (m / c1) / (np.sqrt(v / c2) + state.epsilon)
        new_m.append(m)
        new_v.append(v)
        new_p.append(p - step)
    next_state = AdamState(
        first_moment=new_m,
        second_moment=new_v,
        step_count=t,
        beta1=b1,
        beta2=b2,
        epsilon=state.epsilon,
    )
    return params_from_arrays(params, new_p), next_state


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------

def train(
    code: LinearCode,
    cfg: TrainConfig,
    initial_params: EstimatorParams | None = None,
    progress: Callable[[int, float], None] | None = None,
) -> tuple[EstimatorParams, list[tuple[int, float]]]:
    """Run the on-the-fly training loop; returns final params and loss history.

    History holds one (step, loss) pair per step. The progress callback, if
    given, fires every log_every steps and on the final step.
    """
    snr = SnrPoint(ebn0_db=cfg.train_ebn0_db, rate=code.k / code.n)
    if initial_params is None:
        params = init_params(cfg.estimator_config(code), np.random.default_rng((cfg.seed, 0)))
    else:
        params = initial_params
    data_rng = np.random.default_rng((cfg.seed, 1))
    state = adam_init(params)
    history: list[tuple[int, float]] = []
    for step in range(1, cfg.steps + 1):
        batch = make_batch(code, snr, cfg.batch_size, data_rng)
        w_soft, tape = forward(params, batch.inputs)
        value = loss(batch.targets, w_soft, cfg.loss_epsilon)
        if not np.isfinite(value):
            raise TrainingDivergedError(f"non-finite loss {value} at step {step}")
        grad_out = loss_grad(batch.targets, w_soft, cfg.loss_epsilon)
        grads = backward(params, tape, grad_out)
        params, state = adam_step(params, grads, state, cfg.learning_rate)
        history.append((step, value))
        if progress is not None and (step % cfg.log_every == 0 or step == cfg.steps):
            progress(step, value)
    return params, history


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def save_checkpoint(params: EstimatorParams, cfg: EstimatorConfig, path) -> None:
    """Write magic, version, (n, k, M, T, D) and float32 LE parameter blocks."""
    if params.input_dim != cfg.input_dim or params.k != cfg.k:
        raise CheckpointError("parameters do not match the given configuration")
    if len(params.cells) != cfg.depth or params.hidden != cfg.hidden:
        raise CheckpointError("parameters do not match the given configuration")
    header = CHECKPOINT_MAGIC + struct.pack(
        "<6i", CHECKPOINT_VERSION, cfg.n, cfg.k, cfg.scale, cfg.time_steps, cfg.depth
    )
    with open(path, "wb") as fh:
        fh.write(header)
        for arr in param_arrays(params):
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_checkpoint(path) -> tuple[EstimatorParams, EstimatorConfig]:
    """Read a checkpoint back; fails loudly on truncation or bad headers."""
    with open(path, "rb") as fh:
        blob = fh.read()
    head = len(CHECKPOINT_MAGIC) + struct.calcsize("<6i")
    if len(blob) < head or blob[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    version, n, k, scale, time_steps, depth = struct.unpack(
        "<6i", blob[len(CHECKPOINT_MAGIC) : head]
    )
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    try:
        cfg = EstimatorConfig(n=n, k=k, scale=scale, time_steps=time_steps, depth=depth)
    except ValueError as exc:
        raise CheckpointError(f"{path}: bad dimensions in header") from exc
    shapes: list[tuple[int, ...]] = []
    h = cfg.hidden
    for i in range(depth):
        in_dim = cfg.input_dim if i == 0 else h
        shapes.extend([(3 * h, in_dim), (3 * h, h), (3 * h,)])
    shapes.extend([(k, h), (k,)])
    arrays = []
    offset = head
    for shape in shapes:
        count = int(np.prod(shape))
        nbytes = 4 * count
        if offset + nbytes > len(blob):
            raise CheckpointError(f"{path}: truncated parameter data")
        arrays.append(
            np.frombuffer(blob, dtype="<f4", count=count, offset=offset).reshape(shape).copy()
        )
        offset += nbytes
    if offset != len(blob):
        raise CheckpointError(f"{path}: trailing data after parameters")
    cells = [
        GruCellParams(w_in=arrays[3 * i], w_rec=arrays[3 * i + 1], bias=arrays[3 * i + 2])
        for i in range(depth)
    ]
    params = EstimatorParams(
        cells=cells, out_w=arrays[-2], out_b=arrays[-1], time_steps=cfg.time_steps
    )
    return params, cfg


def write_loss_csv(history: list[tuple[int, float]], path) -> None:
    with open(path, "w") as fh:
        fh.write("step,loss\n")
        for step, value in history:
            fh.write(f"{step},{value:.8f}\n")
