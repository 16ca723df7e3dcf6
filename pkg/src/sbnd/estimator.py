"""Message bit-flip estimator: stacked GRU cells plus a tanh output layer.

The network reads the concatenated (|y|, sign-mapped syndrome) vector of
length 2n-k, repeats it for a fixed number of time steps through a stack of
GRU cells of M*(2n-k) units each, and maps the final top state through a
dense tanh layer onto k soft flip indicators in (-1, 1). Forward and
backward passes are implemented directly on numpy arrays; no autograd.

Gate blocks are ordered update / reset / candidate throughout, matching the
checkpoint layout. The cell follows the convention
    z = sigmoid(W_z x + U_z h + b_z)
    r = sigmoid(W_r x + U_r h + b_r)
    c = tanh(W_c x + U_c (r * h) + b_c)
    h' = (1 - z) * h + z * c
with all hidden states starting at zero.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import hard_decision
from .gf2 import BitVector


@dataclass(frozen=True)
class EstimatorConfig:
    """Architecture hyperparameters tied to an (n, k) code."""

    n: int
    k: int
    scale: int = 6  # M: hidden units per input element
    time_steps: int = 5  # T
    depth: int = 5  # D

    def __post_init__(self):
        if self.n < 1 or not 1 <= self.k <= self.n:
            raise ValueError(f"bad code dimensions ({self.n}, {self.k})")
        if min(self.scale, self.time_steps, self.depth) < 1:
            raise ValueError("scale, time_steps and depth must all be >= 1")

    @property
    def input_dim(self) -> int:
        return 2 * self.n - self.k

    @property
    def hidden(self) -> int:
        return self.scale * self.input_dim


@dataclass
class GruCellParams:
    """One GRU cell: stacked gate weights (update, reset, candidate)."""

    w_in: np.ndarray  # (3*hidden, in_dim)
    w_rec: np.ndarray  # (3*hidden, hidden)
    bias: np.ndarray  # (3*hidden,)

    @property
    def hidden(self) -> int:
        return self.w_rec.shape[1]

    @property
    def in_dim(self) -> int:
        return self.w_in.shape[1]


@dataclass
class EstimatorParams:
    """Full parameter set: D GRU cells and the dense output layer.

    time_steps rides along because it fixes how the cells are unrolled
    without affecting any array shape.
    """

    cells: list[GruCellParams]
    out_w: np.ndarray  # (k, hidden)
    out_b: np.ndarray  # (k,)
    time_steps: int = 5

    @property
    def hidden(self) -> int:
        return self.cells[0].hidden

    @property
    def input_dim(self) -> int:
        return self.cells[0].in_dim

    @property
    def k(self) -> int:
        return self.out_w.shape[0]

    @property
    def dtype(self) -> np.dtype:
        return self.out_w.dtype


def _orthogonal(rng: np.random.Generator, size: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((size, size)))
    return q * np.sign(np.diag(r))


def init_params(
    cfg: EstimatorConfig, rng: np.random.Generator, dtype=np.float32
) -> EstimatorParams:
    """Glorot-uniform input/output weights, orthogonal recurrences, zero biases."""
    h = cfg.hidden
    cells = []
    for i in range(cfg.depth):
        in_dim = cfg.input_dim if i == 0 else h
        a = np.sqrt(6.0 / (in_dim + h))
        w_in = rng.uniform(-a, a, size=(3 * h, in_dim))
        w_rec = np.concatenate([_orthogonal(rng, h) for _ in range(3)], axis=0)
        cells.append(
            GruCellParams(
                w_in=w_in.astype(dtype),
                w_rec=w_rec.astype(dtype),
                bias=np.zeros(3 * h, dtype=dtype),
            )
        )
    a = np.sqrt(6.0 / (h + cfg.k))
    out_w = rng.uniform(-a, a, size=(cfg.k, h)).astype(dtype)
    return EstimatorParams(
        cells=cells,
        out_w=out_w,
        out_b=np.zeros(cfg.k, dtype=dtype),
        time_steps=cfg.time_steps,
    )


def zeros_like_params(params: EstimatorParams) -> EstimatorParams:
    return EstimatorParams(
        cells=[
            GruCellParams(
                w_in=np.zeros_like(c.w_in),
                w_rec=np.zeros_like(c.w_rec),
                bias=np.zeros_like(c.bias),
            )
            for c in params.cells
        ],
        out_w=np.zeros_like(params.out_w),
        out_b=np.zeros_like(params.out_b),
        time_steps=params.time_steps,
    )


def param_arrays(params: EstimatorParams) -> list[np.ndarray]:
    """Flat list of parameter arrays in checkpoint order."""
    arrays: list[np.ndarray] = []
    for c in params.cells:
        arrays.extend([c.w_in, c.w_rec, c.bias])
    arrays.extend([params.out_w, params.out_b])
    return arrays


def params_from_arrays(template: EstimatorParams, arrays: list[np.ndarray]) -> EstimatorParams:
    """Rebuild an EstimatorParams from a flat array list (shape-checked)."""
    expected = param_arrays(template)
    if len(arrays) != len(expected):
        raise ValueError("wrong number of parameter arrays")
    for got, want in zip(arrays, expected):
        if got.shape != want.shape:
            raise ValueError(f"parameter shape mismatch: {got.shape} vs {want.shape}")
    cells = []
    for i in range(len(template.cells)):
        w_in, w_rec, bias = arrays[3 * i : 3 * i + 3]
        cells.append(GruCellParams(w_in=w_in, w_rec=w_rec, bias=bias))
    return EstimatorParams(
        cells=cells, out_w=arrays[-2], out_b=arrays[-1], time_steps=template.time_steps
    )


def parameter_count(params: EstimatorParams) -> int:
    return sum(a.size for a in param_arrays(params))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh form avoids overflow warnings for large negative inputs
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def gru_step(cell: GruCellParams, x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """One GRU update h -> h' for a single input vector or a batch."""
    x = np.asarray(x, dtype=cell.w_in.dtype)
    h = np.asarray(h, dtype=cell.w_in.dtype)
    if x.shape[-1] != cell.in_dim or h.shape[-1] != cell.hidden:
        raise ValueError(
            f"gru_step: expected input {cell.in_dim} and state {cell.hidden}, "
            f"got {x.shape[-1]} and {h.shape[-1]}"
        )
    nh = cell.hidden
    gx = x @ cell.w_in.T + cell.bias
    z = _sigmoid(gx[..., :nh] + h @ cell.w_rec[:nh].T)
    r = _sigmoid(gx[..., nh : 2 * nh] + h @ cell.w_rec[nh : 2 * nh].T)
    c = np.tanh(gx[..., 2 * nh :] + (r * h) @ cell.w_rec[2 * nh :].T)
    return (1.0 - z) * h + z * c


@dataclass
class _StepRecord:
    x: np.ndarray
    h_prev: np.ndarray
    r: np.ndarray
    z: np.ndarray
    c: np.ndarray


@dataclass
class ForwardTape:
    """Cached activations from one forward pass, consumed by backward()."""

    params: EstimatorParams
    steps: list[list[_StepRecord]]  # [t][cell]
    h_final: np.ndarray
    w_soft: np.ndarray
    squeezed: bool


def forward(params: EstimatorParams, inputs: np.ndarray) -> tuple[np.ndarray, ForwardTape]:
    """Run the stacked GRU for the configured number of time steps.

    The same input vector is fed to the bottom cell at every step; each
    higher cell consumes the state of the cell below at the same step. The
    output is read from the top cell after the last step only. Accepts a
    single vector (2n-k,) or a batch (batch, 2n-k).
    """
    dtype = params.dtype
    x = np.asarray(inputs, dtype=dtype)
    squeezed = x.ndim == 1
    if squeezed:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.input_dim:
        raise ValueError(f"input must have width {params.input_dim}, got {x.shape}")
    if params.time_steps < 1:
        raise ValueError("time_steps must be >= 1")

    batch = x.shape[0]
    nh = params.hidden
    depth = len(params.cells)
    h = [np.zeros((batch, nh), dtype=dtype) for _ in range(depth)]

    # the bottom cell sees the same input every step: hoist its input GEMM
    gx0 = x @ params.cells[0].w_in.T + params.cells[0].bias

    steps: list[list[_StepRecord]] = []
    for _ in range(params.time_steps):
        records: list[_StepRecord] = []
        for i, cell in enumerate(params.cells):
            xi = x if i == 0 else h[i - 1]
            gx = gx0 if i == 0 else xi @ cell.w_in.T + cell.bias
            h_prev = h[i]
            rec_zr = h_prev @ cell.w_rec[: 2 * nh].T  # update and reset gates fused
            z = _sigmoid(gx[:, :nh] + rec_zr[:, :nh])
            r = _sigmoid(gx[:, nh : 2 * nh] + rec_zr[:, nh:])
            c = np.tanh(gx[:, 2 * nh :] + (r * h_prev) @ cell.w_rec[2 * nh :].T)
            h[i] = (1.0 - z) * h_prev + z * c
            records.append(_StepRecord(x=xi, h_prev=h_prev, r=r, z=z, c=c))
        steps.append(records)

    h_final = h[-1]
    w_soft = np.tanh(h_final @ params.out_w.T + params.out_b)
    tape = ForwardTape(
        params=params, steps=steps, h_final=h_final, w_soft=w_soft, squeezed=squeezed
    )
    return (w_soft[0] if squeezed else w_soft), tape


def backward(
    params: EstimatorParams, tape: ForwardTape, grad_out: np.ndarray
) -> EstimatorParams:
    """Exact gradients of the tape's output against every parameter.

    grad_out holds dL/d(w_soft) with the same leading shape as the forward
    output; batch gradients are summed. Returns a params-shaped structure.
    """
    if tape.params is not params:
        raise ValueError("tape does not belong to these parameters")
    grad_out = np.asarray(grad_out, dtype=params.dtype)
    if tape.squeezed:
        grad_out = grad_out[None, :]
    if grad_out.shape != tape.w_soft.shape:
        raise ValueError(f"grad_out shape {grad_out.shape} != output shape {tape.w_soft.shape}")

    nh = params.hidden
    depth = len(params.cells)
    grads = zeros_like_params(params)

    g_pre = grad_out * (1.0 - tape.w_soft**2)
    grads.out_w += g_pre.T @ tape.h_final
    grads.out_b += g_pre.sum(axis=0)

    dh = [np.zeros_like(tape.h_final) for _ in range(depth)]
    dh[-1] = g_pre @ params.out_w

    for t in range(len(tape.steps) - 1, -1, -1):
        for i in range(depth - 1, -1, -1):
            rec = tape.steps[t][i]
            cell = params.cells[i]
            gc = grads.cells[i]

            dz = dh[i] * (rec.c - rec.h_prev)
            dc = dh[i] * rec.z
            dh_prev = dh[i] * (1.0 - rec.z)

            da_c = dc * (1.0 - rec.c**2)
            drh = da_c @ cell.w_rec[2 * nh :]
            dr = drh * rec.h_prev
            dh_prev = dh_prev + drh * rec.r
            da_z = dz * rec.z * (1.0 - rec.z)
            da_r = dr * rec.r * (1.0 - rec.r)

            da = np.concatenate([da_z, da_r, da_c], axis=1)
            da_zr = da[:, : 2 * nh]
            gc.w_in += da.T @ rec.x
            gc.bias += da.sum(axis=0)
            gc.w_rec[: 2 * nh] += da_zr.T @ rec.h_prev
            gc.w_rec[2 * nh :] += da_c.T @ (rec.r * rec.h_prev)

            dh_prev = dh_prev + da_zr @ cell.w_rec[: 2 * nh]
            dh[i] = dh_prev
            if i > 0:
                dx = da @ cell.w_in
                dh[i - 1] = dh[i - 1] + dx
    return grads


def predict_flips(params: EstimatorParams, inputs: np.ndarray) -> BitVector:
    """Hard flip decisions for one input vector: bit 0 if the soft output is > 0."""
    inputs = np.asarray(inputs)
    if inputs.ndim != 1:
        raise ValueError("predict_flips expects a single input vector")
    w_soft, _ = forward(params, inputs)
    return hard_decision(w_soft)


def predict_flips_batch(params: EstimatorParams, inputs: np.ndarray) -> np.ndarray:
    """Batch flip decisions as a (batch, k) uint8 array."""
    w_soft, _ = forward(params, inputs)
    return (w_soft <= 0).astype(np.uint8)
