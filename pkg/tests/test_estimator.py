import math

import numpy as np
import pytest

from sbnd.estimator import (
    EstimatorConfig,
    EstimatorParams,
    GruCellParams,
    backward,
    forward,
    gru_step,
    init_params,
    param_arrays,
    parameter_count,
    predict_flips,
    predict_flips_batch,
    zeros_like_params,
)
from sbnd.gf2 import BitVector


def small_params(seed=0, dtype=np.float64, n=8, k=4, scale=2, time_steps=3, depth=2):
    cfg = EstimatorConfig(n=n, k=k, scale=scale, time_steps=time_steps, depth=depth)
    return cfg, init_params(cfg, np.random.default_rng(seed), dtype=dtype)


def test_config_dimension_arithmetic():
    cfg = EstimatorConfig(n=4, k=2, scale=2, time_steps=2, depth=2)
    assert cfg.input_dim == 6
    assert cfg.hidden == 12
    params = init_params(cfg, np.random.default_rng(0))
    assert params.cells[0].w_in.shape == (36, 6)
    assert params.cells[1].w_in.shape == (36, 12)
    assert params.cells[0].w_rec.shape == (36, 12)
    assert params.out_w.shape == (2, 12)


def test_init_biases_zero_and_bounded_weights():
    cfg = EstimatorConfig(n=8, k=4, scale=2, time_steps=2, depth=3)
    params = init_params(cfg, np.random.default_rng(1))
    for cell in params.cells:
        assert not cell.bias.any()
        a = math.sqrt(6.0 / (cell.in_dim + cell.hidden))
        assert np.abs(cell.w_in).max() <= a
        # orthogonal gate blocks
        h = cell.hidden
        for g in range(3):
            q = cell.w_rec[g * h : (g + 1) * h].astype(np.float64)
            assert np.allclose(q @ q.T, np.eye(h), atol=1e-5)
    assert not params.out_b.any()


def test_init_deterministic():
    cfg = EstimatorConfig(n=8, k=4, scale=2, time_steps=2, depth=2)
    p1 = init_params(cfg, np.random.default_rng(42))
    p2 = init_params(cfg, np.random.default_rng(42))
    for a, b in zip(param_arrays(p1), param_arrays(p2)):
        assert np.array_equal(a, b)


def test_gru_step_zero_weights():
    h = 4
    cell = GruCellParams(
        w_in=np.zeros((3 * h, 2)), w_rec=np.zeros((3 * h, h)), bias=np.zeros(3 * h)
    )
    out = gru_step(cell, np.ones(2), np.zeros(h))
    assert np.array_equal(out, np.zeros(h))


def test_gru_step_state_stays_bounded():
    rng = np.random.default_rng(2)
    h, d = 6, 3
    for _ in range(20):
        cell = GruCellParams(
            w_in=rng.normal(scale=2.0, size=(3 * h, d)),
            w_rec=rng.normal(scale=2.0, size=(3 * h, h)),
            bias=rng.normal(size=3 * h),
        )
        state = rng.uniform(-1, 1, size=h)
        nxt = gru_step(cell, rng.normal(size=d), state)
        assert np.all(nxt > -1.0) and np.all(nxt < 1.0)


def test_gru_step_scalar_hand_computation():
    # one unit, one input: every quantity checked against plain-python math
    w_z, u_z, b_z = 0.5, -0.25, 0.1
    w_r, u_r, b_r = -0.3, 0.2, -0.1
    w_c, u_c, b_c = 0.8, 0.6, 0.05
    x, h = 0.7, -0.4
    z = 1.0 / (1.0 + math.exp(-(w_z * x + u_z * h + b_z)))
    r = 1.0 / (1.0 + math.exp(-(w_r * x + u_r * h + b_r)))
    c = math.tanh(w_c * x + u_c * (r * h) + b_c)
    expected = (1.0 - z) * h + z * c

    cell = GruCellParams(
        w_in=np.array([[w_z], [w_r], [w_c]], dtype=np.float64),
        w_rec=np.array([[u_z], [u_r], [u_c]], dtype=np.float64),
        bias=np.array([b_z, b_r, b_c], dtype=np.float64),
    )
    got = gru_step(cell, np.array([x]), np.array([h]))
    assert got[0] == pytest.approx(expected, abs=1e-12)


def test_gru_step_dimension_mismatch():
    _, params = small_params()
    with pytest.raises(ValueError):
        gru_step(params.cells[0], np.ones(3), np.zeros(params.hidden))


def test_forward_zero_params_outputs_zero():
    cfg, params = small_params()
    zero = zeros_like_params(params)
    out, _ = forward(zero, np.ones(cfg.input_dim))
    assert np.array_equal(out, np.zeros(cfg.k))


def test_forward_output_shape_and_range():
    cfg, params = small_params(seed=3)
    rng = np.random.default_rng(4)
    out, _ = forward(params, rng.normal(size=cfg.input_dim))
    assert out.shape == (cfg.k,)
    assert np.all(np.abs(out) < 1.0)
    batch, _ = forward(params, rng.normal(size=(5, cfg.input_dim)))
    assert batch.shape == (5, cfg.k)


def test_forward_single_step_single_cell_composition():
    cfg, params = small_params(seed=5, time_steps=1, depth=1)
    x = np.random.default_rng(6).normal(size=cfg.input_dim)
    h1 = gru_step(params.cells[0], x, np.zeros(cfg.hidden))
    expected = np.tanh(params.out_w @ h1 + params.out_b)
    got, _ = forward(params, x)
    assert np.allclose(got, expected, atol=1e-12)


def test_forward_deterministic():
    cfg, params = small_params(seed=7, dtype=np.float32)
    x = np.random.default_rng(8).normal(size=cfg.input_dim).astype(np.float32)
    a, _ = forward(params, x)
    b, _ = forward(params, x)
    assert np.array_equal(a, b)


def test_backward_zero_grad_out():
    cfg, params = small_params(seed=9)
    _, tape = forward(params, np.random.default_rng(10).normal(size=cfg.input_dim))
    grads = backward(params, tape, np.zeros(cfg.k))
    for arr in param_arrays(grads):
        assert not arr.any()


def test_backward_out_bias_closed_form():
    cfg, params = small_params(seed=11)
    rng = np.random.default_rng(12)
    w_soft, tape = forward(params, rng.normal(size=cfg.input_dim))
    grad_out = rng.normal(size=cfg.k)
    grads = backward(params, tape, grad_out)
    assert np.allclose(grads.out_b, grad_out * (1.0 - w_soft**2), atol=1e-12)


def test_backward_rejects_stale_tape():
    cfg, params = small_params(seed=13)
    _, tape = forward(params, np.ones(cfg.input_dim))
    _, other = small_params(seed=14)
    with pytest.raises(ValueError):
        backward(other, tape, np.zeros(cfg.k))
    with pytest.raises(ValueError):
        backward(params, tape, np.zeros(cfg.k + 1))


def _directional_fd(params, x, v, step=1e-5):
    """Central finite differences of v . w_soft(params, x) per parameter."""
    fd = []
    for arr in param_arrays(params):
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            plus, _ = forward(params, x)
            flat[i] = orig - step
            minus, _ = forward(params, x)
            flat[i] = orig
            gflat[i] = float(v @ (plus - minus)) / (2.0 * step)
        fd.append(g)
    return fd


def test_backward_matches_finite_differences():
    cfg, params = small_params(seed=15, dtype=np.float64)
    rng = np.random.default_rng(16)
    x = rng.normal(size=cfg.input_dim)
    v = rng.normal(size=cfg.k)
    _, tape = forward(params, x)
    grads = param_arrays(backward(params, tape, v))
    fd = _directional_fd(params, x, v)
    worst = 0.0
    for g, f in zip(grads, fd):
        denom = np.maximum(np.maximum(np.abs(g), np.abs(f)), 1e-6)
        worst = max(worst, float((np.abs(g - f) / denom).max()))
    assert worst < 1e-4


def test_predict_flips_thresholding():
    cfg, params = small_params(seed=17)
    # hand-built output layer so w_soft is controlled: zero depth influence
    zero = zeros_like_params(params)
    zero.out_b[:] = np.array([0.9, -0.2, 0.0, 0.4])
    x = np.zeros(cfg.input_dim)
    w_soft, _ = forward(zero, x)
    assert np.allclose(w_soft, np.tanh(zero.out_b))
    flips = predict_flips(zero, x)
    assert flips == BitVector.from_bits([0, 1, 1, 0])


def test_predict_flips_zero_params_all_ones():
    cfg, params = small_params(seed=18)
    zero = zeros_like_params(params)
    flips = predict_flips(zero, np.zeros(cfg.input_dim))
    assert flips == BitVector.from_bits([1] * cfg.k)


def test_predict_flips_batch_matches_single():
    cfg, params = small_params(seed=19)
    rng = np.random.default_rng(20)
    xs = rng.normal(size=(4, cfg.input_dim))
    batch = predict_flips_batch(params, xs)
    for i in range(4):
        assert np.array_equal(batch[i], predict_flips(params, xs[i]).to_dense())


def test_parameter_count():
    cfg = EstimatorConfig(n=4, k=2, scale=2, time_steps=2, depth=2)
    params = init_params(cfg, np.random.default_rng(21))
    # cell 1: 36*6 + 36*12 + 36; cell 2: 36*12 + 36*12 + 36; out: 2*12 + 2
    assert parameter_count(params) == (36 * 6 + 36 * 12 + 36) + (36 * 12 * 2 + 36) + 26
