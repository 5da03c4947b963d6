"""Hot recurrent kernels: one LSTM layer's forward and backward pass.

These two loops dominate training time, so they are compiled with numba
``@njit`` when available, with the identical source running as the pure
numpy fallback (see :mod:`melcond.backend`). Everything batched (input
projections, weight-gradient reductions) stays outside in plain numpy
where BLAS already does the work in single calls.

Constants are written as ``np.float32`` so the jitted code keeps float32
inputs in float32; float64 inputs promote and stay float64.

Gate layout along the last axis of the ``4H`` blocks is
``[input, forget, cell-candidate, output]``.
"""

import numpy as np

from .backend import use_numba


def _lstm_layer_forward(zx, Wh, h0, c0, h_seq, c_seq, ifgo, tanhc):
    """Run one layer over time.

    zx:    (T, N, 4H) precomputed ``x @ Wx + b``
    Wh:    (H, 4H) recurrent weights
    h0/c0: (N, H) initial state
    Outputs are written into the preallocated h_seq / c_seq (post-gate
    cell state), ifgo (post-activation gates) and tanhc (tanh of cell).
    """
    T = zx.shape[0]
    H = h0.shape[1]
    one = np.float32(1.0)
    h = h0.copy()
    c = c0.copy()
    for t in range(T):
        z = zx[t] + np.dot(h, Wh)
        i = one / (one + np.exp(-z[:, :H]))
        f = one / (one + np.exp(-z[:, H:2 * H]))
        g = np.tanh(z[:, 2 * H:3 * H])
        o = one / (one + np.exp(-z[:, 3 * H:]))
        c = f * c + i * g
        tc = np.tanh(c)
        h = o * tc
        ifgo[t, :, :H] = i
        ifgo[t, :, H:2 * H] = f
        ifgo[t, :, 2 * H:3 * H] = g
        ifgo[t, :, 3 * H:] = o
        c_seq[t] = c
        tanhc[t] = tc
        h_seq[t] = h


def _lstm_layer_backward(dh_out, Wh, h_seq, c_seq, ifgo, tanhc, c0, dhT, dcT,
                         dz, dh0, dc0):
    """Backpropagate one layer through time.

    dh_out: (T, N, H) gradient w.r.t. the layer's per-step outputs
    dhT/dcT: (N, H) extra gradient flowing into the final state
    Writes dz (T, N, 4H), the gradient w.r.t. the pre-activation gates,
    plus dh0/dc0. The caller turns dz into dx / dWx / dWh / db with
    batched matrix products.
    """
    T = dh_out.shape[0]
    H = dh0.shape[1]
    one = np.float32(1.0)
    dh_next = dhT.copy()
    dc_next = dcT.copy()
    for t in range(T - 1, -1, -1):
        dh = dh_out[t] + dh_next
        i = ifgo[t, :, :H]
        f = ifgo[t, :, H:2 * H]
        g = ifgo[t, :, 2 * H:3 * H]
        o = ifgo[t, :, 3 * H:]
        tc = tanhc[t]
        do = dh * tc
        dc = dh * o * (one - tc * tc) + dc_next
        c_prev = c_seq[t - 1] if t > 0 else c0
        dz[t, :, :H] = dc * g * i * (one - i)
        dz[t, :, H:2 * H] = dc * c_prev * f * (one - f)
        dz[t, :, 2 * H:3 * H] = dc * i * (one - g * g)
        dz[t, :, 3 * H:] = do * o * (one - o)
        dh_next = np.dot(dz[t], Wh.T)
        dc_next = dc * f
    dh0[:] = dh_next
    dc0[:] = dc_next


lstm_layer_forward_numpy = _lstm_layer_forward
lstm_layer_backward_numpy = _lstm_layer_backward

try:
    from numba import njit

    lstm_layer_forward_numba = njit(cache=True)(_lstm_layer_forward)
    lstm_layer_backward_numba = njit(cache=True)(_lstm_layer_backward)
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    lstm_layer_forward_numba = None
    lstm_layer_backward_numba = None

if use_numba() and lstm_layer_forward_numba is not None:
    lstm_layer_forward = lstm_layer_forward_numba
    lstm_layer_backward = lstm_layer_backward_numba
else:
    lstm_layer_forward = lstm_layer_forward_numpy
    lstm_layer_backward = lstm_layer_backward_numpy
