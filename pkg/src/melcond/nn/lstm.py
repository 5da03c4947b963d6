"""Stacked uni-directional LSTM built on the compiled layer kernels.

The per-layer recurrences run in :mod:`melcond.kernels`; the batched
input projections and weight-gradient reductions happen here as single
matrix products. Dropout sits between stacked layers (train mode only),
one mask for the whole (T, N, H) block.
"""

import numpy as np

from .. import kernels
from ..errors import ShapeMismatch
from .layers import dropout_backward, dropout_forward


def init_lstm_params(store, prefix, input_size, hidden_size, n_layers, rng):
    """Create per-layer Wx (I, 4H), Wh (H, 4H) and bias (4H,).

    Weights are uniform in +-1/sqrt(fan_in); the forget-gate slice of each
    bias starts at 1.0, everything else at 0.
    """
    for layer in range(n_layers):
        fan_in = input_size if layer == 0 else hidden_size
        bound_x = 1.0 / np.sqrt(fan_in)
        bound_h = 1.0 / np.sqrt(hidden_size)
        store.add(f"{prefix}.l{layer}.Wx",
                  rng.uniform(-bound_x, bound_x, (fan_in, 4 * hidden_size)))
        store.add(f"{prefix}.l{layer}.Wh",
                  rng.uniform(-bound_h, bound_h, (hidden_size, 4 * hidden_size)))
        bias = np.zeros(4 * hidden_size, dtype=np.float32)
        bias[hidden_size:2 * hidden_size] = 1.0
        store.add(f"{prefix}.l{layer}.b", bias)


def layer_params(store, prefix, n_layers):
    return [(store[f"{prefix}.l{i}.Wx"], store[f"{prefix}.l{i}.Wh"], store[f"{prefix}.l{i}.b"])
            for i in range(n_layers)]


def lstm_forward(params, x, h0, c0, train=False, dropout_p=0.0, rng=None,
                 dropout_masks=None):
    """Run the stack over (T, N, input) and return (y, hT, cT, cache).

    h0/c0 have shape (layers, N, H). ``dropout_masks`` lets a caller pin
    the inter-layer masks (one per boundary, or None entries).
    """
    n_layers = len(params)
    T, N, _ = x.shape
    H = params[0][1].shape[0]
    if h0.shape != (n_layers, N, H) or c0.shape != (n_layers, N, H):
        raise ShapeMismatch(f"lstm state shape {h0.shape}, expected {(n_layers, N, H)}")

    hT = np.empty_like(h0)
    cT = np.empty_like(c0)
    layer_caches = []
    layer_in = np.ascontiguousarray(x)
    for layer, (Wx, Wh, b) in enumerate(params):
        if layer_in.shape[2] != Wx.shape[0]:
            raise ShapeMismatch(
                f"lstm layer {layer}: input width {layer_in.shape[2]}, expected {Wx.shape[0]}")
        zx = (layer_in.reshape(T * N, -1) @ Wx + b).reshape(T, N, 4 * H)
        h_seq = np.empty((T, N, H), dtype=zx.dtype)
        c_seq = np.empty((T, N, H), dtype=zx.dtype)
        ifgo = np.empty((T, N, 4 * H), dtype=zx.dtype)
        tanhc = np.empty((T, N, H), dtype=zx.dtype)
        h_init = np.ascontiguousarray(h0[layer])
        c_init = np.ascontiguousarray(c0[layer])
        kernels.lstm_layer_forward(zx, Wh, h_init, c_init, h_seq, c_seq, ifgo, tanhc)
        hT[layer] = h_seq[-1]
        cT[layer] = c_seq[-1]
        out = h_seq
        mask = None
        if layer < n_layers - 1:
            pinned = dropout_masks[layer] if dropout_masks else None
            out, mask = dropout_forward(h_seq, dropout_p, train, rng=rng, mask=pinned)
        layer_caches.append((layer_in, h_seq, c_seq, ifgo, tanhc, c_init, mask))
        layer_in = np.ascontiguousarray(out)
    cache = (params, layer_caches, h0, c0)
    return layer_in, hT, cT, cache


def lstm_backward(dy, cache, d_hT=None, d_cT=None):
    """Exact BPTT through the whole stack.

    Returns (dx, per-layer (dWx, dWh, db) list, dh0, dc0).
    """
    params, layer_caches, h0, c0 = cache
    n_layers = len(params)
    T, N, H = dy.shape
    dh0 = np.empty_like(h0)
    dc0 = np.empty_like(c0)
    grads = [None] * n_layers
    d_out = np.ascontiguousarray(dy)
    zero = np.zeros((N, H), dtype=dy.dtype)
    for layer in range(n_layers - 1, -1, -1):
        layer_in, h_seq, c_seq, ifgo, tanhc, c_init, mask = layer_caches[layer]
        if layer < n_layers - 1:
            d_out = np.ascontiguousarray(dropout_backward(d_out, mask))
        Wx, Wh, _ = params[layer]
        dz = np.empty_like(ifgo)
        dhT_in = np.ascontiguousarray(d_hT[layer]) if d_hT is not None else zero
        dcT_in = np.ascontiguousarray(d_cT[layer]) if d_cT is not None else zero
        kernels.lstm_layer_backward(d_out, Wh, h_seq, c_seq, ifgo, tanhc, c_init,
                                    dhT_in, dcT_in, dz, dh0[layer], dc0[layer])
        dz_flat = dz.reshape(T * N, -1)
        x_flat = layer_in.reshape(T * N, -1)
        h_prev = np.concatenate([h0[layer][None], h_seq[:-1]], axis=0)
        dWx = x_flat.T @ dz_flat
        dWh = h_prev.reshape(T * N, -1).T @ dz_flat
        db = dz_flat.sum(axis=0)
        grads[layer] = (dWx, dWh, db)
        d_out = (dz_flat @ Wx.T).reshape(T, N, -1)
    return d_out, grads, dh0, dc0
