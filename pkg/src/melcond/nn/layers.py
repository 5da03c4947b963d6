"""Layer primitives as paired forward/backward functions.

Forwards return whatever the matching backward needs as an explicit cache
tuple; nothing here owns parameters. All functions are dtype-preserving
so the same code runs in float32 (training) and float64 (tests).
"""

import numpy as np

from ..errors import AllMasked, DegenerateBatch, IndexOutOfRange, ShapeMismatch

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


def embedding_forward(table, indices):
    indices = np.asarray(indices)
    if indices.size and (indices.min() < 0 or indices.max() >= table.shape[0]):
        raise IndexOutOfRange(
            f"embedding index outside [0, {table.shape[0] - 1}]")
    return table[indices]


def embedding_backward(d_out, indices, d_table):
    """Scatter-add output-row gradients into the table gradient."""
    indices = np.asarray(indices).reshape(-1)
    np.add.at(d_table, indices, d_out.reshape(len(indices), -1))


def linear_forward(x, W, b):
    """y = x @ W.T + b with W of shape (out, in)."""
    if x.shape[-1] != W.shape[1] or b.shape[0] != W.shape[0]:
        raise ShapeMismatch(f"linear: x{x.shape} W{W.shape} b{b.shape}")
    return x @ W.T + b


def linear_backward(dy, x, W):
    dx = dy @ W
    dW = dy.T @ x
    db = dy.sum(axis=0)
    return dx, dW, db


def batchnorm_forward(x, scale, shift, running_mean, running_var, train,
                      momentum=BN_MOMENTUM, eps=BN_EPS, update_running=True):
    """Normalize (M, F) rows per feature.

    Train mode uses batch statistics (biased variance) and, unless
    ``update_running`` is off, folds them into the running estimates with
    the unbiased variance, matching the usual convention. Eval mode
    normalizes with the running statistics.
    """
    if train:
        m = x.shape[0]
        if m < 2:
            raise DegenerateBatch(f"batch norm in train mode needs >= 2 rows, got {m}")
        mean = x.mean(axis=0)
        var = x.var(axis=0)
        invstd = 1.0 / np.sqrt(var + eps)
        xhat = (x - mean) * invstd
        if update_running:
            unbiased = var * (m / (m - 1))
            running_mean *= 1.0 - momentum
            running_mean += momentum * mean
            running_var *= 1.0 - momentum
            running_var += momentum * unbiased
    else:
        invstd = 1.0 / np.sqrt(running_var + eps)
        xhat = (x - running_mean) * invstd
    y = xhat * scale + shift
    cache = (xhat, invstd, scale, train)
    return y, cache


def batchnorm_backward(dy, cache):
    xhat, invstd, scale, train = cache
    dshift = dy.sum(axis=0)
    dscale = (dy * xhat).sum(axis=0)
    dxhat = dy * scale
    if train:
        m = dy.shape[0]
        dx = (invstd / m) * (m * dxhat
                             - dxhat.sum(axis=0)
                             - xhat * (dxhat * xhat).sum(axis=0))
    else:
        dx = dxhat * invstd
    return dx, dscale, dshift


def relu_forward(x):
    return np.maximum(x, 0.0)


def relu_backward(dy, x):
    return np.where(x > 0.0, dy, 0.0)


def log_softmax_forward(x):
    shifted = x - x.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def log_softmax_backward(dy, y):
    return dy - np.exp(y) * dy.sum(axis=-1, keepdims=True)


def dropout_forward(x, p, train, rng=None, mask=None):
    """Inverted dropout: kept units scale by 1/(1-p). Returns (y, mask);
    the mask is None when dropout is inactive. A caller may inject a
    fixed mask (gradient checks)."""
    if not train or p <= 0.0:
        return x, None
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout rate {p} outside [0, 1)")
    if mask is None:
        keep = rng.random(x.shape) >= p
        mask = keep.astype(x.dtype) / np.asarray(1.0 - p, dtype=x.dtype)
    return x * mask, mask


def dropout_backward(dy, mask):
    if mask is None:
        return dy
    return dy * mask


def nll_loss(log_probs, targets, mask):
    """Mean negative log-likelihood over masked rows.

    Returns (loss, d_log_probs). Rows where ``mask`` is False contribute
    nothing to loss or gradient.
    """
    targets = np.asarray(targets).reshape(-1)
    mask = np.asarray(mask, dtype=bool).reshape(-1)
    m, n_classes = log_probs.shape
    if targets.shape[0] != m or mask.shape[0] != m:
        raise ShapeMismatch(f"nll: log_probs {log_probs.shape}, targets "
                            f"{targets.shape}, mask {mask.shape}")
    if targets.size and (targets.min() < 0 or targets.max() >= n_classes):
        raise IndexOutOfRange(f"target outside [0, {n_classes - 1}]")
    kept = int(mask.sum())
    if kept == 0:
        raise AllMasked("every position is masked")
    rows = np.arange(m)
    picked = log_probs[rows, targets]
    loss = -float(picked[mask].sum(dtype=np.float64) / kept)
    d = np.zeros_like(log_probs)
    d[rows[mask], targets[mask]] = -1.0 / kept
    return loss, d
