"""Central finite-difference gradient verification.

``gradient_check`` perturbs every element of the given arrays by +-h,
re-evaluates the loss closure, and compares the difference quotient with
the analytic gradient. The reported figure is the worst absolute
deviation relative to the gradient's overall scale,

    max_i |analytic_i - numeric_i| / max(|analytic|_max, |numeric|_max, floor)

which stays meaningful for elements whose true gradient is zero. The
closure must be free of side effects (fix dropout masks, freeze batch
norm running statistics) and deterministic.
"""

import numpy as np

_SCALE_FLOOR = 1e-2


def gradient_check(loss_fn, arrays, analytic_grads, h=1e-3):
    """Max relative error between analytic grads and central differences.

    loss_fn: () -> float, reading ``arrays`` in place
    arrays / analytic_grads: matching lists of ndarrays
    """
    worst = 0.0
    for arr, grad in zip(arrays, analytic_grads):
        numeric = np.zeros(arr.shape, dtype=np.float64)
        flat = arr.reshape(-1)
        num_flat = numeric.reshape(-1)
        for idx in range(flat.size):
            original = flat[idx]
            flat[idx] = original + h
            up = loss_fn()
            flat[idx] = original - h
            down = loss_fn()
            flat[idx] = original
            num_flat[idx] = (np.float64(up) - np.float64(down)) / (2.0 * h)
        scale = max(float(np.abs(grad).max(initial=0.0)),
                    float(np.abs(numeric).max(initial=0.0)),
                    _SCALE_FLOOR)
        err = float(np.abs(numeric - np.asarray(grad, dtype=np.float64)).max(initial=0.0))
        worst = max(worst, err / scale)
    return worst
