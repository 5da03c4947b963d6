"""AMSGrad optimizer.

Adam with the elementwise running maximum of the second-moment estimate
in the denominator, so effective step sizes never grow back. Bias
correction is applied to both moments at use time.
"""

import numpy as np

from ..errors import ShapeMismatch


class AmsGrad:
    def __init__(self, store, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.store = store
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {p: np.zeros_like(store[p]) for p in store.trainable_paths()}
        self.v = {p: np.zeros_like(store[p]) for p in store.trainable_paths()}
        self.v_max = {p: np.zeros_like(store[p]) for p in store.trainable_paths()}

    def step(self):
        self.step_count += 1
        bc1 = 1.0 - self.beta1 ** self.step_count
        bc2 = 1.0 - self.beta2 ** self.step_count
        for path in self.store.trainable_paths():
            grad = self.store.grad(path)
            if grad.shape != self.m[path].shape:
                raise ShapeMismatch(f"gradient shape changed for {path!r}")
            m = self.m[path]
            v = self.v[path]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            np.maximum(self.v_max[path], v, out=self.v_max[path])
            update = (m / bc1) / (np.sqrt(self.v_max[path] / bc2) + self.eps)
            self.store[path][...] -= self.lr * update

    def state_arrays(self):
        """Flat view of the optimizer state for checkpointing."""
        out = {}
        for path in self.store.trainable_paths():
            out[f"opt.m.{path}"] = self.m[path]
            out[f"opt.v.{path}"] = self.v[path]
            out[f"opt.vmax.{path}"] = self.v_max[path]
        return out

    def load_state_arrays(self, arrays, step_count):
        for path in self.store.trainable_paths():
            self.m[path][:] = arrays[f"opt.m.{path}"]
            self.v[path][:] = arrays[f"opt.v.{path}"]
            self.v_max[path][:] = arrays[f"opt.vmax.{path}"]
        self.step_count = int(step_count)
