"""Named parameter storage with gradient accumulation."""

import numpy as np

from ..errors import ShapeMismatch


class ParameterStore:
    """Ordered map of path -> array, plus a parallel gradient map.

    Paths are unique and shapes are fixed once added. Buffers (batch-norm
    running statistics) live alongside trainable parameters but are
    skipped by the optimizer and by gradient accumulation. Training uses
    float32; float64 exists for the gradient-check harness.
    """

    def __init__(self, dtype=np.float32):
        self.dtype = np.dtype(dtype)
        self._values = {}
        self._grads = {}
        self._trainable = []

    def add(self, path, value, trainable=True):
        if path in self._values:
            raise ValueError(f"parameter {path!r} already exists")
        arr = np.ascontiguousarray(value, dtype=self.dtype)
        self._values[path] = arr
        if trainable:
            self._trainable.append(path)
            self._grads[path] = np.zeros_like(arr)
        return arr

    def __getitem__(self, path):
        return self._values[path]

    def __contains__(self, path):
        return path in self._values

    def paths(self):
        return list(self._values)

    def trainable_paths(self):
        return list(self._trainable)

    def grad(self, path):
        return self._grads[path]

    def accumulate(self, path, grad):
        slot = self._grads[path]
        if slot.shape != np.shape(grad):
            raise ShapeMismatch(
                f"gradient for {path!r} has shape {np.shape(grad)}, expected {slot.shape}")
        slot += grad

    def zero_grads(self):
        for g in self._grads.values():
            g[:] = 0.0

    def n_parameters(self):
        return sum(self._values[p].size for p in self._trainable)

    def snapshot(self):
        """Copies of every array (buffers included)."""
        return {path: arr.copy() for path, arr in self._values.items()}

    def restore(self, snapshot):
        for path, arr in snapshot.items():
            dst = self._values[path]
            if dst.shape != arr.shape:
                raise ShapeMismatch(f"snapshot of {path!r} has shape {arr.shape}, "
                                    f"expected {dst.shape}")
            dst[:] = arr
