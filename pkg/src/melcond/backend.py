"""Kernel backend selection.

The recurrent inner loops ship in two forms compiled from one source:
numba ``@njit`` and plain numpy. ``MELCOND_BACKEND`` picks one:

* unset or ``numba``: the jitted kernels (numpy if numba is unavailable);
* ``numpy``: the pure-numpy fallback.

Both compute the same arithmetic; results agree to float32 roundoff but
are not guaranteed bit-identical across backends. Within one backend all
kernels are deterministic. ``benchmarks/bench_kernels.py`` compares the
two on realistic shapes.
"""

import os

_ENV_VAR = "MELCOND_BACKEND"
_selected = None


def _numba_available():
    try:
        import numba  # noqa: F401
        return True
    except ImportError:
        return False


def selected_backend():
    """Resolve the backend once per process."""
    global _selected
    if _selected is None:
        value = os.environ.get(_ENV_VAR, "").strip().lower()
        if value in ("", "numba", "auto"):
            _selected = "numba" if _numba_available() else "numpy"
        elif value == "numpy":
            _selected = "numpy"
        else:
            raise ValueError(f"{_ENV_VAR}={value!r}: expected 'numba' or 'numpy'")
    return _selected


def use_numba():
    return selected_backend() == "numba"
