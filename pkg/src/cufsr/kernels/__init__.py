"""Kernel backend selection.

Two interchangeable implementations of the hot convolution loops exist:

* ``_fast`` -- compiled Cython extension (float32 only),
* ``numpy_backend`` -- vectorized numpy, also the float64 path.

``CUFSR_KERNELS`` picks the backend: ``c``, ``numpy``, or ``auto``.  The
default ``auto`` splits per op where the benchmark is unambiguous: dense
conv2d goes to numpy (im2col + BLAS beats the compiled loops there) and
depthwise goes to the compiled extension when it built.  Dispatch happens
per call so float64 arrays always take the numpy path regardless of
backend.

Run ``python benchmarks/bench_kernels.py`` to compare the two.
"""

import os

import numpy as np

from . import numpy_backend

try:
    from . import _fast
except ImportError:
    _fast = None

_choice = os.environ.get("CUFSR_KERNELS", "auto")
if _choice == "numpy":
    _conv_backend = _dw_backend = numpy_backend
elif _choice == "c":
    if _fast is None:
        raise ImportError("CUFSR_KERNELS=c but the compiled extension is not available")
    _conv_backend = _dw_backend = _fast
elif _choice == "auto":
    _conv_backend = numpy_backend
    _dw_backend = _fast if _fast is not None else numpy_backend
else:
    raise ValueError(f"CUFSR_KERNELS must be auto, c, or numpy, got {_choice!r}")


def backend_name():
    if _conv_backend is _dw_backend:
        return _conv_backend.NAME
    return f"auto (conv2d={_conv_backend.NAME}, depthwise={_dw_backend.NAME})"


def compiled_available():
    return _fast is not None


def get_backend(name):
    """Explicit backend lookup, used by parity tests and the benchmark."""
    if name == "numpy":
        return numpy_backend
    if name == "c":
        if _fast is None:
            raise ImportError("compiled kernel extension not available")
        return _fast
    raise ValueError(name)


def _pick(backend, x):
    # The compiled kernels are float32-only; f64 (gradient checking) goes
    # through numpy.
    if backend is not numpy_backend and x.dtype == np.float32:
        return backend
    return numpy_backend


def conv2d_fwd(x, w, b):
    return _pick(_conv_backend, x).conv2d_fwd(x, w, b)


def conv2d_bwd_x(gy, w):
    return _pick(_conv_backend, gy).conv2d_bwd_x(gy, w)


def conv2d_bwd_w(x, gy, k):
    return _pick(_conv_backend, x).conv2d_bwd_w(x, gy, k)


def depthwise_fwd(x, w):
    return _pick(_dw_backend, x).depthwise_fwd(x, w)


def depthwise_bwd_x(gy, w):
    return _pick(_dw_backend, gy).depthwise_bwd_x(gy, w)


def depthwise_bwd_w(x, gy, k):
    return _pick(_dw_backend, x).depthwise_bwd_w(x, gy, k)
