"""Backend selection for the hot numerical loops.

The compiled extension ``sparse_ilac._kernels`` is used when it was built;
otherwise the numpy implementation in ``sparse_ilac._kernels_py`` is used.
Setting ``SPARSE_ILAC_BACKEND=python`` forces the fallback.

Both backends expose:

``array_gain(positions, delta)``
    Normalized array power pattern at each spatial-angle difference.
``steered_power(cov, positions, u)``
    Real part of ``a(u)^H C a(u)`` for each ``u = sin(theta)``.
"""

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("SPARSE_ILAC_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _impl  # noqa: F811
        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py


def array_gain(positions, delta):
    pos = np.ascontiguousarray(positions, dtype=np.float64).ravel()
    d = np.ascontiguousarray(delta, dtype=np.float64)
    shape = d.shape
    return _impl.array_gain(pos, d.ravel()).reshape(shape)


def steered_power(cov, positions, u):
    c = np.ascontiguousarray(cov, dtype=np.complex128)
    pos = np.ascontiguousarray(positions, dtype=np.float64).ravel()
    uu = np.ascontiguousarray(u, dtype=np.float64)
    shape = uu.shape
    return _impl.steered_power(c, pos, uu.ravel()).reshape(shape)
