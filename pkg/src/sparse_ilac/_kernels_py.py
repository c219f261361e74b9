"""Pure-numpy fallback for the compiled kernels in ``_kernels.pyx``."""

import numpy as np

_CHUNK = 4096


def array_gain(positions, delta):
    positions = np.asarray(positions, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    m = positions.size
    out = np.empty(delta.size, dtype=np.float64)
    for start in range(0, delta.size, _CHUNK):
        d = delta[start:start + _CHUNK]
        ph = np.pi * np.outer(d, positions)
        re = np.cos(ph).sum(axis=1)
        im = np.sin(ph).sum(axis=1)
        out[start:start + _CHUNK] = (re * re + im * im) / (m * m)
    return out


def steered_power(cov, positions, u):
    cov = np.asarray(cov, dtype=np.complex128)
    positions = np.asarray(positions, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    m = positions.size
    if cov.shape != (m, m):
        raise ValueError("covariance size does not match the steering length")
    out = np.empty(u.size, dtype=np.float64)
    for start in range(0, u.size, _CHUNK):
        A = np.exp(1j * np.pi * np.outer(positions, u[start:start + _CHUNK]))
        out[start:start + _CHUNK] = np.real(np.einsum("ig,ig->g", A.conj(), cov @ A))
    return out
