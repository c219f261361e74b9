# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Semantics mirror ``_kernels_py`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, M_PI

cnp.import_array()


def array_gain(const double[::1] positions, const double[::1] delta):
    """Normalized power pattern ``|sum_m exp(j*pi*d_m*delta)|^2 / M^2``.

    Integer, increasing positions use the powers of ``exp(j*pi*delta)`` up to
    the aperture instead of one sincos per element.
    """
    cdef Py_ssize_t n = delta.shape[0]
    cdef Py_ssize_t m = positions.shape[0]
    cdef Py_ssize_t i, k, d, top
    cdef double re, im, ph, norm, cr, ci, zr, zi, t
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] res = out
    norm = <double>(m * m)
    pos_np = np.asarray(positions)
    integer = m > 0 and bool(np.all(pos_np == np.round(pos_np))) and bool(np.all(np.diff(pos_np) > 0)) \
        and pos_np[0] >= 0
    cdef unsigned char[::1] mask
    if integer:
        top = <Py_ssize_t>positions[m - 1]
        mask_a = np.zeros(top + 1, dtype=np.uint8)
        mask_a[pos_np.astype(np.int64)] = 1
        mask = mask_a
        for i in range(n):
            ph = M_PI * delta[i]
            cr = cos(ph)
            ci = sin(ph)
            zr = 1.0
            zi = 0.0
            re = 0.0
            im = 0.0
            for d in range(top + 1):
                if mask[d]:
                    re += zr
                    im += zi
                t = zr * cr - zi * ci
                zi = zr * ci + zi * cr
                zr = t
            res[i] = (re * re + im * im) / norm
        return out
    for i in range(n):
        re = 0.0
        im = 0.0
        for k in range(m):
            ph = M_PI * positions[k] * delta[i]
            re += cos(ph)
            im += sin(ph)
        res[i] = (re * re + im * im) / norm
    return out


def _fold_lags(const double complex[:, ::1] cov, const double[::1] positions):
    """Sum ``C_ij + conj(C_ji)`` over pairs sharing an integer lag ``d_j - d_i > 0``."""
    cdef Py_ssize_t m = positions.shape[0]
    cdef Py_ssize_t i, j, lag
    cdef Py_ssize_t top = <Py_ssize_t>(positions[m - 1] - positions[0]) if m else 0
    hr_a = np.zeros(top + 1, dtype=np.float64)
    hi_a = np.zeros(top + 1, dtype=np.float64)
    cdef double[::1] hr = hr_a
    cdef double[::1] hi = hi_a
    for i in range(m):
        for j in range(m):
            lag = <Py_ssize_t>(positions[j] - positions[i])
            if lag > 0:
                hr[lag] += cov[i, j].real + cov[j, i].real
                hi[lag] += cov[i, j].imag - cov[j, i].imag
    return hr_a, hi_a


def steered_power(const double complex[:, ::1] cov,
                  const double[::1] positions,
                  const double[::1] u):
    """Real part of ``a(u)^H C a(u)`` with ``a_k(u) = exp(j*pi*d_k*u)``.

    Only ``Re C_ii`` and ``C_ij + conj(C_ji)`` enter the real part. With
    integer, increasing positions the pair terms are folded by lag and the
    lag phasors come from a recurrence on ``exp(j*pi*u)``; otherwise each
    pair is visited once.
    """
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t m = positions.shape[0]
    cdef Py_ssize_t g, i, j, p, top
    cdef double ph, acc, diag, xr, xi, pr, pi_, cr, ci, zr, zi, t
    if cov.shape[0] != m or cov.shape[1] != m:
        raise ValueError("covariance size does not match the steering length")
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] res = out
    diag = 0.0
    for i in range(m):
        diag += cov[i, i].real
    pos_np = np.asarray(positions)
    integer = m > 1 and bool(np.all(pos_np == np.round(pos_np))) and bool(np.all(np.diff(pos_np) > 0))
    cdef double[::1] hr
    cdef double[::1] hi
    if integer:
        hr_a, hi_a = _fold_lags(cov, positions)
        hr = hr_a
        hi = hi_a
        top = hr.shape[0] - 1
        for g in range(n):
            ph = M_PI * u[g]
            cr = cos(ph)
            ci = sin(ph)
            zr = 1.0
            zi = 0.0
            acc = 0.0
            for p in range(1, top + 1):
                t = zr * cr - zi * ci
                zi = zr * ci + zi * cr
                zr = t
                acc += hr[p] * zr - hi[p] * zi
            res[g] = diag + acc
        return out
    cdef Py_ssize_t npair = m * (m - 1) // 2
    hr = np.empty(max(npair, 1), dtype=np.float64)
    hi = np.empty(max(npair, 1), dtype=np.float64)
    p = 0
    for i in range(m):
        for j in range(i + 1, m):
            hr[p] = cov[i, j].real + cov[j, i].real
            hi[p] = cov[i, j].imag - cov[j, i].imag
            p += 1
    cdef double[::1] ar = np.empty(m, dtype=np.float64)
    cdef double[::1] ai = np.empty(m, dtype=np.float64)
    for g in range(n):
        for i in range(m):
            ph = M_PI * positions[i] * u[g]
            ar[i] = cos(ph)
            ai[i] = sin(ph)
        acc = 0.0
        p = 0
        for i in range(m):
            xr = ar[i]
            xi = ai[i]
            for j in range(i + 1, m):
                # conj(a_i) a_j
                pr = xr * ar[j] + xi * ai[j]
                pi_ = xr * ai[j] - xi * ar[j]
                acc += hr[p] * pr - hi[p] * pi_
                p += 1
        res[g] = diag + acc
    return out
