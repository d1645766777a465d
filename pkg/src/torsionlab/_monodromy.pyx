# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled monodromy propagation kernel.

Same contract as ``_monodromy_py.propagate_batch``: classic RK4 for the
batched 2x2 system Y' = [[0, 1], [-lam, p(x)]] Y across one period.
"""

import numpy as np

cimport cython
cimport numpy as cnp

cnp.import_array()

COMPILED = True


@cython.boundscheck(False)
@cython.wraparound(False)
def propagate_batch(p, lams, double h):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] parr = np.ascontiguousarray(p, dtype=np.float64)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] larr = np.ascontiguousarray(
        np.atleast_1d(lams), dtype=np.complex128)
    cdef Py_ssize_t nsamp = parr.shape[0]
    cdef Py_ssize_t nsteps = (nsamp - 1) // 2
    if nsamp != 2 * nsteps + 1:
        raise ValueError("p must have 2*nsteps + 1 samples")
    cdef Py_ssize_t nb = larr.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] out = np.empty((nb, 2, 2), dtype=np.complex128)

    cdef double complex lam, nl
    cdef double complex y00, y01, y10, y11
    cdef double complex a00, a01, a10, a11
    cdef double complex b00, b01, b10, b11
    cdef double complex c00, c01, c10, c11
    cdef double complex d00, d01, d10, d11
    cdef double complex t00, t01, t10, t11
    cdef double p0, pm, p1
    cdef double hh = 0.5 * h
    cdef double h6 = h / 6.0
    cdef Py_ssize_t i, s

    for i in range(nb):
        lam = larr[i]
        nl = -lam
        y00 = 1.0; y01 = 0.0; y10 = 0.0; y11 = 1.0
        for s in range(nsteps):
            p0 = parr[2 * s]
            pm = parr[2 * s + 1]
            p1 = parr[2 * s + 2]
            # k1 = A(x0) Y
            a00 = y10; a01 = y11
            a10 = nl * y00 + p0 * y10; a11 = nl * y01 + p0 * y11
            # k2 = A(xm)(Y + h/2 k1)
            t00 = y00 + hh * a00; t01 = y01 + hh * a01
            t10 = y10 + hh * a10; t11 = y11 + hh * a11
            b00 = t10; b01 = t11
            b10 = nl * t00 + pm * t10; b11 = nl * t01 + pm * t11
            # k3 = A(xm)(Y + h/2 k2)
            t00 = y00 + hh * b00; t01 = y01 + hh * b01
            t10 = y10 + hh * b10; t11 = y11 + hh * b11
            c00 = t10; c01 = t11
            c10 = nl * t00 + pm * t10; c11 = nl * t01 + pm * t11
            # k4 = A(x1)(Y + h k3)
            t00 = y00 + h * c00; t01 = y01 + h * c01
            t10 = y10 + h * c10; t11 = y11 + h * c11
            d00 = t10; d01 = t11
            d10 = nl * t00 + p1 * t10; d11 = nl * t01 + p1 * t11
            y00 = y00 + h6 * (a00 + 2.0 * b00 + 2.0 * c00 + d00)
            y01 = y01 + h6 * (a01 + 2.0 * b01 + 2.0 * c01 + d01)
            y10 = y10 + h6 * (a10 + 2.0 * b10 + 2.0 * c10 + d10)
            y11 = y11 + h6 * (a11 + 2.0 * b11 + 2.0 * c11 + d11)
        out[i, 0, 0] = y00
        out[i, 0, 1] = y01
        out[i, 1, 0] = y10
        out[i, 1, 1] = y11
    return out
