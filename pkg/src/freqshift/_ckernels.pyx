# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled log-likelihood kernels.

Both kernels return the shift-dependent part of the two-photon log-likelihood,
sum_i log(1 + nu * alpha_i * cos(omega * dt_i)); an event of zero density
contributes -inf.
"""
from libc.math cimport cos, sin, log

cdef enum:
    BLOCK = 8
    RESYNC = 64


cdef inline double _term(double na, double c) noexcept nogil:
    cdef double t = 1.0 + na * c
    return t if t > 0.0 else 0.0


def loglik_point(const double[::1] dt, const double[::1] alpha, double nu, double omega):
    cdef Py_ssize_t i, n = dt.shape[0]
    cdef double acc = 0.0, prod = 1.0
    with nogil:
        for i in range(n):
            prod *= _term(nu * alpha[i], cos(omega * dt[i]))
            if (i + 1) % BLOCK == 0:
                acc += log(prod)
                prod = 1.0
        acc += log(prod)
    return acc


def loglik_scan(const double[::1] dt, const double[::1] alpha, double nu,
                double omega0, double step, double[::1] out):
    """Add the log-likelihood at omega0 + k*step to out[k] for every k.

    cos/sin of each event advance by rotation along the grid and are
    recomputed exactly every RESYNC points to bound drift.
    """
    cdef Py_ssize_t n = dt.shape[0], count = out.shape[0]
    cdef Py_ssize_t b, j, k, m
    cdef double c[BLOCK]
    cdef double s[BLOCK]
    cdef double cr[BLOCK]
    cdef double sr[BLOCK]
    cdef double na[BLOCK]
    cdef double prod, cj, x
    with nogil:
        b = 0
        while b < n:
            m = n - b if n - b < BLOCK else BLOCK
            for j in range(m):
                x = step * dt[b + j]
                cr[j] = cos(x)
                sr[j] = sin(x)
                na[j] = nu * alpha[b + j]
            for k in range(count):
                if k % RESYNC == 0:
                    for j in range(m):
                        x = (omega0 + k * step) * dt[b + j]
                        c[j] = cos(x)
                        s[j] = sin(x)
                prod = 1.0
                for j in range(m):
                    prod *= _term(na[j], c[j])
                    cj = c[j]
                    c[j] = cj * cr[j] - s[j] * sr[j]
                    s[j] = s[j] * cr[j] + cj * sr[j]
                out[k] += log(prod)
            b += BLOCK
