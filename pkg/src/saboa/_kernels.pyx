# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled aggregation kernels; see ``_kernels_py`` for the reference version.

Both kernels that normalize return the normalizing total (relative to the
largest term), which the caller must check is finite and positive.

Inner loops run over contiguous rows with no branches so the compiler can
vectorize them (including the calls to ``exp``).
"""

from libc.math cimport exp


cdef inline double _dot(const double* a, const double* b, Py_ssize_t n) noexcept nogil:
    cdef double s = 0.0
    cdef Py_ssize_t j
    for j in range(n):
        s += a[j] * b[j]
    return s


def squint_step(const double[:, ::1] points, const double[::1] grad,
                const double[::1] theta, const double[::1] eta,
                const double[::1] log_prior, const double[::1] log_eta,
                double[:, ::1] A, double[::1] r, double[::1] weights,
                double[::1] theta_out):
    cdef Py_ssize_t K = points.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    cdef Py_ssize_t n = eta.shape[0]
    cdef Py_ssize_t k, i
    cdef double gt, rk, x
    cdef double* row
    cdef double total
    with nogil:
        gt = _dot(&grad[0], &theta[0], d)
        for k in range(K):
            rk = gt - _dot(&points[k, 0], &grad[0], d)
            r[k] = rk
            row = &A[k, 0]
            for i in range(n):
                x = eta[i] * rk
                row[i] += x - x * x
        total = _normalize(A, log_prior, log_eta, weights)
        _combine(points, weights, theta_out)
    return total


def normalize_log_weights(const double[:, ::1] A, const double[::1] log_prior,
                          const double[::1] log_eta, double[::1] weights):
    return _normalize(A, log_prior, log_eta, weights)


cdef void _combine(const double[:, ::1] points, const double[::1] weights,
                   double[::1] out) noexcept nogil:
    cdef Py_ssize_t K = points.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    cdef Py_ssize_t k, j
    cdef double w
    cdef const double* p
    for j in range(d):
        out[j] = 0.0
    for k in range(K):
        w = weights[k]
        p = &points[k, 0]
        for j in range(d):
            out[j] += w * p[j]


cdef double _normalize(const double[:, ::1] A, const double[::1] log_prior,
                     const double[::1] log_eta, double[::1] weights) noexcept nogil:
    cdef Py_ssize_t K = A.shape[0]
    cdef Py_ssize_t n = A.shape[1]
    cdef Py_ssize_t k, i
    cdef double zmax, z, m, s, c, total = 0.0
    cdef const double* row
    zmax = A[0, 0] + log_eta[0] + log_prior[0]
    for k in range(K):
        row = &A[k, 0]
        m = row[0] + log_eta[0]
        for i in range(1, n):
            z = row[i] + log_eta[i]
            m = z if z > m else m
        m += log_prior[k]
        if m > zmax:
            zmax = m
    for k in range(K):
        row = &A[k, 0]
        c = log_prior[k] - zmax
        s = 0.0
        for i in range(n):
            s += exp(row[i] + log_eta[i] + c)
        weights[k] = s
        total += s
    # the caller rejects a zero or non-finite total; compiled with fast-math,
    # NaN tests here would not be reliable
    s = 1.0 / total
    for k in range(K):
        weights[k] *= s
    return total


def linear_regrets(const double[:, ::1] points, const double[::1] grad,
                   const double[::1] theta, double[::1] r):
    cdef Py_ssize_t K = points.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    cdef Py_ssize_t k
    cdef double gt
    with nogil:
        gt = _dot(&grad[0], &theta[0], d)
        for k in range(K):
            r[k] = gt - _dot(&points[k, 0], &grad[0], d)
