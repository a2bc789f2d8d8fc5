# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False, language_level=3
"""Compiled dense-network kernels; same contract as ``_kernels_py``.

Matrix products go straight to BLAS dgemm, so one Python call covers the
whole network. Arrays are row-major; dgemm sees them as their transposes.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()


cdef inline void _gemm(char *ta, char *tb, int m, int n, int k, const double *a, int lda,
                       const double *b, int ldb, double beta, double *c, int ldc) noexcept nogil:
    cdef double one = 1.0
    dgemm(ta, tb, &m, &n, &k, &one, <double *>a, &lda, <double *>b, &ldb, &beta, c, &ldc)


def forward(const double[::1] params, sizes, const double[:, ::1] x, double slope):
    cdef Py_ssize_t n_layers = len(sizes) - 1
    cdef int batch = x.shape[0]
    cdef Py_ssize_t k, n, o, j, total
    cdef int n_in, n_out
    cdef Py_ssize_t w_off = 0, b_off
    cdef const double[:, ::1] a = x
    cdef double[:, ::1] z
    cdef double *zp
    acts = [np.asarray(x)]
    for k in range(n_layers):
        n_in = sizes[k]
        n_out = sizes[k + 1]
        b_off = w_off + n_in * n_out
        out = np.empty((batch, n_out))
        z = out
        zp = &z[0, 0]
        with nogil:
            for n in range(batch):
                for o in range(n_out):
                    zp[n * n_out + o] = params[b_off + o]
            # z^T (out x batch) = W (out x in) . a^T (in x batch)
            _gemm(b"T", b"N", n_out, batch, n_in, &params[w_off], n_in,
                  &a[0, 0], n_in, 1.0, zp, n_out)
            if k != n_layers - 1:
                total = batch * n_out
                for j in range(total):
                    if zp[j] < 0.0:
                        zp[j] *= slope
        acts.append(out)
        a = z
        w_off = b_off + n_out
    return acts


def backward(const double[::1] params, sizes, acts, const double[:, ::1] grad_out, double slope,
             double[::1] grad):
    cdef Py_ssize_t n_layers = len(sizes) - 1
    cdef int batch = grad_out.shape[0]
    cdef Py_ssize_t k, n, o, j, total
    cdef int n_in, n_out
    cdef Py_ssize_t w_off, b_off
    cdef const double[:, ::1] delta = grad_out
    cdef double[:, ::1] prev
    cdef const double[:, ::1] a_in
    cdef const double *ap
    cdef double *pp
    offsets = []
    w_off = 0
    for k in range(n_layers):
        offsets.append(w_off)
        w_off += sizes[k] * sizes[k + 1] + sizes[k + 1]
    for k in range(n_layers - 1, -1, -1):
        n_in = sizes[k]
        n_out = sizes[k + 1]
        w_off = offsets[k]
        b_off = w_off + n_in * n_out
        a_in = acts[k]
        ap = &a_in[0, 0]
        if k > 0:
            prev = np.empty((batch, n_in))
            pp = &prev[0, 0]
        with nogil:
            for o in range(n_out):
                grad[b_off + o] = 0.0
            for n in range(batch):
                for o in range(n_out):
                    grad[b_off + o] += delta[n, o]
            # gW^T (in x out) = a^T (in x batch) . delta (batch x out)
            _gemm(b"N", b"T", n_in, n_out, batch, ap, n_in, &delta[0, 0], n_out,
                  0.0, &grad[w_off], n_in)
            if k > 0:
                # prev^T (in x batch) = W^T (in x out) . delta^T (out x batch)
                _gemm(b"N", b"N", n_in, batch, n_out, &params[w_off], n_in,
                      &delta[0, 0], n_out, 0.0, pp, n_in)
                total = batch * n_in
                for j in range(total):
                    if ap[j] < 0.0:
                        pp[j] *= slope
        if k > 0:
            delta = prev
    return np.asarray(grad)


def adam(double[::1] params, const double[::1] grad, double[::1] m, double[::1] v,
         long t, double lr, double beta1, double beta2, double eps):
    cdef Py_ssize_t i
    cdef double g
    cdef double c1 = 1.0 - pow(beta1, <double>t)
    cdef double c2 = 1.0 - pow(beta2, <double>t)
    with nogil:
        for i in range(params.shape[0]):
            g = grad[i]
            m[i] = beta1 * m[i] + (1.0 - beta1) * g
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g
            params[i] -= (lr / c1) * m[i] / (sqrt(v[i] / c2) + eps)
