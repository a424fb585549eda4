# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled conv/pool kernels; same contracts as ``_pykernels``.

Convolution unrolls one sample at a time into a ``(c*k, t)`` column buffer and
hands the products to BLAS ``dgemm`` (via scipy's Cython bindings), so no
full-batch im2col copy or transpose is ever materialised.
"""
import numpy as np
cimport numpy as cnp
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

BACKEND = "cython"


cdef inline void gemm_rm(char ta, char tb, int m, int n, int k, double alpha,
                         const double* a, int lda, const double* b, int ldb,
                         double beta, double* c, int ldc) noexcept nogil:
    # row-major C = op(A) @ op(B), expressed as column-major C^T = op(B)^T @ op(A)^T
    dgemm(&tb, &ta, &n, &m, &k, &alpha, <double*>b, &ldb, <double*>a, &lda, &beta, c, &ldc)


cdef inline void im2col(const double* x, double* cols, int nc, int w, int k, int t_out) noexcept nogil:
    cdef int c, j, t
    cdef const double* src
    cdef double* dst
    for c in range(nc):
        for j in range(k):
            src = x + c * w + j
            dst = cols + (c * k + j) * t_out
            for t in range(t_out):
                dst[t] = src[t]


def conv1d_forward(const double[:, :, ::1] x, const double[:, :, ::1] weight,
                   const double[::1] bias):
    cdef int nb = x.shape[0], nc = x.shape[1], w = x.shape[2]
    cdef int no = weight.shape[0], k = weight.shape[2]
    cdef int t_out = w - k + 1
    cdef int ck = nc * k
    out_arr = np.empty((nb, no, t_out))
    cols_arr = np.empty((ck, t_out))
    cdef double[:, :, ::1] out = out_arr
    cdef double[:, ::1] cols = cols_arr
    cdef int b, o, t
    cdef double bv
    with nogil:
        for b in range(nb):
            for o in range(no):
                bv = bias[o]
                for t in range(t_out):
                    out[b, o, t] = bv
            im2col(&x[b, 0, 0], &cols[0, 0], nc, w, k, t_out)
            # out[b] (no x t) += W (no x ck) @ cols (ck x t)
            gemm_rm(b'N', b'N', no, t_out, ck, 1.0, &weight[0, 0, 0], ck,
                    &cols[0, 0], t_out, 1.0, &out[b, 0, 0], t_out)
    return out_arr


def conv1d_backward(const double[:, :, ::1] x, const double[:, :, ::1] weight,
                    const double[:, :, ::1] grad_out):
    cdef int nb = x.shape[0], nc = x.shape[1], w = x.shape[2]
    cdef int no = weight.shape[0], k = weight.shape[2]
    cdef int t_out = grad_out.shape[2]
    cdef int ck = nc * k
    gx_arr = np.zeros((nb, nc, w))
    gw_arr = np.zeros((no, nc, k))
    gb_arr = np.zeros(no)
    cols_arr = np.empty((ck, t_out))
    dcols_arr = np.empty((ck, t_out))
    cdef double[:, :, ::1] gx = gx_arr
    cdef double[:, :, ::1] gw = gw_arr
    cdef double[::1] gb = gb_arr
    cdef double[:, ::1] cols = cols_arr
    cdef double[:, ::1] dcols = dcols_arr
    cdef int b, o, c, j, t
    cdef double s
    cdef double* dst
    cdef const double* src
    with nogil:
        for b in range(nb):
            for o in range(no):
                s = 0.0
                for t in range(t_out):
                    s = s + grad_out[b, o, t]
                gb[o] += s
            im2col(&x[b, 0, 0], &cols[0, 0], nc, w, k, t_out)
            # dW (no x ck) += G_b (no x t) @ cols^T (t x ck)
            gemm_rm(b'N', b'T', no, ck, t_out, 1.0, &grad_out[b, 0, 0], t_out,
                    &cols[0, 0], t_out, 1.0, &gw[0, 0, 0], ck)
            # dcols (ck x t) = W^T (ck x no) @ G_b (no x t)
            gemm_rm(b'T', b'N', ck, t_out, no, 1.0, &weight[0, 0, 0], ck,
                    &grad_out[b, 0, 0], t_out, 0.0, &dcols[0, 0], t_out)
            for c in range(nc):
                for j in range(k):
                    src = &dcols[c * k + j, 0]
                    dst = &gx[b, c, j]
                    for t in range(t_out):
                        dst[t] += src[t]
    return gx_arr, gw_arr, gb_arr


def maxpool1d_forward(const double[:, :, ::1] x):
    cdef Py_ssize_t nb = x.shape[0], nc = x.shape[1], half = x.shape[2] // 2
    out_arr = np.empty((nb, nc, half))
    idx_arr = np.empty((nb, nc, half), dtype=np.int64)
    cdef double[:, :, ::1] out = out_arr
    cdef cnp.int64_t[:, :, ::1] idx = idx_arr
    cdef Py_ssize_t b, c, i
    cdef double left, right
    with nogil:
        for b in range(nb):
            for c in range(nc):
                for i in range(half):
                    left = x[b, c, 2 * i]
                    right = x[b, c, 2 * i + 1]
                    if right > left:
                        out[b, c, i] = right
                        idx[b, c, i] = 2 * i + 1
                    else:
                        out[b, c, i] = left
                        idx[b, c, i] = 2 * i
    return out_arr, idx_arr


def maxpool1d_backward(const double[:, :, ::1] grad_out, const cnp.int64_t[:, :, ::1] index,
                       Py_ssize_t width):
    cdef Py_ssize_t nb = grad_out.shape[0], nc = grad_out.shape[1], half = grad_out.shape[2]
    gx_arr = np.zeros((nb, nc, width))
    cdef double[:, :, ::1] gx = gx_arr
    cdef Py_ssize_t b, c, i
    with nogil:
        for b in range(nb):
            for c in range(nc):
                for i in range(half):
                    gx[b, c, index[b, c, i]] += grad_out[b, c, i]
    return gx_arr
