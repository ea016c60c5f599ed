# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Memory-DD sequence kernels.

Same contract as ``memdd._pykernels``: ``X`` is ``(T, B, d_x)`` C-ordered and
every cached array is ``(T, B, d_h)``. Matrix products go through BLAS
``dgemm``; the gate/shortcut/activation arithmetic is fused into one loop.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport tanh
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()


cdef inline void _mm(bint ta, bint tb, int m, int n, int k, double alpha,
                     double* A, int lda, double* B, int ldb,
                     double beta, double* C, int ldc) noexcept nogil:
    # Row-major C = alpha*op(A) op(B) + beta*C, issued as column-major C^T = op(B)^T op(A)^T.
    cdef char ca = b'T' if tb else b'N'
    cdef char cb = b'T' if ta else b'N'
    dgemm(&ca, &cb, &n, &m, &k, &alpha, B, &ldb, A, &lda, &beta, C, &ldc)


def memdd_forward(X, W1, b, Wa, Wb, bint mult, bint s1, bint s2, bint use_tanh):
    cdef double[:, :, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[:, ::1] W1v = np.ascontiguousarray(W1, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef double[:, ::1] Wav = np.ascontiguousarray(Wa, dtype=np.float64)
    cdef double[:, ::1] Wbv = np.ascontiguousarray(Wb, dtype=np.float64)
    cdef int T = Xv.shape[0], B = Xv.shape[1], dx = Xv.shape[2]
    cdef int dh = W1v.shape[0], ld1 = W1v.shape[1]
    if ld1 != dh + dx:
        raise ValueError(f"W1 has {ld1} columns, expected {dh + dx}")
    D_ = np.empty((T, B, dh))
    G1_ = np.empty((T, B, dh))
    C_ = np.empty((T, B, dh))
    G2_ = np.empty((T, B, dh))
    H_ = np.empty((T, B, dh))
    cdef double[:, :, ::1] D = D_, G1 = G1_, C = C_, G2 = G2_, H = H_
    cdef int t, i, j
    cdef double pre, dv
    with nogil:
        for t in range(T):
            _mm(False, True, B, dh, dx, 1.0, &Xv[t, 0, 0], dx, &W1v[0, dh], ld1, 0.0, &D[t, 0, 0], dh)
            if t > 0:
                _mm(False, True, B, dh, dh, 1.0, &H[t - 1, 0, 0], dh, &W1v[0, 0], ld1, 1.0, &D[t, 0, 0], dh)
            for i in range(B):
                for j in range(dh):
                    D[t, i, j] += bv[j]
            _mm(False, True, B, dh, dh, 1.0, &D[t, 0, 0], dh, &Wav[0, 0], dh, 0.0, &G1[t, 0, 0], dh)
            for i in range(B):
                for j in range(dh):
                    dv = D[t, i, j]
                    if t > 0:
                        pre = G1[t, i, j] * C[t - 1, i, j] if mult else G1[t, i, j] + C[t - 1, i, j]
                    else:
                        pre = 0.0 if mult else G1[t, i, j]
                    if s1:
                        pre += dv
                    C[t, i, j] = tanh(pre) if use_tanh else pre
            _mm(False, True, B, dh, dh, 1.0, &C[t, 0, 0], dh, &Wbv[0, 0], dh, 0.0, &G2[t, 0, 0], dh)
            for i in range(B):
                for j in range(dh):
                    dv = D[t, i, j]
                    pre = G2[t, i, j] * dv if mult else G2[t, i, j] + dv
                    if s2:
                        pre += dv
                    H[t, i, j] = tanh(pre) if use_tanh else pre
    return D_, G1_, C_, G2_, H_


def memdd_backward(X, W1, Wa, Wb, D_, G1_, C_, G2_, H_, dH,
                   bint mult, bint s1, bint s2, bint use_tanh):
    cdef double[:, :, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[:, ::1] W1v = np.ascontiguousarray(W1, dtype=np.float64)
    cdef double[:, ::1] Wav = np.ascontiguousarray(Wa, dtype=np.float64)
    cdef double[:, ::1] Wbv = np.ascontiguousarray(Wb, dtype=np.float64)
    cdef double[:, :, ::1] D = np.ascontiguousarray(D_, dtype=np.float64)
    cdef double[:, :, ::1] G1 = np.ascontiguousarray(G1_, dtype=np.float64)
    cdef double[:, :, ::1] C = np.ascontiguousarray(C_, dtype=np.float64)
    cdef double[:, :, ::1] G2 = np.ascontiguousarray(G2_, dtype=np.float64)
    cdef double[:, :, ::1] H = np.ascontiguousarray(H_, dtype=np.float64)
    cdef int T = Xv.shape[0], B = Xv.shape[1], dx = Xv.shape[2]
    cdef int dh = W1v.shape[0], ld1 = W1v.shape[1]

    dW1_ = np.zeros((dh, ld1))
    db_ = np.zeros(dh)
    dWa_ = np.zeros((dh, dh))
    dWb_ = np.zeros((dh, dh))
    cdef double[:, ::1] dW1 = dW1_, dWa = dWa_, dWb = dWb_
    cdef double[::1] db = db_
    cdef double[:, ::1] dhn = np.array(dH, dtype=np.float64, order="C")
    cdef double[:, ::1] dcn = np.zeros((B, dh))
    cdef double[:, ::1] dpre2 = np.empty((B, dh))
    cdef double[:, ::1] dg = np.empty((B, dh))
    cdef double[:, ::1] dd = np.empty((B, dh))
    cdef double[:, ::1] dc = np.empty((B, dh))
    cdef int t, i, j
    cdef double y, dp, cp, g
    with nogil:
        for t in range(T - 1, -1, -1):
            # decision group
            for i in range(B):
                for j in range(dh):
                    y = H[t, i, j]
                    dp = dhn[i, j] * (1.0 - y * y) if use_tanh else dhn[i, j]
                    if mult:
                        dg[i, j] = dp * D[t, i, j]
                        dd[i, j] = dp * G2[t, i, j]
                    else:
                        dg[i, j] = dp
                        dd[i, j] = dp
                    if s2:
                        dd[i, j] += dp
                    dc[i, j] = dcn[i, j]
            _mm(True, False, dh, dh, B, 1.0, &dg[0, 0], dh, &C[t, 0, 0], dh, 1.0, &dWb[0, 0], dh)
            _mm(False, False, B, dh, dh, 1.0, &dg[0, 0], dh, &Wbv[0, 0], dh, 1.0, &dc[0, 0], dh)
            # memory group
            for i in range(B):
                for j in range(dh):
                    y = C[t, i, j]
                    dp = dc[i, j] * (1.0 - y * y) if use_tanh else dc[i, j]
                    cp = C[t - 1, i, j] if t > 0 else 0.0
                    g = G1[t, i, j]
                    if mult:
                        dg[i, j] = dp * cp
                        dcn[i, j] = dp * g
                    else:
                        dg[i, j] = dp
                        dcn[i, j] = dp
                    if s1:
                        dd[i, j] += dp
            _mm(False, False, B, dh, dh, 1.0, &dg[0, 0], dh, &Wav[0, 0], dh, 1.0, &dd[0, 0], dh)
            _mm(True, False, dh, dh, B, 1.0, &dg[0, 0], dh, &D[t, 0, 0], dh, 1.0, &dWa[0, 0], dh)
            # fusion layer
            if t > 0:
                _mm(True, False, dh, dh, B, 1.0, &dd[0, 0], dh, &H[t - 1, 0, 0], dh, 1.0, &dW1[0, 0], ld1)
            _mm(True, False, dh, dx, B, 1.0, &dd[0, 0], dh, &Xv[t, 0, 0], dx, 1.0, &dW1[0, dh], ld1)
            for i in range(B):
                for j in range(dh):
                    db[j] += dd[i, j]
            _mm(False, False, B, dh, dh, 1.0, &dd[0, 0], dh, &W1v[0, 0], ld1, 0.0, &dhn[0, 0], dh)
    return dW1_, db_, dWa_, dWb_
