# Compiled segment-detrending kernels. Contracts match _fallback; see there
# for parameter documentation. Summation inside a segment is left-to-right,
# so results are bit-identical for a given input regardless of caller-side
# parallelism.

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, pow

cnp.import_array()


def segment_residuals(double[:, ::1] profiles, double[:, ::1] design, double[:, ::1] proj):
    cdef Py_ssize_t B = profiles.shape[0]
    cdef Py_ssize_t T = profiles.shape[1]
    cdef Py_ssize_t s = design.shape[0]
    cdef Py_ssize_t p = design.shape[1]
    cdef Py_ssize_t M = T // s
    out_arr = np.empty((B, 2 * M, s), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef double[::1] coef = np.empty(p, dtype=np.float64)
    cdef Py_ssize_t b, v, j, k, c, start
    cdef double acc
    with nogil:
        for b in range(B):
            for v in range(2 * M):
                if v < M:
                    start = v * s
                else:
                    # segment M+j starts at T-(j+1)*s
                    start = T - (v - M + 1) * s
                for c in range(p):
                    acc = 0.0
                    for k in range(s):
                        acc += proj[c, k] * profiles[b, start + k]
                    coef[c] = acc
                for k in range(s):
                    acc = profiles[b, start + k]
                    for c in range(p):
                        acc -= design[k, c] * coef[c]
                    out[b, v, k] = acc
    return out_arr


def pair_f2(double[:, ::1] rx, double[:, ::1] ry):
    cdef Py_ssize_t n_seg = rx.shape[0]
    cdef Py_ssize_t s = rx.shape[1]
    out_arr = np.empty(n_seg, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t v, k
    cdef double acc
    with nogil:
        for v in range(n_seg):
            acc = 0.0
            for k in range(s):
                acc += rx[v, k] * ry[v, k]
            out[v] = acc / s
    return out_arr


cdef inline double _signed_power(double f2, double e) nogil:
    cdef double a = fabs(f2)
    cdef double pw
    if e == 1.0:
        pw = a
    elif e == 2.0:
        pw = a * a
    elif e == 0.5:
        pw = a**0.5
    else:
        pw = pow(a, e)
    if f2 > 0.0:
        return pw
    elif f2 < 0.0:
        return -pw
    return 0.0


def panel_sign_power_means(double[:, :, ::1] resid, double[::1] q_values):
    cdef Py_ssize_t N = resid.shape[0]
    cdef Py_ssize_t n_seg = resid.shape[1]
    cdef Py_ssize_t s = resid.shape[2]
    cdef Py_ssize_t nq = q_values.shape[0]
    out_arr = np.zeros((nq, N, N), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, j, v, k, qi
    cdef double f2, val
    with nogil:
        for i in range(N):
            for j in range(i + 1):
                for v in range(n_seg):
                    f2 = 0.0
                    for k in range(s):
                        f2 += resid[i, v, k] * resid[j, v, k]
                    f2 /= s
                    for qi in range(nq):
                        out[qi, i, j] += _signed_power(f2, 0.5 * q_values[qi])
                for qi in range(nq):
                    val = out[qi, i, j] / n_seg
                    out[qi, i, j] = val
                    out[qi, j, i] = val
    return out_arr
